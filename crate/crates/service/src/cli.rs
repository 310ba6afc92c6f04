//! `icutl` subcommands. Each maps onto one library operation; failures are
//! reported as a single `error <Code>: <message>` line on stderr.

use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use icutl_core::datastore::Datastore;
use icutl_core::features::{build_dataset, features_csv, FeatureSpec};
use icutl_core::matrix::Matrix;
use icutl_core::riskmodel::{evaluate_bundle, train_all_horizons, RiskModelBundle, RiskModelError, TrainConfig};
use icutl_core::synthgen::{self, SynthConfig};
use icutl_core::{json, time};

use crate::config::{ServiceConfig, CONFIG_ENV};
use crate::error::CliError;
use crate::state::AppState;

/// Used when neither --created-at nor SOURCE_DATE_EPOCH is given, so that
/// bundles are reproducible byte for byte.
pub const DEFAULT_CREATED_AT: &str = "1970-01-01T00:00:00";

#[derive(Debug, Parser)]
#[command(name = "icutl", version, about = "ICU timelines and horizon-indexed mortality models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Table,
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset (ten CSV files).
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        patients: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// In-hospital mortality per admission.
        #[arg(long, default_value_t = 0.15)]
        mortality: f64,
        /// strong, weak, null or a non-negative number.
        #[arg(long, default_value = "strong", value_parser = parse_signal)]
        signal: f64,
        #[arg(long, default_value_t = 96.0)]
        mean_icu_los_hours: f64,
        #[arg(long, default_value_t = 4.0)]
        notes_per_day: f64,
        /// Append the case-study patient.
        #[arg(long)]
        case_study: bool,
    },
    /// Load a dataset and report row counts or the first violation.
    Ingest {
        #[arg(long)]
        data: PathBuf,
        /// Validate only (the default behaviour; kept for scripts).
        #[arg(long)]
        check: bool,
    },
    /// Train all horizon models and write a bundle.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Bundle timestamp; defaults to SOURCE_DATE_EPOCH, else the epoch.
        #[arg(long)]
        created_at: Option<String>,
        /// Also write the held-out evaluation report (CSV) here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Score a bundle against a dataset.
    Evaluate {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum, default_value_t = ReportFormat::Table)]
        format: ReportFormat,
        #[arg(long, default_value_t = icutl_core::metrics::DEFAULT_RESAMPLES)]
        resamples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write each horizon's standardized feature matrix
        /// (`features_t<hours>.csv`) into this directory.
        #[arg(long)]
        dump_features: Option<PathBuf>,
    },
    /// Run the HTTP API.
    Serve {
        #[arg(long, env = CONFIG_ENV)]
        config: PathBuf,
        /// Overrides listen_addr from the config file.
        #[arg(long)]
        listen: Option<SocketAddr>,
    },
}

fn parse_signal(s: &str) -> Result<f64, String> {
    synthgen::parse_signal(s).ok_or_else(|| format!("invalid signal strength {s:?}"))
}

fn created_at(explicit: Option<String>) -> Result<String, CliError> {
    if let Some(s) = explicit {
        let ts = time::parse(&s).ok_or_else(|| CliError::Config(format!("created_at {s:?} is not YYYY-MM-DDTHH:MM:SS")))?;
        return Ok(time::format(&ts));
    }
    match std::env::var("SOURCE_DATE_EPOCH") {
        Ok(v) => {
            let ts = v
                .trim()
                .parse()
                .ok()
                .and_then(time::from_unix_seconds)
                .ok_or_else(|| CliError::Config(format!("SOURCE_DATE_EPOCH {v:?} is not a Unix timestamp")))?;
            Ok(time::format(&ts))
        }
        Err(_) => Ok(DEFAULT_CREATED_AT.to_string()),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes()).map_err(|e| CliError::io(Path::new("<stdout>"), e))
}

/// Runs one subcommand, writing its normal output to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Synth { out: dir, patients, seed, mortality, signal, mean_icu_los_hours, notes_per_day, case_study } => {
            let cfg = SynthConfig {
                n_patients: patients,
                seed,
                mortality_base_rate: mortality,
                signal_strength: signal,
                mean_icu_los_hours,
                note_rate_per_day: notes_per_day,
                include_case_study: case_study,
            };
            let summary = synthgen::generate(&cfg, &dir)?;
            emit(out, &format!("{}\n", json::to_canonical_string(&summary.counts).expect("counts serialize")))
        }
        Command::Ingest { data, check: _ } => {
            let store = Datastore::ingest(&data)?;
            emit(out, &format!("{}\n", json::to_canonical_string(&store.counts()).expect("counts serialize")))
        }
        Command::Train { data, out: bundle_path, seed, created_at: explicit, report } => {
            let stamp = created_at(explicit)?;
            let store = Datastore::ingest(&data)?;
            let outcome = train_all_horizons(&store, &TrainConfig::with_seed(seed), &stamp)?;
            write_file(&bundle_path, &outcome.bundle.to_json())?;
            if let Some(path) = report {
                write_file(&path, &outcome.report.to_csv())?;
            }
            emit(out, &format!("bundle {} ({} models)\n", outcome.bundle.bundle_id, outcome.bundle.horizons.len()))?;
            emit(out, &outcome.report.to_table())
        }
        Command::Evaluate { bundle, data, format, resamples, seed, dump_features } => {
            let text = std::fs::read_to_string(&bundle).map_err(|e| CliError::io(&bundle, e))?;
            let bundle = RiskModelBundle::from_json(&text)?;
            let store = Datastore::ingest(&data)?;
            if let Some(dir) = dump_features {
                dump_feature_matrices(&bundle, &store, &dir)?;
            }
            let report = evaluate_bundle(&bundle, &store, resamples, seed)?;
            let body = match format {
                ReportFormat::Table => report.to_table(),
                ReportFormat::Csv => report.to_csv(),
                ReportFormat::Json => json::to_canonical_pretty(&report).expect("report serializes") + "\n",
            };
            emit(out, &body)
        }
        Command::Serve { config, listen } => {
            let mut cfg = ServiceConfig::load(&config)?;
            if let Some(addr) = listen {
                cfg.listen_addr = addr;
            }
            let runtime = tokio::runtime::Runtime::new().map_err(CliError::Server)?;
            runtime.block_on(serve(cfg))
        }
    }
}

/// Feature rows as the bundle's models see them: imputed and standardized
/// with each model's training statistics.
fn dump_feature_matrices(bundle: &RiskModelBundle, store: &Datastore, dir: &Path) -> Result<(), CliError> {
    for model in &bundle.horizons {
        let ds = build_dataset(store, model.t_hours, &FeatureSpec::default()).map_err(RiskModelError::from)?;
        let rows = ds
            .raw
            .iter()
            .map(|r| model.train_stats.transform(r))
            .collect::<Result<Vec<_>, _>>()
            .map_err(RiskModelError::from)?;
        let x = Matrix::from_rows(&rows, model.dim());
        write_file(&dir.join(format!("features_t{}.csv", model.t_hours)), &features_csv(&ds.members, &x))?;
    }
    Ok(())
}

pub async fn serve(cfg: ServiceConfig) -> Result<(), CliError> {
    let state = Arc::new(AppState::load(&cfg)?);
    let app = crate::api::router(state, cfg.static_assets_dir.as_deref());
    let listener = tokio::net::TcpListener::bind(cfg.listen_addr).await.map_err(CliError::Server)?;
    eprintln!("listening on http://{}", listener.local_addr().map_err(CliError::Server)?);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(CliError::Server)
}
