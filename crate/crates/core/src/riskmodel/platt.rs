//! Sigmoid calibration of decision scores, `p = 1 / (1 + exp(a*z + b))`.
//!
//! Follows the Newton iteration with backtracking of Lin, Lin and Weng
//! (2007) for Platt's method, including its smoothed targets.

use super::RiskModelError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlattParams {
    pub a: f64,
    pub b: f64,
}

impl PlattParams {
    /// The identity calibration `p = sigmoid(z)`.
    pub const IDENTITY: PlattParams = PlattParams { a: -1.0, b: 0.0 };

    pub fn apply(&self, z: f64) -> f64 {
        platt_probability(self.a, self.b, z)
    }
}

pub fn platt_probability(a: f64, b: f64, z: f64) -> f64 {
    let f = a * z + b;
    if f >= 0.0 {
        let e = (-f).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + f.exp())
    }
}

const MAX_ITER: usize = 100;
const MIN_STEP: f64 = 1e-10;
const SIGMA: f64 = 1e-12;
const EPS: f64 = 1e-5;

/// Negative log-likelihood against the smoothed targets.
fn objective(z: &[f64], t: &[f64], a: f64, b: f64) -> f64 {
    z.iter()
        .zip(t)
        .map(|(&z, &t)| {
            let f = a * z + b;
            if f >= 0.0 {
                t * f + (-f).exp().ln_1p()
            } else {
                (t - 1.0) * f + f.exp().ln_1p()
            }
        })
        .sum()
}

/// Fits `(a, b)`. A positive slope would reverse the ranking, so it is
/// replaced by the constant calibration `a = 0` at the mean target.
pub fn fit_platt(scores: &[f64], labels: &[bool]) -> Result<PlattParams, RiskModelError> {
    if scores.len() != labels.len() {
        return Err(RiskModelError::DimensionMismatch { expected: labels.len(), got: scores.len() });
    }
    let prior1 = labels.iter().filter(|&&y| y).count() as f64;
    let prior0 = labels.len() as f64 - prior1;
    if prior1 == 0.0 || prior0 == 0.0 {
        return Err(RiskModelError::SingleClass);
    }
    let hi = (prior1 + 1.0) / (prior1 + 2.0);
    let lo = 1.0 / (prior0 + 2.0);
    let t: Vec<f64> = labels.iter().map(|&y| if y { hi } else { lo }).collect();

    let mut a = 0.0;
    let mut b = ((prior0 + 1.0) / (prior1 + 1.0)).ln();
    let mut fval = objective(scores, &t, a, b);
    for _ in 0..MAX_ITER {
        let (mut h11, mut h22, mut h21, mut g1, mut g2) = (SIGMA, SIGMA, 0.0, 0.0, 0.0);
        for (&z, &ti) in scores.iter().zip(&t) {
            let p = platt_probability(a, b, z);
            let q = 1.0 - p;
            let d2 = p * q;
            h11 += z * z * d2;
            h22 += d2;
            h21 += z * d2;
            let d1 = ti - p;
            g1 += z * d1;
            g2 += d1;
        }
        if g1.abs() < EPS && g2.abs() < EPS {
            break;
        }
        let det = h11 * h22 - h21 * h21;
        let da = -(h22 * g1 - h21 * g2) / det;
        let db = -(-h21 * g1 + h11 * g2) / det;
        let gd = g1 * da + g2 * db;
        let mut step = 1.0;
        while step >= MIN_STEP {
            let (na, nb) = (a + step * da, b + step * db);
            let nf = objective(scores, &t, na, nb);
            if nf < fval + 1e-4 * step * gd {
                a = na;
                b = nb;
                fval = nf;
                break;
            }
            step /= 2.0;
        }
        if step < MIN_STEP {
            break;
        }
    }
    if a > 0.0 {
        let mean_t = t.iter().sum::<f64>() / t.len() as f64;
        return Ok(PlattParams { a: 0.0, b: (1.0 / mean_t - 1.0).ln() });
    }
    Ok(PlattParams { a, b })
}
