//! Naive ISO 8601 timestamps (`YYYY-MM-DDTHH:MM:SS`).
//!
//! Source data is date-shifted, so no timezone is attached anywhere.

use chrono::{Duration, NaiveDateTime};

pub type Timestamp = NaiveDateTime;

pub const FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

pub fn parse(s: &str) -> Option<Timestamp> {
    NaiveDateTime::parse_from_str(s.trim(), FORMAT).ok()
}

pub fn format(ts: &Timestamp) -> String {
    ts.format(FORMAT).to_string()
}

/// UTC wall time of a Unix timestamp.
pub fn from_unix_seconds(secs: i64) -> Option<Timestamp> {
    chrono::DateTime::from_timestamp(secs, 0).map(|t| t.naive_utc())
}

/// Signed hours from `from` to `to`.
pub fn hours_between(from: Timestamp, to: Timestamp) -> f64 {
    (to - from).num_seconds() as f64 / 3600.0
}

pub fn hours(h: i64) -> Duration {
    Duration::hours(h)
}

pub fn minutes(m: i64) -> Duration {
    Duration::minutes(m)
}

/// Serde adapter for [`Timestamp`] fields.
pub mod serde_ts {
    use super::Timestamp;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(ts: &Timestamp, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::format(ts))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Timestamp, D::Error> {
        let raw = String::deserialize(d)?;
        super::parse(&raw).ok_or_else(|| D::Error::custom(format!("bad timestamp {raw:?}")))
    }
}

/// Serde adapter for `Option<Timestamp>` fields; `None` is `null`.
pub mod serde_ts_opt {
    use super::Timestamp;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(ts: &Option<Timestamp>, s: S) -> Result<S::Ok, S::Error> {
        match ts {
            Some(ts) => s.serialize_str(&super::format(ts)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Timestamp>, D::Error> {
        let raw = Option::<String>::deserialize(d)?;
        match raw {
            None => Ok(None),
            Some(raw) => super::parse(&raw)
                .map(Some)
                .ok_or_else(|| D::Error::custom(format!("bad timestamp {raw:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip() {
        let ts = parse("2150-11-22T08:30:05").unwrap();
        assert_eq!(format(&ts), "2150-11-22T08:30:05");
        assert!(parse("2150-11-22 08:30:05").is_none());
        assert!(parse("").is_none());
    }

    #[test]
    fn hour_arithmetic() {
        let a = parse("2150-01-01T00:00:00").unwrap();
        assert_eq!(hours_between(a, a + hours(30)), 30.0);
        assert_eq!(hours_between(a + minutes(90), a), -1.5);
    }
}
