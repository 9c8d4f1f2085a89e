//! Fit reports: one JSON object per line, one line per fitted exponent.

use levydiff_core::io::format_snapshot;
use levydiff_core::{DensitySnapshot, ExponentFit, FitMethod};
use serde::{Deserialize, Serialize};

use crate::output::sha256_hex;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    /// Sweep point label.
    pub point: String,
    /// Snapshot time for per-snapshot fits, ms.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub time: Option<f64>,
    pub exponent: f64,
    pub ci95: f64,
    pub r_squared: f64,
    pub method: FitMethod,
    /// SHA-256 of each input snapshot in its file form.
    pub input_digests: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub note: Option<String>,
}

impl FitRecord {
    pub fn new(point: &str, fit: &ExponentFit, inputs: &[String]) -> Self {
        FitRecord {
            point: point.to_string(),
            time: None,
            exponent: fit.exponent,
            ci95: fit.ci95,
            r_squared: fit.r_squared,
            method: fit.method,
            input_digests: inputs.to_vec(),
            note: None,
        }
    }

    pub fn at(mut self, time: f64) -> Self {
        self.time = Some(time);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

pub fn snapshot_digest(s: &DensitySnapshot) -> String {
    sha256_hex(format_snapshot(s).as_bytes())
}

pub fn to_lines(records: &[FitRecord]) -> String {
    records
        .iter()
        .map(|r| serde_json::to_string(r).expect("serializable") + "\n")
        .collect()
}

pub fn parse_lines(text: &str) -> serde_json::Result<Vec<FitRecord>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lines_round_trip() {
        let fit = ExponentFit {
            exponent: 1.25,
            ci95: 0.03,
            r_squared: 0.99,
            method: FitMethod::SelfSimilarity,
        };
        let recs = vec![
            FitRecord::new("a", &fit, &["00".into()]),
            FitRecord::new("b", &fit, &[])
                .at(10.0)
                .with_note("fallback"),
        ];
        let text = to_lines(&recs);
        assert_eq!(text.lines().count(), 2);
        assert!(text.contains("\"method\":\"self_similarity\""));
        assert_eq!(parse_lines(&text).unwrap(), recs);
    }
}
