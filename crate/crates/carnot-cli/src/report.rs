//! Report rendering. Every JSON report is wrapped in the same envelope:
//!
//! ```json
//! {
//!   "schema": "carnot-report/1",
//!   "command": "degree",
//!   "config_sha256": "…",
//!   "group": "engel4",
//!   "manifold": "deg3-exp",
//!   "seed": 0,
//!   "epsilons": [1.0, 0.5, 0.3],
//!   "result": { … }
//! }
//! ```
//!
//! `config_sha256` hashes the canonical configuration text after flag
//! overrides, so a report pins the exact run that produced it. Maps are
//! ordered and floats use the shortest round-trip form, so the same
//! configuration and seed reproduce the same bytes.

use serde::Serialize;
use sha2::{Digest, Sha256};

pub const SCHEMA: &str = "carnot-report/1";

#[derive(Serialize)]
pub struct Envelope<T: Serialize> {
    pub schema: &'static str,
    pub command: String,
    pub config_sha256: String,
    pub group: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manifold: Option<String>,
    pub seed: u64,
    pub epsilons: Vec<f64>,
    pub result: T,
}

pub fn render<T: Serialize>(envelope: &Envelope<T>) -> String {
    let mut body = serde_json::to_string_pretty(envelope).expect("reports serialize");
    body.push('\n');
    body
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for byte in digest {
        hex.push_str(&format!("{byte:02x}"));
    }
    hex
}

/// Renders a CSV table: a header row plus one line per record.
pub fn csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
pub struct ValidateReport {
    pub dimension: usize,
    pub step: usize,
    pub homogeneous_dimension: u64,
    pub associativity: bool,
    pub inverse: bool,
    pub homogeneity: bool,
    pub remainder_structure: bool,
}

#[derive(Serialize)]
pub struct BchReport {
    pub dimension: usize,
    pub step: usize,
    pub polynomials: Vec<String>,
}

#[derive(Serialize)]
pub struct DegreeResult {
    pub degree: u64,
    pub witness: Vec<f64>,
    pub samples: usize,
    pub near_degenerate: usize,
}

#[derive(Serialize)]
pub struct Stratum {
    pub degree: u64,
    pub count: usize,
    pub samples: Vec<Vec<f64>>,
}

#[derive(Serialize)]
pub struct StrataResult {
    pub grid: Vec<usize>,
    pub tolerance: f64,
    pub strata: Vec<Stratum>,
    pub near_degenerate: usize,
}

#[derive(Serialize)]
pub struct MeasureResult {
    pub degree: u64,
    pub method: String,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub standard_error: Option<f64>,
    pub sample_count: usize,
}

#[derive(Serialize)]
pub struct MetricFactorEntry {
    pub radius: f64,
    pub ratio: f64,
    pub standard_error: f64,
    pub sample_count: usize,
    pub hits: usize,
    pub relative_gap: f64,
}

#[derive(Serialize)]
pub struct MetricFactorResult {
    pub point: Vec<f64>,
    pub degree: u64,
    pub theta: f64,
    pub theta_standard_error: f64,
    pub theta_sample_count: usize,
    pub tau_d_norm: f64,
    pub target: f64,
    pub entries: Vec<MetricFactorEntry>,
}

#[derive(Serialize)]
pub struct BlowupEntry {
    pub radius: f64,
    pub distance: f64,
    pub coordinate_distance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cloud_to_limit: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub limit_to_cloud: Option<f64>,
}

#[derive(Serialize)]
pub struct SubgroupResult {
    pub closed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bracket_closed: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

#[derive(Serialize)]
pub struct BlowupResult {
    pub point: Vec<f64>,
    pub limit: String,
    pub entries: Vec<BlowupEntry>,
    pub slope: f64,
    pub coordinate_slope: f64,
    pub sample_count: usize,
    pub undersampled: bool,
    pub subgroup: SubgroupResult,
}

#[derive(Serialize)]
pub struct CurvesResult {
    pub point: Vec<f64>,
    pub lambda: Vec<f64>,
    pub t_max: f64,
    pub steps: usize,
    pub max_residual: f64,
    pub g: Vec<f64>,
    pub residual_slopes: Vec<Option<f64>>,
}

#[derive(Serialize)]
pub struct ExpectationResult {
    pub manifold: String,
    pub statement: String,
    pub source: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Serialize)]
pub struct SuiteResult {
    pub passed: usize,
    pub failed: usize,
    pub expectations: Vec<ExpectationResult>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_renders_deterministically() {
        let envelope = Envelope {
            schema: SCHEMA,
            command: "degree".to_string(),
            config_sha256: sha256_hex(b"group = engel4\n"),
            group: "engel4".to_string(),
            manifold: Some("deg3-exp".to_string()),
            seed: 7,
            epsilons: vec![1.0, 0.5, 0.3],
            result: DegreeResult {
                degree: 3,
                witness: vec![0.25, -0.5],
                samples: 625,
                near_degenerate: 0,
            },
        };
        let first = render(&envelope);
        let second = render(&envelope);
        assert_eq!(first, second);
        assert!(first.starts_with("{\n  \"schema\": \"carnot-report/1\""));
        assert!(first.ends_with("}\n"));
        assert!(first.contains("\"witness\": ["));
    }

    #[test]
    fn sha256_matches_a_known_digest() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn csv_rows_join_with_commas() {
        let table = csv(
            &["radius", "distance"],
            &[vec!["0.4".to_string(), "0.53".to_string()]],
        );
        assert_eq!(table, "radius,distance\n0.4,0.53\n");
    }
}
