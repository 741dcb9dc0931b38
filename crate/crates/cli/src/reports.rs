//! Serializable report types shared by the subcommands. All floats are
//! rounded to 12 significant digits before serialization; outputs are
//! byte-identical for identical flags, seed and environment.

use crate::fmt::sig12;
use serde::Serialize;
use serde_json::Value;
use thomson5::families::{BifurcationRecord, CriticalReport, FamilyLabel};
use thomson5::newton::NewtonStatus;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Provenance block attached to every JSON output. The timestamp is taken
/// from the SOURCE_DATE_EPOCH environment variable when set (epoch
/// seconds) and omitted otherwise, keeping outputs reproducible.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub settings: Value,
    pub tool_version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
}

impl Manifest {
    pub fn new(command: String, seed: Option<u64>, settings: Value) -> Self {
        let timestamp = std::env::var("SOURCE_DATE_EPOCH")
            .ok()
            .and_then(|v| v.parse::<u64>().ok());
        Self {
            command,
            seed,
            settings,
            tool_version: TOOL_VERSION.to_string(),
            timestamp,
        }
    }
}

pub fn status_name(status: NewtonStatus) -> &'static str {
    match status {
        NewtonStatus::Converged => "converged",
        NewtonStatus::MaxIters => "max_iters",
        NewtonStatus::SingularSystem => "singular_system",
        NewtonStatus::LeftDomain => "left_domain",
    }
}

#[derive(Debug, Serialize)]
pub struct RunRecord {
    pub run: usize,
    pub status: &'static str,
    pub iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grad_norm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energy: Option<f64>,
    pub family: Option<&'static str>,
    pub variant: Option<&'static str>,
}

#[derive(Debug, Serialize)]
pub struct TallyEntry {
    pub family: &'static str,
    pub variant: &'static str,
    pub count: usize,
    /// Smallest converged energy among the runs matched to this family.
    pub energy: f64,
}

#[derive(Debug, Serialize)]
pub struct FailureCounts {
    pub max_iters: usize,
    pub singular_system: usize,
    pub left_domain: usize,
}

#[derive(Debug, Serialize)]
pub struct SolveReport {
    pub manifest: Manifest,
    pub s: f64,
    pub starts: usize,
    pub runs: Vec<RunRecord>,
    pub tally: Vec<TallyEntry>,
    pub unknown_count: usize,
    pub failures: FailureCounts,
}

#[derive(Debug, Serialize)]
pub struct AnalyzeReport {
    pub manifest: Manifest,
    pub s: f64,
    pub config: String,
    pub family: Option<&'static str>,
    pub variant: Option<&'static str>,
    pub energy: f64,
    pub eigenvalues: Vec<f64>,
    pub morse_index: usize,
    pub nullity: usize,
    pub morse_bott_verified: bool,
}

impl AnalyzeReport {
    pub fn from_report(
        manifest: Manifest,
        s: f64,
        config: String,
        report: &CriticalReport,
    ) -> Self {
        Self {
            manifest,
            s: sig12(s),
            config,
            family: report.family.map(FamilyLabel::name),
            variant: report.family.map(FamilyLabel::variant_name),
            energy: sig12(report.energy),
            eigenvalues: report.eigenvalues.iter().map(|&l| sig12(l)).collect(),
            morse_index: report.morse_index,
            nullity: report.nullity,
            morse_bott_verified: report.morse_bott_verified,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct BracketJson {
    pub s_before: f64,
    pub value_before: f64,
    pub s_after: f64,
    pub value_after: f64,
}

#[derive(Debug, Serialize)]
pub struct BifurcationJson {
    pub family: &'static str,
    pub variant: &'static str,
    pub s_star: f64,
    pub transition: &'static str,
    pub details: BracketJson,
}

impl From<&BifurcationRecord> for BifurcationJson {
    fn from(rec: &BifurcationRecord) -> Self {
        Self {
            family: rec.family.name(),
            variant: rec.family.variant_name(),
            s_star: sig12(rec.s_star),
            transition: rec.transition.name(),
            details: BracketJson {
                s_before: sig12(rec.details.s_before),
                value_before: sig12(rec.details.value_before),
                s_after: sig12(rec.details.s_after),
                value_after: sig12(rec.details.value_after),
            },
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ScanReport {
    pub manifest: Manifest,
    pub s_min: f64,
    pub s_max: f64,
    pub step: f64,
    pub records: Vec<BifurcationJson>,
}

/// Serialize a report as one JSON document with a trailing newline.
pub fn to_json_line<T: Serialize>(value: &T) -> String {
    let mut out = serde_json::to_string_pretty(value).expect("report serialization");
    out.push('\n');
    out
}
