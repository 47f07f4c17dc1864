//! Line-delimited report records. Field order is fixed by declaration
//! order, so identical runs serialize identically.

use serde::Serialize;

use kisin_models::lattice::LatticeWire;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Skipped,
    /// No model at some level (not a violation by itself).
    NoModel,
    Violation,
}

#[derive(Clone, Debug, Serialize)]
pub struct Params {
    pub p: u32,
    pub f: u32,
    pub g: u32,
    pub d: usize,
    pub n: usize,
    pub e: u32,
    pub exponents: Option<Vec<u32>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EnumerateRecord {
    pub instance: u64,
    pub status: Status,
    pub reason: Option<String>,
    pub params: Params,
    pub window: Option<(i64, i64)>,
    pub quotient_dim: usize,
    pub model_count: usize,
    pub free_count: usize,
    pub torsion_histogram: Vec<usize>,
    pub max_torsion: usize,
    pub torsion_bound: (u64, u64),
    pub max_j: u32,
    pub certificates_ok: bool,
    pub planted_found: Option<bool>,
    pub widened_equal: Option<bool>,
    pub counterexample: Option<LatticeWire>,
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelSummary {
    pub level: usize,
    pub model_count: usize,
    pub free_count: usize,
    pub max_torsion: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct SplitSummary {
    pub upper: usize,
    pub lower: usize,
    pub kernel_dim: usize,
    pub ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct TowerRecord {
    pub instance: u64,
    pub status: Status,
    pub reason: Option<String>,
    pub params: Params,
    pub depth: usize,
    pub levels: Vec<LevelSummary>,
    /// `|f_{n,n-1}(𝒵_n)|` for `n = 1..=depth`.
    pub image_sizes: Vec<usize>,
    pub planted_found: Option<bool>,
    pub chosen: Vec<LatticeWire>,
    pub chosen_free: bool,
    pub stabilization: Vec<usize>,
    pub splitting: Vec<SplitSummary>,
    pub assembled: Option<LatticeWire>,
    pub assembled_ok: bool,
    pub failing_factor: Option<(usize, usize)>,
    pub transfer_s: Vec<i64>,
    pub transfer_slack: i64,
    pub transfer_uniform: bool,
    pub counterexample: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleRecord {
    pub instance: u64,
    pub status: Status,
    pub reason: Option<String>,
    pub params: Params,
    pub fault_ops: Option<usize>,
    pub quotient_dim: usize,
    pub fast_count: usize,
    pub oracle_count: usize,
    pub equal: bool,
    pub counterexample: Option<LatticeWire>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CriterionRecord {
    pub criterion: u32,
    pub title: String,
    pub pass: bool,
    pub checked: usize,
    pub detail: String,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct SummaryRecord {
    pub mode: String,
    pub instances: usize,
    pub ok: usize,
    pub skipped: usize,
    pub no_model: usize,
    pub violations: usize,
    pub exit_code: i32,
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Record {
    Enumerate(EnumerateRecord),
    Tower(TowerRecord),
    Oracle(OracleRecord),
    Criterion(CriterionRecord),
    Summary(SummaryRecord),
}

impl Record {
    pub fn status(&self) -> Option<Status> {
        match self {
            Record::Enumerate(r) => Some(r.status),
            Record::Tower(r) => Some(r.status),
            Record::Oracle(r) => Some(r.status),
            Record::Criterion(r) => Some(if r.pass { Status::Ok } else { Status::Violation }),
            Record::Summary(_) => None,
        }
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("records serialize")
    }
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_INFEASIBLE: i32 = 4;

/// Count statuses and decide the exit code.
pub fn summarize(mode: &str, records: &[Record]) -> SummaryRecord {
    let mut s = SummaryRecord { mode: mode.to_string(), ..Default::default() };
    for st in records.iter().filter_map(Record::status) {
        s.instances += 1;
        match st {
            Status::Ok => s.ok += 1,
            Status::Skipped => s.skipped += 1,
            Status::NoModel => s.no_model += 1,
            Status::Violation => s.violations += 1,
        }
    }
    s.exit_code = if s.violations > 0 {
        EXIT_VIOLATION
    } else if s.instances > 0 && s.skipped == s.instances {
        EXIT_INFEASIBLE
    } else {
        EXIT_OK
    };
    s
}
