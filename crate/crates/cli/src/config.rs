use serde::{Deserialize, Serialize};

use kisin_models::field::is_prime;
use kisin_models::models::{DEFAULT_CEILING, DEFAULT_MAX_MODELS, ORACLE_CEILING};
use kisin_models::phi_module::INVERSE_PRECISION;
use kisin_models::tower::make_field_tower;

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Enumerate,
    Tower,
    OracleCheck,
    Suite,
}

/// How instance modules are produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Generator {
    /// `C = A diag(u^{a_i}) B`, so `L_0` is a model.
    Planted,
    /// Random polynomial entries of degree at most `e`.
    Random,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub generator: Generator,
    /// Fixed planting exponents; drawn from `0..=e` per instance when absent.
    pub exponents: Option<Vec<u32>>,
    pub p: u32,
    pub f: u32,
    pub g: u32,
    pub e: u32,
    pub d: usize,
    /// Coefficient level for `enumerate` and `oracle-check`.
    pub n: usize,
    /// Top level for `tower`.
    pub depth: usize,
    pub seed: u64,
    pub count: u64,
    /// Widening used to re-check each window (0 disables the re-check).
    pub window_slack: i64,
    /// Allowed growth of the transfer distance over the level-0 value;
    /// defaults to `ceil((r + e)/(p - 1))` with `r = e`.
    pub transfer_slack: Option<i64>,
    /// Exponent to which non-polynomial inverses are computed.
    pub precision: i64,
    pub ceiling: usize,
    pub oracle_ceiling: usize,
    pub max_models: usize,
    /// Test mode for `oracle-check`: enforce only this many of the operators.
    pub fault_ops: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            mode: Mode::Enumerate,
            generator: Generator::Planted,
            exponents: None,
            p: 3,
            f: 1,
            g: 1,
            e: 2,
            d: 1,
            n: 0,
            depth: 1,
            seed: 0,
            count: 1,
            window_slack: 0,
            transfer_slack: None,
            precision: INVERSE_PRECISION,
            ceiling: DEFAULT_CEILING,
            oracle_ceiling: ORACLE_CEILING,
            max_models: DEFAULT_MAX_MODELS,
            fault_ops: None,
        }
    }
}

const MAX_RANK: usize = 4;
const MAX_LEVEL: usize = 8;

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs serialize")
    }

    /// All parameter constraints, checked before any computation.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if !is_prime(self.p) {
            return bad(format!("p = {} is not prime", self.p));
        }
        if self.f == 0 || self.g == 0 || !self.g.is_multiple_of(self.f) {
            return bad(format!("need f | g, got f = {}, g = {}", self.f, self.g));
        }
        make_field_tower(self.p, self.f, self.g).map_err(|e| CliError::Config(e.to_string()))?;
        if self.d == 0 || self.d > MAX_RANK {
            return bad(format!("rank d = {} outside 1..={MAX_RANK}", self.d));
        }
        if self.n > MAX_LEVEL || self.depth > MAX_LEVEL {
            return bad(format!("levels are limited to {MAX_LEVEL}"));
        }
        if let Some(ex) = &self.exponents {
            if ex.len() != self.d {
                return bad(format!("{} exponents for rank {}", ex.len(), self.d));
            }
            if self.generator != Generator::Planted {
                return bad("exponents only apply to planted modules".into());
            }
        }
        if self.window_slack < 0 || self.transfer_slack.is_some_and(|x| x < 0) {
            return bad("slacks must be nonnegative".into());
        }
        if self.precision < 8 {
            return bad(format!("precision {} is below 8", self.precision));
        }
        if self.ceiling == 0 || self.oracle_ceiling == 0 || self.max_models == 0 {
            return bad("ceilings must be positive".into());
        }
        if let Some(k) = self.fault_ops {
            if k > self.p as usize {
                return bad(format!("fault_ops = {k} keeps every operator; at most {} makes a fault", self.p));
            }
        }
        Ok(())
    }
}
