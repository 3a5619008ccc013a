//! Tolerances and solver knobs, kept in one place so every comparison in the
//! crate draws from the same policy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Entering-variable rule for the simplex engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PivotRule {
    /// Most negative reduced cost, falling back to Bland's rule after a long
    /// run of degenerate pivots.
    Dantzig,
    /// Lowest-index rule throughout.
    Bland,
}

impl std::str::FromStr for PivotRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dantzig" => Ok(PivotRule::Dantzig),
            "bland" => Ok(PivotRule::Bland),
            other => Err(Error::Incompatible(format!("unknown pivot rule `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Primal feasibility tolerance.
    pub tol_feas: f64,
    /// Dual feasibility (optimality) tolerance, relative to the objective scale.
    pub tol_opt: f64,
    pub pivot: PivotRule,
    /// Pivots between refactorizations of the basis inverse.
    pub refactor_interval: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol_feas: 1e-9,
            tol_opt: 1e-7,
            pivot: PivotRule::Dantzig,
            refactor_interval: 50,
        }
    }
}

impl SolverConfig {
    pub fn with_pivot(mut self, pivot: PivotRule) -> Self {
        self.pivot = pivot;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0 && v < 1.0;
        if !ok(self.tol_feas) || !ok(self.tol_opt) {
            return Err(Error::Incompatible(
                "tolerances must lie strictly between 0 and 1".into(),
            ));
        }
        if self.refactor_interval == 0 {
            return Err(Error::Incompatible("refactor_interval must be positive".into()));
        }
        Ok(())
    }
}

/// Full run configuration as read from a config file and command-line flags.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub solver: SolverConfig,
    /// Maximum number of assignments the brute-force oracle may enumerate.
    pub budget: u64,
    /// Seed for random instance generation.
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            solver: SolverConfig::default(),
            budget: 10_000_000,
            seed: 0,
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| {
            let (line, column) = e
                .span()
                .map(|span| line_col(text, span.start))
                .unwrap_or((0, 0));
            Error::Parse {
                line,
                column,
                message: e.message().to_string(),
            }
        })?;
        cfg.solver.validate()?;
        Ok(cfg)
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = text.get(..offset).unwrap_or(text);
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(before.len(), |p| before.len() - p - 1) + 1;
    (line, column)
}
