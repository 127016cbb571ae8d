//! Batch harness for the simulation studies.
//!
//! A run is a pure function of its [`ExperimentConfig`]. Every cell and
//! replication draws from a seed derived from the master seed and the cell
//! coordinates, never from a shared generator, so results do not depend on
//! thread count or scheduling. Output is append-only JSON lines, a CSV
//! summary and a timing table.

mod calibration;
mod cantor;
mod convergence;
mod grid;
mod monotonicity;
mod output;

use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::SeedSpec;
use crate::error::{Error, Result};

pub use calibration::{run_calibration_cross_check, CalibrationConfig, CalibrationResult, CalibrationRow};
pub use cantor::{run_cantor_trajectory, CantorConfig, CantorPoint, CantorResult, CantorSummary, ZLaw};
pub use convergence::{run_convergence, ConvergenceConfig, ConvergencePoint, ConvergenceResult, ConvergenceSummary};
pub use grid::{
    run_rejection_grid, DegeneratePolicy, GridCell, GridConfig, GridResult, GridRow, GridSummary, SigmaMode,
};
pub use monotonicity::{run_monotonicity, MonotonicityConfig, MonotonicityResult, MonotonicityRow, SweepSummary};
pub use output::write_outputs;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ExperimentConfig {
    RejectionGrid(GridConfig),
    Monotonicity(MonotonicityConfig),
    Convergence(ConvergenceConfig),
    CantorTrajectory(CantorConfig),
    CalibrationCrossCheck(CalibrationConfig),
}

impl ExperimentConfig {
    pub fn master_seed(&self) -> u64 {
        match self {
            Self::RejectionGrid(c) => c.seed,
            Self::Monotonicity(c) => c.seed,
            Self::Convergence(c) => c.seed,
            Self::CantorTrajectory(c) => c.seed,
            Self::CalibrationCrossCheck(c) => c.seed,
        }
    }

    /// Hex SHA-256 of the canonical JSON form (defaults filled in).
    pub fn hash(&self) -> Result<String> {
        Ok(hex::encode(Sha256::digest(serde_json::to_vec(self)?)))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::RejectionGrid(c) => c.validate(),
            Self::Monotonicity(c) => c.validate(),
            Self::Convergence(c) => c.validate(),
            Self::CantorTrajectory(c) => c.validate(),
            Self::CalibrationCrossCheck(c) => c.validate(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ExperimentResult {
    RejectionGrid(GridResult),
    Monotonicity(MonotonicityResult),
    Convergence(ConvergenceResult),
    CantorTrajectory(CantorResult),
    CalibrationCrossCheck(CalibrationResult),
}

pub fn run(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    Ok(match config {
        ExperimentConfig::RejectionGrid(c) => ExperimentResult::RejectionGrid(run_rejection_grid(c)?),
        ExperimentConfig::Monotonicity(c) => ExperimentResult::Monotonicity(run_monotonicity(c)?),
        ExperimentConfig::Convergence(c) => ExperimentResult::Convergence(run_convergence(c)?),
        ExperimentConfig::CantorTrajectory(c) => ExperimentResult::CantorTrajectory(run_cantor_trajectory(c)?),
        ExperimentConfig::CalibrationCrossCheck(c) => {
            ExperimentResult::CalibrationCrossCheck(run_calibration_cross_check(c)?)
        }
    })
}

/// Enough to reproduce a result row bit-exactly: the configuration it came
/// from, the master seed and the seed of its cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub master_seed: u64,
    pub sub_seed: SeedSpec,
}

/// Rejection frequency with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rate {
    pub alpha: f64,
    pub rejections: usize,
    pub total: usize,
    pub rate: f64,
    /// `√(p (1 - p) / total)`
    pub se: f64,
}

impl Rate {
    pub fn new(alpha: f64, rejections: usize, total: usize) -> Self {
        let rate = if total == 0 { f64::NAN } else { rejections as f64 / total as f64 };
        Self { alpha, rejections, total, rate, se: (rate * (1.0 - rate) / total as f64).sqrt() }
    }
}

/// Wall-clock cost of one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub cell: String,
    pub wall_ms: f64,
    pub detail: String,
}

pub(crate) fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

pub(crate) fn check_reps(reps: usize) -> Result<()> {
    if reps == 0 {
        return Err(Error::InvalidInput("reps must be at least 1".into()));
    }
    Ok(())
}

pub(crate) fn check_alphas(alpha: &[f64]) -> Result<()> {
    if alpha.is_empty() || alpha.iter().any(|a| !(*a > 0.0 && *a < 1.0)) {
        return Err(Error::InvalidInput("alpha levels must lie in (0, 1)".into()));
    }
    Ok(())
}

pub(crate) fn check_nonempty<T>(xs: &[T], what: &str) -> Result<()> {
    if xs.is_empty() {
        return Err(Error::InvalidInput(format!("{what} must not be empty")));
    }
    Ok(())
}

pub(crate) fn provenance(hash: &str, seed: u64, sub: SeedSpec) -> Provenance {
    Provenance { config_hash: hash.to_owned(), master_seed: seed, sub_seed: sub }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_json_fills_defaults_and_rejects_unknown_fields() {
        let cfg = ExperimentConfig::from_json(r#"{"kind": "rejection-grid", "reps": 10}"#).unwrap();
        let ExperimentConfig::RejectionGrid(grid) = &cfg else { panic!("wrong kind") };
        assert_eq!(grid.reps, 10);
        assert_eq!(grid.n, vec![50, 200, 1000]);
        assert!(ExperimentConfig::from_json(r#"{"kind": "rejection-grid", "repz": 10}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"kind": "rejection-grid", "reps": 0}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"kind": "rejection-grid", "alpha": [1.5]}"#).is_err());
        let back: ExperimentConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn hash_tracks_content() {
        let a = ExperimentConfig::RejectionGrid(GridConfig::default());
        let b = ExperimentConfig::RejectionGrid(GridConfig { reps: 7, ..GridConfig::default() });
        assert_eq!(a.hash().unwrap(), a.clone().hash().unwrap());
        assert_ne!(a.hash().unwrap(), b.hash().unwrap());
        assert_eq!(a.hash().unwrap().len(), 64);
    }

    #[test]
    fn rate_standard_error() {
        let r = Rate::new(0.05, 50, 1000);
        assert_eq!(r.rate, 0.05);
        assert!((r.se - (0.05f64 * 0.95 / 1000.0).sqrt()).abs() < 1e-15);
    }
}
