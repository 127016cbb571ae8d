//! Error of the estimator against the known population value of a
//! functional model, as a function of `n`.
//!
//! The model is `Z ~ N(0, I_d)` and `Y = (Σ Z_k / √d, |Z|² / d)`. `Y` is a
//! function of `Z`, so the population coefficient is exactly 1.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_nonempty, elapsed_ms, provenance, ExperimentConfig, Provenance, Timing};
use crate::data::{build_permutations, PermScheme, SampleMatrix, SeedSpec};
use crate::domcount::CountMode;
use crate::error::{Error, Result};
use crate::estimators::{t_ac, EstimatorOptions};
use crate::simgen::{gen_base, Base};
use crate::stats;

const CONV: u64 = 0xc0fe;
const PERM: u64 = 0x9e53;
const NN: u64 = 0x4e4e;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConvergenceConfig {
    pub d_z: Vec<usize>,
    pub n: Vec<usize>,
    pub seeds: usize,
    pub perm_scheme: PermScheme,
    pub mode: CountMode,
    pub seed: u64,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self {
            d_z: vec![1, 2, 4],
            n: vec![500, 1000, 2000, 4000, 8000, 16000, 32000],
            seeds: 20,
            perm_scheme: PermScheme::Cyclic,
            mode: CountMode::Auto,
            seed: 1,
        }
    }
}

impl ConvergenceConfig {
    pub fn validate(&self) -> Result<()> {
        check_nonempty(&self.d_z, "d_z")?;
        check_nonempty(&self.n, "n")?;
        if self.seeds == 0 || self.d_z.contains(&0) || self.n.iter().any(|&n| n < 3) {
            return Err(Error::InvalidInput("need seeds >= 1, d_z >= 1 and n >= 3".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergencePoint {
    #[serde(flatten)]
    pub provenance: Provenance,
    pub d_z: usize,
    pub n: usize,
    pub rep: usize,
    pub value: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceSummary {
    pub d_z: usize,
    pub n: Vec<usize>,
    pub median_error: Vec<f64>,
    /// Least-squares slope of `log median error` on `log n`.
    pub slope: f64,
    pub median_decreasing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceResult {
    pub config: ConvergenceConfig,
    pub rows: Vec<ConvergencePoint>,
    pub summary: Vec<ConvergenceSummary>,
    pub timing: Vec<Timing>,
}

impl ConvergenceResult {
    pub fn summary_for(&self, d_z: usize) -> Option<&ConvergenceSummary> {
        self.summary.iter().find(|s| s.d_z == d_z)
    }
}

/// `Y = (Σ Z_k / √d, |Z|² / d)` row by row.
pub(crate) fn functional_y(z: &SampleMatrix<f64>) -> Result<SampleMatrix<f64>> {
    let d = z.cols() as f64;
    let mut y = Vec::with_capacity(2 * z.rows());
    for i in 0..z.rows() {
        let r = z.row(i);
        y.push(r.iter().sum::<f64>() / d.sqrt());
        y.push(r.iter().map(|v| v * v).sum::<f64>() / d);
    }
    SampleMatrix::new(z.rows(), 2, y)
}

fn estimate(cfg: &ConvergenceConfig, d_z: usize, n: usize, seed: &SeedSpec) -> Result<f64> {
    let z = gen_base(n, d_z, Base::Gaussian, seed)?;
    let y = functional_y(&z)?;
    let perms = build_permutations(n, 2, cfg.perm_scheme, &seed.derive(PERM))?;
    Ok(t_ac(&y, &z, &perms, &seed.derive(NN), &EstimatorOptions::with_mode(cfg.mode))?.value)
}

pub fn run_convergence(cfg: &ConvergenceConfig) -> Result<ConvergenceResult> {
    cfg.validate()?;
    let hash = ExperimentConfig::Convergence(cfg.clone()).hash()?;
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    let mut timing = Vec::new();
    for &d_z in &cfg.d_z {
        let mut medians = Vec::with_capacity(cfg.n.len());
        for &n in &cfg.n {
            let start = Instant::now();
            let sub = SeedSpec::new(cfg.seed).derive_path(&[CONV, d_z as u64, n as u64]);
            let values = (0..cfg.seeds)
                .into_par_iter()
                .map(|r| estimate(cfg, d_z, n, &sub.derive(r as u64)))
                .collect::<Result<Vec<f64>>>()?;
            let errors: Vec<f64> = values.iter().map(|v| (v - 1.0).abs()).collect();
            medians.push(stats::median(&errors));
            for (rep, (&value, &error)) in values.iter().zip(&errors).enumerate() {
                rows.push(ConvergencePoint { provenance: provenance(&hash, cfg.seed, sub.derive(rep as u64)), d_z, n, rep, value, error });
            }
            timing.push(Timing {
                cell: format!("d_z={d_z} n={n}"),
                wall_ms: elapsed_ms(start),
                detail: format!("{} seeds", cfg.seeds),
            });
        }
        let log_n: Vec<f64> = cfg.n.iter().map(|&n| (n as f64).ln()).collect();
        let log_e: Vec<f64> = medians.iter().map(|e| e.ln()).collect();
        let slope = if cfg.n.len() >= 2 { stats::linear_fit(&log_n, &log_e).0 } else { f64::NAN };
        summary.push(ConvergenceSummary {
            d_z,
            n: cfg.n.clone(),
            median_decreasing: medians.windows(2).all(|w| w[1] < w[0]),
            median_error: medians,
            slope,
        });
    }
    Ok(ConvergenceResult { config: cfg.clone(), rows, summary, timing })
}
