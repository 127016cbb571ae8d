//! Wald p-values against permutation p-values on independent data.
//!
//! Each permutation shuffles the rows of `Z`; the neighbour map of the
//! shuffled sample is the relabelled original map, so the permutation
//! distribution conditions on the same tie-breaking draws as the Wald test.

use std::time::Instant;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_reps, elapsed_ms, provenance, ExperimentConfig, Provenance, Timing};
use crate::data::{build_permutations, PermScheme, SeedSpec};
use crate::domcount::CountMode;
use crate::error::{Error, Result};
use crate::estimators::{neighbor_map, t_ac_with_map, EstimatorOptions, STREAM_NN_Z};
use crate::simgen::{Base, SamplerSpec};
use crate::stats;
use crate::variance::{wald_test, Side};

const CALIB: u64 = 0xca1b;
const PERM: u64 = 0x9e53;
const NN: u64 = 0x4e4e;
const SHUFFLE: u64 = 0x5f1e;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationConfig {
    pub d_y: usize,
    pub d_z: usize,
    pub base: Base,
    pub n: usize,
    /// Independent datasets.
    pub reps: usize,
    /// Row shuffles of `Z` per dataset.
    pub shuffles: usize,
    pub side: Side,
    pub perm_scheme: PermScheme,
    pub mode: CountMode,
    pub seed: u64,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            d_y: 1,
            d_z: 1,
            base: Base::Gaussian,
            n: 500,
            reps: 200,
            shuffles: 999,
            side: Side::Right,
            perm_scheme: PermScheme::Cyclic,
            mode: CountMode::Auto,
            seed: 1,
        }
    }
}

impl CalibrationConfig {
    pub fn validate(&self) -> Result<()> {
        check_reps(self.reps)?;
        if self.shuffles == 0 || self.d_y == 0 || self.d_z == 0 || self.n < 3.max(self.d_y) {
            return Err(Error::InvalidInput("need shuffles >= 1, dims >= 1 and n >= max(3, d_y)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRow {
    #[serde(flatten)]
    pub provenance: Provenance,
    pub rep: usize,
    pub t_hat: f64,
    pub statistic: f64,
    pub wald_p: f64,
    /// `(1 + #{T_b ⪰ T}) / (B + 1)`
    pub perm_p: f64,
    pub wald_ms: f64,
    pub perm_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationResult {
    pub config: CalibrationConfig,
    pub rows: Vec<CalibrationRow>,
    /// Datasets skipped because `σ̂ₙ²` was not positive.
    pub degenerate: usize,
    pub ks_wald: f64,
    pub ks_perm: f64,
    /// One-sample KS critical value at 5% for the number of rows.
    pub ks_critical: f64,
    pub spearman: f64,
    /// Permutation time over Wald time, summed over datasets.
    pub slowdown: f64,
    pub timing: Vec<Timing>,
}

fn replicate(cfg: &CalibrationConfig, hash: &str, rep: usize, seed: SeedSpec) -> Result<Option<CalibrationRow>> {
    let data = SamplerSpec::linear(cfg.d_y, cfg.d_z, cfg.base, seed).generate(cfg.n)?;
    let perms = build_permutations(cfg.n, cfg.d_y, cfg.perm_scheme, &seed.derive(PERM))?;
    let opts = EstimatorOptions::with_mode(cfg.mode);
    let nn_seed = seed.derive(NN);

    let start = Instant::now();
    let report = match wald_test(&data.y, &data.z, &perms, &nn_seed, &opts, cfg.side) {
        Ok(r) => r,
        Err(e) if e.is_degenerate() => return Ok(None),
        Err(e) => return Err(e),
    };
    let wald_ms = elapsed_ms(start);

    let start = Instant::now();
    let map = neighbor_map(&data.z, &nn_seed, STREAM_NN_Z, &opts)?;
    let mut rng = seed.derive(SHUFFLE).rng();
    let mut sigma: Vec<usize> = (0..cfg.n).collect();
    let t = report.t_hat;
    let mut extreme = 0usize;
    for _ in 0..cfg.shuffles {
        sigma.shuffle(&mut rng);
        let tb = t_ac_with_map(&data.y, &map.relabel(&sigma), &perms, cfg.mode)?.value;
        extreme += usize::from(match cfg.side {
            Side::Right => tb >= t,
            Side::Two => tb.abs() >= t.abs(),
        });
    }
    let perm_ms = elapsed_ms(start);
    Ok(Some(CalibrationRow {
        provenance: provenance(hash, cfg.seed, seed),
        rep,
        t_hat: t,
        statistic: report.statistic,
        wald_p: report.p_value,
        perm_p: (1 + extreme) as f64 / (cfg.shuffles + 1) as f64,
        wald_ms,
        perm_ms,
    }))
}

pub fn run_calibration_cross_check(cfg: &CalibrationConfig) -> Result<CalibrationResult> {
    cfg.validate()?;
    let hash = ExperimentConfig::CalibrationCrossCheck(cfg.clone()).hash()?;
    let start = Instant::now();
    let base = SeedSpec::new(cfg.seed).derive(CALIB);
    let all = (0..cfg.reps)
        .into_par_iter()
        .map(|r| replicate(cfg, &hash, r, base.derive(r as u64)))
        .collect::<Result<Vec<_>>>()?;
    let degenerate = all.iter().filter(|r| r.is_none()).count();
    let rows: Vec<CalibrationRow> = all.into_iter().flatten().collect();
    if rows.len() < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: rows.len() });
    }
    let wald: Vec<f64> = rows.iter().map(|r| r.wald_p).collect();
    let perm: Vec<f64> = rows.iter().map(|r| r.perm_p).collect();
    let uniform = |p: f64| p.clamp(0.0, 1.0);
    let wald_ms: f64 = rows.iter().map(|r| r.wald_ms).sum();
    let perm_ms: f64 = rows.iter().map(|r| r.perm_ms).sum();
    let timing = vec![
        Timing { cell: "wald".into(), wall_ms: wald_ms, detail: format!("{} datasets, summed per-dataset time", rows.len()) },
        Timing {
            cell: "permutation".into(),
            wall_ms: perm_ms,
            detail: format!(
                "{} shuffles per dataset, summed per-dataset time, {:.1}x the Wald time",
                cfg.shuffles,
                perm_ms / wald_ms
            ),
        },
        Timing { cell: "total".into(), wall_ms: elapsed_ms(start), detail: "wall clock, parallel".into() },
    ];
    Ok(CalibrationResult {
        config: cfg.clone(),
        degenerate,
        ks_wald: stats::ks_one_sample(&wald, uniform),
        ks_perm: stats::ks_one_sample(&perm, uniform),
        ks_critical: stats::ks_critical(0.05, rows.len(), None),
        spearman: stats::spearman(&wald, &perm),
        slowdown: perm_ms / wald_ms,
        rows,
        timing,
    })
}
