//! Coefficient along an additive-signal sweep, with common random numbers:
//! within a design every `η` reuses the same `Z`, noise, permutations and
//! neighbour map, so only the signal weight changes.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_nonempty, elapsed_ms, provenance, ExperimentConfig, Provenance, Timing};
use crate::data::{build_permutations, PermScheme, SeedSpec};
use crate::domcount::{CountMode, PointSet};
use crate::error::{Error, Result};
use crate::estimators::t_ac_with_map;
use crate::nn::nearest_neighbors;
use crate::simgen::{Base, Noise, SamplerSpec};

const SWEEP: u64 = 0x5e3e;
const DATA: u64 = 0xda7a;
const PERM: u64 = 0x9e53;
const NN: u64 = 0x4e4e;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonotonicityConfig {
    pub d: usize,
    pub base: Base,
    pub noise: Vec<Noise>,
    pub eta: Vec<f64>,
    pub n: usize,
    pub designs: usize,
    pub perm_scheme: PermScheme,
    pub mode: CountMode,
    pub seed: u64,
}

impl Default for MonotonicityConfig {
    fn default() -> Self {
        Self {
            d: 2,
            base: Base::Gaussian,
            noise: vec![Noise::Complementary, Noise::Unit],
            eta: (0..10).map(|k| k as f64 / 10.0).collect(),
            n: 100_000,
            designs: 3,
            perm_scheme: PermScheme::Cyclic,
            mode: CountMode::Auto,
            seed: 1,
        }
    }
}

impl MonotonicityConfig {
    pub fn validate(&self) -> Result<()> {
        check_nonempty(&self.noise, "noise")?;
        check_nonempty(&self.eta, "eta")?;
        if self.d == 0 || self.designs == 0 || self.n < 3.max(self.d) {
            return Err(Error::InvalidInput("need d >= 1, designs >= 1 and n >= max(3, d)".into()));
        }
        if self.eta.iter().any(|e| !(0.0..=1.0).contains(e)) {
            return Err(Error::InvalidInput("eta values must lie in [0, 1]".into()));
        }
        if self.eta.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("eta values must be strictly increasing".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityRow {
    #[serde(flatten)]
    pub provenance: Provenance,
    pub noise: Noise,
    pub design: usize,
    pub eta: f64,
    pub n: usize,
    pub value: f64,
}

/// One sweep: a noise convention and a design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub noise: Noise,
    pub design: usize,
    pub values: Vec<f64>,
    pub strictly_increasing: bool,
    /// Mean second difference of the sequence (positive when growth speeds up).
    pub mean_second_difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonicityResult {
    pub config: MonotonicityConfig,
    pub rows: Vec<MonotonicityRow>,
    pub summary: Vec<SweepSummary>,
    pub timing: Vec<Timing>,
}

impl MonotonicityResult {
    pub fn all_increasing(&self) -> bool {
        self.summary.iter().all(|s| s.strictly_increasing)
    }
}

fn sweep(cfg: &MonotonicityConfig, noise: Noise, seed: SeedSpec) -> Result<(Vec<f64>, f64)> {
    let start = Instant::now();
    let frozen = SamplerSpec::additive(cfg.d, cfg.base, 0.0, noise, seed).freeze_design(seed.derive(DATA))?;
    let z = frozen.generate(cfg.n)?.z;
    let map = nearest_neighbors(&PointSet::from(&z), &seed.derive(NN))?;
    let perms = build_permutations(cfg.n, cfg.d, cfg.perm_scheme, &seed.derive(PERM))?;
    let values = cfg
        .eta
        .par_iter()
        .map(|&eta| {
            let data = SamplerSpec { eta, ..frozen.clone() }.generate(cfg.n)?;
            Ok(t_ac_with_map(&data.y, &map, &perms, cfg.mode)?.value)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok((values, elapsed_ms(start)))
}

pub fn run_monotonicity(cfg: &MonotonicityConfig) -> Result<MonotonicityResult> {
    cfg.validate()?;
    let hash = ExperimentConfig::Monotonicity(cfg.clone()).hash()?;
    let jobs: Vec<(Noise, usize)> =
        cfg.noise.iter().flat_map(|&nz| (0..cfg.designs).map(move |k| (nz, k))).collect();
    let seed_of = |nz: Noise, k: usize| SeedSpec::new(cfg.seed).derive_path(&[SWEEP, nz as u64, k as u64]);
    let sweeps = jobs
        .par_iter()
        .map(|&(nz, k)| sweep(cfg, nz, seed_of(nz, k)))
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    let mut summary = Vec::new();
    let mut timing = Vec::new();
    for (&(noise, design), (values, ms)) in jobs.iter().zip(sweeps) {
        let sub = seed_of(noise, design);
        for (&eta, &value) in cfg.eta.iter().zip(&values) {
            rows.push(MonotonicityRow { provenance: provenance(&hash, cfg.seed, sub), noise, design, eta, n: cfg.n, value });
        }
        let second: Vec<f64> = values.windows(3).map(|w| w[2] - 2.0 * w[1] + w[0]).collect();
        summary.push(SweepSummary {
            noise,
            design,
            strictly_increasing: values.windows(2).all(|w| w[1] > w[0]),
            mean_second_difference: if second.is_empty() { 0.0 } else { crate::stats::mean(&second) },
            values,
        });
        timing.push(Timing {
            cell: format!("{noise:?} design={design}").to_lowercase(),
            wall_ms: ms,
            detail: format!("{} eta values at n={}", cfg.eta.len(), cfg.n),
        });
    }
    Ok(MonotonicityResult { config: cfg.clone(), rows, summary, timing })
}
