//! Rejection rates of the Wald test under independence, over a grid of
//! dimensions, base laws and sample sizes.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_alphas, check_nonempty, check_reps, elapsed_ms, provenance, ExperimentConfig, Provenance, Rate, Timing};
use crate::data::{build_permutations, PermScheme, SeedSpec};
use crate::domcount::CountMode;
use crate::error::{Error, Result};
use crate::estimators::{t_ac, EstimatorOptions};
use crate::simgen::{gen_base, Base, SamplerSpec};
use crate::variance::{
    a_const, b_const, population_oracle, sigma_sq_limit_with, wald_test, wald_test_with_sigma, Side,
};

const CELL: u64 = 0xce11;
const SIZE: u64 = 0x5123;
const PERM: u64 = 0x9e53;
const NN: u64 = 0x4e4e;
const ORACLE: u64 = 0x0ac1;
const B_CONST: u64 = 0xbc;

/// Which variance enters the test statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SigmaMode {
    /// `σ̂ₙ²` from each sample.
    #[default]
    Estimated,
    /// Limit `σ²` from a population oracle of the design.
    Oracle,
}

/// How a replication with non-positive `σ̂ₙ²` is counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DegeneratePolicy {
    /// As a rejection: the statistic is unbounded.
    #[default]
    Reject,
    Accept,
    /// Dropped from the denominator.
    Exclude,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridCell {
    pub d_y: usize,
    pub d_z: usize,
    #[serde(default)]
    pub base: Base,
}

impl GridCell {
    pub fn label(&self) -> String {
        format!("{}-{}-{}", self.d_y, self.d_z, base_name(self.base))
    }
}

fn base_name(b: Base) -> &'static str {
    match b {
        Base::Gaussian => "gaussian",
        Base::T2 => "t2",
        Base::T4 => "t4",
    }
}

/// Desk-scale defaults: one cell, 5 designs, 1000 replications.
///
/// The protocol defaults (two-sided, random permutations, degenerate
/// variance counted as a rejection) are the ones under which the published
/// rejection table is reproduced; the library defaults differ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub cells: Vec<GridCell>,
    pub n: Vec<usize>,
    pub designs: usize,
    pub reps: usize,
    pub alpha: Vec<f64>,
    pub sigma_mode: SigmaMode,
    pub side: Side,
    pub perm_scheme: PermScheme,
    pub degenerate: DegeneratePolicy,
    /// Samples for the population oracle (oracle mode only).
    pub oracle_mc: usize,
    /// Samples for `B_d` (oracle mode only).
    pub b_mc: usize,
    pub mode: CountMode,
    pub seed: u64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            cells: vec![GridCell { d_y: 2, d_z: 2, base: Base::Gaussian }],
            n: vec![50, 200, 1000],
            designs: 5,
            reps: 1000,
            alpha: vec![0.05, 0.10],
            sigma_mode: SigmaMode::Estimated,
            side: Side::Two,
            perm_scheme: PermScheme::Random,
            degenerate: DegeneratePolicy::Reject,
            oracle_mc: 200_000,
            b_mc: 2_000_000,
            mode: CountMode::Auto,
            seed: 1,
        }
    }
}

impl GridConfig {
    /// All twelve dimension/base cells with 20 designs.
    pub fn full_scale() -> Self {
        let mut cells = Vec::new();
        for (d_y, d_z) in [(2, 2), (2, 5), (5, 2), (5, 5)] {
            for base in [Base::Gaussian, Base::T2, Base::T4] {
                cells.push(GridCell { d_y, d_z, base });
            }
        }
        Self { cells, designs: 20, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        check_reps(self.reps)?;
        check_alphas(&self.alpha)?;
        check_nonempty(&self.cells, "cells")?;
        check_nonempty(&self.n, "n")?;
        if self.designs == 0 {
            return Err(Error::InvalidInput("designs must be at least 1".into()));
        }
        if self.cells.iter().any(|c| c.d_y == 0 || c.d_z == 0) {
            return Err(Error::InvalidInput("dims must be at least 1".into()));
        }
        let max_dy = self.cells.iter().map(|c| c.d_y).max().unwrap_or(1);
        if self.n.iter().any(|&n| n < 3 || n < max_dy) {
            return Err(Error::InvalidInput("every n must be at least max(3, d_y)".into()));
        }
        Ok(())
    }
}

/// One design at one sample size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    #[serde(flatten)]
    pub provenance: Provenance,
    pub d_y: usize,
    pub d_z: usize,
    pub base: Base,
    pub n: usize,
    pub design: usize,
    pub sigma_mode: SigmaMode,
    pub side: Side,
    pub perm_scheme: PermScheme,
    pub reps: usize,
    /// Replications with non-positive `σ̂ₙ²` (always 0 in oracle mode).
    pub degenerate: usize,
    pub oracle_sigma_sq: Option<f64>,
    pub rates: Vec<Rate>,
    pub wall_ms: f64,
}

/// A cell and sample size, pooled over designs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub d_y: usize,
    pub d_z: usize,
    pub base: Base,
    pub n: usize,
    pub sigma_mode: SigmaMode,
    pub reps: usize,
    pub degenerate: usize,
    pub rates: Vec<Rate>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridResult {
    pub config: GridConfig,
    pub rows: Vec<GridRow>,
    pub summary: Vec<GridSummary>,
    pub timing: Vec<Timing>,
}

impl GridResult {
    pub fn rate(&self, cell: GridCell, n: usize, alpha: f64) -> Option<&Rate> {
        self.summary
            .iter()
            .find(|s| (s.d_y, s.d_z, s.base, s.n) == (cell.d_y, cell.d_z, cell.base, n))?
            .rates
            .iter()
            .find(|r| r.alpha == alpha)
    }
}

enum Outcome {
    P(f64),
    Degenerate,
}

fn cell_seed(master: u64, c: &GridCell) -> SeedSpec {
    SeedSpec::new(master).derive_path(&[CELL, c.d_y as u64, c.d_z as u64, c.base as u64])
}

/// Limit variance of one design under independence with continuous `Z`.
fn oracle_sigma_sq(cfg: &GridConfig, cell: &GridCell, spec: &SamplerSpec, design_seed: &SeedSpec, b: f64) -> Result<f64> {
    let (b_y, _) = spec.design()?;
    let (d_y, base) = (cell.d_y, cell.base);
    let sampler = move |s: &SeedSpec, m: usize| b_y.apply(&gen_base(m, d_y, base, s)?);
    let pop = population_oracle(&sampler, cfg.oracle_mc, &design_seed.derive(ORACLE))?;
    sigma_sq_limit_with(pop.gamma1, pop.gamma2, pop.denom, 0.0, a_const(cell.d_z)?, b)
}

fn replicate(cfg: &GridConfig, frozen: &SamplerSpec, n: usize, seed: SeedSpec, oracle: Option<f64>) -> Result<Outcome> {
    let data = SamplerSpec { seed, ..frozen.clone() }.generate(n)?;
    let perms = build_permutations(n, frozen.d_y, cfg.perm_scheme, &seed.derive(PERM))?;
    let opts = EstimatorOptions::with_mode(cfg.mode);
    let nn_seed = seed.derive(NN);
    let report = match oracle {
        None => wald_test(&data.y, &data.z, &perms, &nn_seed, &opts, cfg.side),
        Some(s2) => t_ac(&data.y, &data.z, &perms, &nn_seed, &opts)
            .and_then(|r| wald_test_with_sigma(r.value, n, s2, cfg.side)),
    };
    match report {
        Ok(r) => Ok(Outcome::P(r.p_value)),
        Err(e) if e.is_degenerate() => Ok(Outcome::Degenerate),
        Err(e) => Err(e),
    }
}

fn tally(cfg: &GridConfig, outcomes: &[Outcome]) -> (Vec<Rate>, usize) {
    let degenerate = outcomes.iter().filter(|o| matches!(o, Outcome::Degenerate)).count();
    let total = match cfg.degenerate {
        DegeneratePolicy::Exclude => outcomes.len() - degenerate,
        _ => outcomes.len(),
    };
    let rates = cfg
        .alpha
        .iter()
        .map(|&a| {
            let hits = outcomes
                .iter()
                .filter(|o| match o {
                    Outcome::P(p) => *p < a,
                    Outcome::Degenerate => cfg.degenerate == DegeneratePolicy::Reject,
                })
                .count();
            Rate::new(a, hits, total)
        })
        .collect();
    (rates, degenerate)
}

/// Rejection frequencies of the independence test on independent data.
///
/// Designs are drawn per cell and shared across sample sizes; replication
/// `r` of design `k` at size `n` uses the stream `cell/k/n/r`.
pub fn run_rejection_grid(cfg: &GridConfig) -> Result<GridResult> {
    cfg.validate()?;
    let hash = ExperimentConfig::RejectionGrid(cfg.clone()).hash()?;
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    let mut timing = Vec::new();
    for cell in &cfg.cells {
        let seed = cell_seed(cfg.seed, cell);
        let b = match cfg.sigma_mode {
            SigmaMode::Oracle => {
                let b_seed = SeedSpec::new(cfg.seed).derive_path(&[B_CONST, cell.d_z as u64]);
                Some(b_const(cell.d_z, cfg.b_mc, &b_seed)?.value)
            }
            SigmaMode::Estimated => None,
        };
        let mut designs = Vec::with_capacity(cfg.designs);
        for k in 0..cfg.designs {
            let design_seed = seed.derive(k as u64);
            let spec = SamplerSpec::linear(cell.d_y, cell.d_z, cell.base, design_seed);
            let frozen = spec.freeze_design(design_seed)?;
            let oracle = match b {
                Some(b) => {
                    let start = Instant::now();
                    let s2 = oracle_sigma_sq(cfg, cell, &spec, &design_seed, b)?;
                    timing.push(Timing {
                        cell: format!("{} design={k}", cell.label()),
                        wall_ms: elapsed_ms(start),
                        detail: format!("population oracle, {} samples", cfg.oracle_mc),
                    });
                    Some(s2)
                }
                None => None,
            };
            designs.push((design_seed, frozen, oracle));
        }
        for &n in &cfg.n {
            let start = Instant::now();
            let mut pooled: Vec<Outcome> = Vec::with_capacity(cfg.designs * cfg.reps);
            for (k, (design_seed, frozen, oracle)) in designs.iter().enumerate() {
                let t0 = Instant::now();
                let sub = design_seed.derive_path(&[SIZE, n as u64]);
                let outcomes: Vec<Outcome> = (0..cfg.reps)
                    .into_par_iter()
                    .map(|r| replicate(cfg, frozen, n, sub.derive(r as u64), *oracle))
                    .collect::<Result<_>>()?;
                let (rates, degenerate) = tally(cfg, &outcomes);
                rows.push(GridRow {
                    provenance: provenance(&hash, cfg.seed, sub),
                    d_y: cell.d_y,
                    d_z: cell.d_z,
                    base: cell.base,
                    n,
                    design: k,
                    sigma_mode: cfg.sigma_mode,
                    side: cfg.side,
                    perm_scheme: cfg.perm_scheme,
                    reps: cfg.reps,
                    degenerate,
                    oracle_sigma_sq: *oracle,
                    rates,
                    wall_ms: elapsed_ms(t0),
                });
                pooled.extend(outcomes);
            }
            let (rates, degenerate) = tally(cfg, &pooled);
            summary.push(GridSummary {
                d_y: cell.d_y,
                d_z: cell.d_z,
                base: cell.base,
                n,
                sigma_mode: cfg.sigma_mode,
                reps: pooled.len(),
                degenerate,
                rates,
            });
            timing.push(Timing {
                cell: format!("{} n={n}", cell.label()),
                wall_ms: elapsed_ms(start),
                detail: format!("{} designs x {} reps", cfg.designs, cfg.reps),
            });
        }
    }
    Ok(GridResult { config: cfg.clone(), rows, summary, timing })
}
