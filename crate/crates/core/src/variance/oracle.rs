//! Monte-Carlo population values of `Γ₁`, `Γ₂` and the denominator.
//!
//! `F̃` and `G(y) = P(Y >= y)` are evaluated against reference samples that
//! are independent of the outer draws, so every product below is unbiased
//! for its population counterpart. Batches give the standard errors.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{build_permutations, PermScheme, SampleMatrix, SeedSpec};
use crate::domcount::{count_dominated, count_dominating, CountMode, PointSet};
use crate::error::{Error, Result};
use crate::stats;

/// Draws `n` i.i.d. copies of `Y` from the given stream.
pub trait YSampler: Sync {
    fn sample(&self, seed: &SeedSpec, n: usize) -> Result<SampleMatrix<f64>>;
}

impl<F> YSampler for F
where
    F: Fn(&SeedSpec, usize) -> Result<SampleMatrix<f64>> + Sync,
{
    fn sample(&self, seed: &SeedSpec, n: usize) -> Result<SampleMatrix<f64>> {
        self(seed, n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleErrors {
    pub gamma1: f64,
    pub gamma2: f64,
    pub denom: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationOracle {
    pub gamma1: f64,
    pub gamma2: f64,
    /// `∫ var(1{Y >= y}) dμ̃(y)`
    pub denom: f64,
    pub mc_samples: usize,
    pub std_errors: OracleErrors,
}

const BATCHES: usize = 20;

struct Batch {
    gamma1: f64,
    gamma2: f64,
    denom: f64,
}

/// A fresh sample from the product of `Y`'s marginals: the cyclic shift puts
/// distinct i.i.d. rows into each coordinate.
fn product_sample(sampler: &dyn YSampler, seed: &SeedSpec, m: usize) -> Result<SampleMatrix<f64>> {
    let y = sampler.sample(seed, m)?;
    build_permutations(m, y.cols(), PermScheme::Cyclic, seed)?.apply(&y)
}

fn meets(a: &SampleMatrix<f64>, b: &SampleMatrix<f64>, out: &mut Vec<f64>) {
    out.extend(a.values().iter().zip(b.values()).map(|(x, y)| x.min(*y)));
}

fn run_batch(sampler: &dyn YSampler, seed: &SeedSpec, m: usize) -> Result<Batch> {
    let draw = |k: u64| sampler.sample(&seed.derive(k), m);
    let y: Vec<SampleMatrix<f64>> = (1..=5).map(draw).collect::<Result<_>>()?;
    let d = y[0].cols();
    if y.iter().any(|s| s.rows() != m || s.cols() != d) {
        return Err(Error::InvalidInput("sampler returned inconsistent shapes".into()));
    }
    let ref1 = PointSet::from(product_sample(sampler, &seed.derive(6), m)?);
    let ref2 = PointSet::from(product_sample(sampler, &seed.derive(7), m)?);
    let g1 = PointSet::from(draw(8)?);
    let g2 = PointSet::from(draw(9)?);
    let mf = m as f64;

    let mut q = Vec::with_capacity(m * d);
    meets(&y[0], &y[1], &mut q);
    let q12 = PointSet::new(d, q)?;
    let f1: Vec<f64> = count_dominated(&ref1, &q12, CountMode::Auto)?.counts.iter().map(|&c| c as f64 / mf).collect();

    let mut q = Vec::with_capacity(3 * m * d);
    meets(&y[0], &y[2], &mut q);
    meets(&y[3], &y[4], &mut q);
    q.extend_from_slice(q12.values());
    let f2 = count_dominated(&ref2, &PointSet::new(d, q)?, CountMode::Auto)?.counts;
    let f2: Vec<f64> = f2.iter().map(|&c| c as f64 / mf).collect();
    let (f2_13, rest) = f2.split_at(m);
    let (f2_45, f2_12) = rest.split_at(m);

    let gamma2 = stats::mean(&(0..m).map(|i| f1[i] * (f2_13[i] - f2_45[i])).collect::<Vec<_>>());
    let gamma1 = stats::mean(&(0..m).map(|i| f1[i] * (f2_12[i] + f2_45[i] - 2.0 * f2_13[i])).collect::<Vec<_>>());

    let y_tilde = PointSet::from(build_permutations(m, d, PermScheme::Cyclic, seed)?.apply(&y[0])?);
    let ga = count_dominating(&g1, &y_tilde, CountMode::Auto)?.counts;
    let gb = count_dominating(&g2, &y_tilde, CountMode::Auto)?.counts;
    let denom = stats::mean(&ga.iter().zip(&gb).map(|(&a, &b)| (a as f64 / mf) * (1.0 - b as f64 / mf)).collect::<Vec<_>>());
    Ok(Batch { gamma1, gamma2, denom })
}

/// Population `Γ₁`, `Γ₂` and denominator for the law drawn by `sampler`.
pub fn population_oracle(sampler: &dyn YSampler, mc_samples: usize, seed: &SeedSpec) -> Result<PopulationOracle> {
    if mc_samples < 1000 {
        return Err(Error::TooFewSamples { needed: 1000, got: mc_samples });
    }
    let m = mc_samples / BATCHES;
    let batches: Vec<Batch> = (0..BATCHES)
        .into_par_iter()
        .map(|b| run_batch(sampler, &seed.derive(b as u64), m))
        .collect::<Result<_>>()?;
    let field = |f: fn(&Batch) -> f64| batches.iter().map(f).collect::<Vec<f64>>();
    let (g1, g2, den) = (field(|b| b.gamma1), field(|b| b.gamma2), field(|b| b.denom));
    Ok(PopulationOracle {
        gamma1: stats::mean(&g1),
        gamma2: stats::mean(&g2),
        denom: stats::mean(&den),
        mc_samples: m * BATCHES,
        std_errors: OracleErrors {
            gamma1: stats::std_error(&g1),
            gamma2: stats::std_error(&g2),
            denom: stats::std_error(&den),
        },
    })
}
