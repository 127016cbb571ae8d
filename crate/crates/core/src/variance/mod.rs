//! Variance estimation and the Wald-type independence test, plus population
//! oracles for the limiting variance.

mod constants;
mod oracle;

pub use constants::{a_const, b_const, sigma_sq_limit, sigma_sq_limit_with, McEstimate};
pub use oracle::{population_oracle, OracleErrors, PopulationOracle, YSampler};

use serde::{Deserialize, Serialize};

use crate::data::{PermutationFamily, SampleMatrix, SeedSpec};
use crate::domcount::{count_dominated, CountMode, PointSet};
use crate::error::{Error, Result};
use crate::estimators::{l_denominator, neighbor_map, push_meets, t_ac_with_map, EstimatorOptions, STREAM_NN_Z};
use crate::nn::{neighbor_stats, NeighborStats};
use crate::scalar::Scalar;

/// Empirical variance components from consecutive-sample meets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaEstimates {
    pub gamma1_hat: f64,
    pub gamma2_hat: f64,
    /// `(1/(n(n-1))) Σ_{i<n} R̃(Y_i ∧ Y_{i+1})`
    pub mean_consecutive: f64,
    /// `(1/(n²(n-1))) Σ_{i<n} R̃(Y_i ∧ Y_{i+1})²`
    pub mean_sq_consecutive: f64,
    /// `(1/(n²(n-2))) Σ_{i<n-1} R̃(Y_i ∧ Y_{i+1}) R̃(Y_i ∧ Y_{i+2})`
    pub mean_cross: f64,
}

/// Plug-in estimates of `Γ₁`, `Γ₂`. `Γ̂₂` is not clipped at zero.
pub fn gamma_hats<T: Scalar>(y: &SampleMatrix<T>, perms: &PermutationFamily, mode: CountMode) -> Result<GammaEstimates> {
    let n = y.rows();
    if n < 3 {
        return Err(Error::TooFewSamples { needed: 3, got: n });
    }
    if perms.n() != n {
        return Err(Error::RowMismatch { left: n, right: perms.n() });
    }
    let y_perm = PointSet::from(perms.apply(y)?);
    let mut q = Vec::with_capacity((2 * n - 3) * y.cols());
    push_meets(y, (0..n - 1).map(|i| (i, i + 1)), &mut q);
    push_meets(y, (0..n - 2).map(|i| (i, i + 2)), &mut q);
    let ranks = count_dominated(&y_perm, &PointSet::new(y.cols(), q)?, mode)?.counts;
    let (r1, r2) = ranks.split_at(n - 1);

    let s1: u128 = r1.iter().map(|&r| r as u128).sum();
    let s11: u128 = r1.iter().map(|&r| (r as u128) * (r as u128)).sum();
    let s12: u128 = r1.iter().zip(r2).map(|(&a, &b)| (a as u128) * (b as u128)).sum();
    let nf = n as f64;
    let mean_consecutive = s1 as f64 / (nf * (nf - 1.0));
    let mean_sq_consecutive = s11 as f64 / (nf * nf * (nf - 1.0));
    let mean_cross = s12 as f64 / (nf * nf * (nf - 2.0));
    let sq = mean_consecutive * mean_consecutive;
    let gamma2_hat = mean_cross - sq;
    let gamma1_hat = mean_sq_consecutive - sq - 2.0 * gamma2_hat;
    Ok(GammaEstimates { gamma1_hat, gamma2_hat, mean_consecutive, mean_sq_consecutive, mean_cross })
}

/// Components of `σ̂ₙ²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceParts {
    pub gammas: GammaEstimates,
    pub neighbors: NeighborStats,
    /// `(1/n³) Σ (n - Ľ_i) Ľ_i`
    pub denom_hat: f64,
    pub sigma_hat_sq: f64,
}

fn assemble(gammas: GammaEstimates, neighbors: NeighborStats, l_check: &[usize]) -> Result<VarianceParts> {
    let den = l_denominator(l_check);
    if den == 0 {
        return Err(Error::ConstantY);
    }
    let n = l_check.len() as f64;
    let denom_hat = den as f64 / (n * n * n);
    let sigma_hat_sq = (gammas.gamma1_hat * (1.0 + neighbors.mutual_fraction)
        + gammas.gamma2_hat * neighbors.indegree_pair_sum)
        / (denom_hat * denom_hat);
    Ok(VarianceParts { gammas, neighbors, denom_hat, sigma_hat_sq })
}

/// All components of `σ̂ₙ²` for `Y` on `Z`.
pub fn variance_parts<T: Scalar>(
    y: &SampleMatrix<T>,
    z: &SampleMatrix<T>,
    perms: &PermutationFamily,
    seed: &SeedSpec,
    opts: &EstimatorOptions,
) -> Result<VarianceParts> {
    Ok(wald_parts(y, z, perms, seed, opts)?.1)
}

/// Consistent estimate of the asymptotic variance of `√n T̂`.
pub fn sigma_hat_sq<T: Scalar>(
    y: &SampleMatrix<T>,
    z: &SampleMatrix<T>,
    perms: &PermutationFamily,
    seed: &SeedSpec,
    opts: &EstimatorOptions,
) -> Result<f64> {
    Ok(variance_parts(y, z, perms, seed, opts)?.sigma_hat_sq)
}

fn wald_parts<T: Scalar>(
    y: &SampleMatrix<T>,
    z: &SampleMatrix<T>,
    perms: &PermutationFamily,
    seed: &SeedSpec,
    opts: &EstimatorOptions,
) -> Result<(T, VarianceParts)> {
    if y.rows() != z.rows() {
        return Err(Error::RowMismatch { left: y.rows(), right: z.rows() });
    }
    if y.rows() < 3 {
        return Err(Error::TooFewSamples { needed: 3, got: y.rows() });
    }
    let map = neighbor_map(z, seed, STREAM_NN_Z, opts)?;
    let report = t_ac_with_map(y, &map, perms, opts.mode)?;
    let gammas = gamma_hats(y, perms, opts.mode)?;
    let parts = assemble(gammas, neighbor_stats(&map), &report.l_check)?;
    Ok((report.value, parts))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    /// Reject for large statistics; power lies here under dependence.
    #[default]
    Right,
    Two,
}

impl std::str::FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "right" => Ok(Side::Right),
            "two" | "two-sided" => Ok(Side::Two),
            other => Err(Error::InvalidInput(format!("unknown side `{other}` (expected right or two)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestReport<T> {
    pub n: usize,
    pub t_hat: T,
    pub sigma_hat_sq: f64,
    pub statistic: f64,
    pub p_value: f64,
    pub side: Side,
    /// Present when the variance was estimated from the sample.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parts: Option<VarianceParts>,
}

impl<T> TestReport<T> {
    pub fn rejects(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal survival function `1 - Φ(x)`, accurate in the tail.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

pub fn p_value(statistic: f64, side: Side) -> f64 {
    match side {
        Side::Right => normal_sf(statistic),
        Side::Two => (2.0 * normal_sf(statistic.abs())).min(1.0),
    }
}

/// Wald test with the estimated variance `σ̂ₙ²`.
pub fn wald_test<T: Scalar>(
    y: &SampleMatrix<T>,
    z: &SampleMatrix<T>,
    perms: &PermutationFamily,
    seed: &SeedSpec,
    opts: &EstimatorOptions,
    side: Side,
) -> Result<TestReport<T>> {
    let (t_hat, parts) = wald_parts(y, z, perms, seed, opts)?;
    let mut report = wald_test_with_sigma(t_hat, y.rows(), parts.sigma_hat_sq, side)?;
    report.parts = Some(parts);
    Ok(report)
}

/// Wald test with a supplied variance (e.g. a population oracle).
pub fn wald_test_with_sigma<T: Scalar>(t_hat: T, n: usize, sigma_sq: f64, side: Side) -> Result<TestReport<T>> {
    if !(sigma_sq > 0.0 && sigma_sq.is_finite()) {
        return Err(Error::DegenerateVariance(sigma_sq));
    }
    let statistic = (n as f64).sqrt() * t_hat.as_f64() / sigma_sq.sqrt();
    Ok(TestReport { n, t_hat, sigma_hat_sq: sigma_sq, statistic, p_value: p_value(statistic, side), side, parts: None })
}
