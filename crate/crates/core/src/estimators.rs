//! Point estimators of the multivariate coefficient, its conditional variant
//! and the naive (un-permuted) variant.
//!
//! All rank sums are exact integers; the coefficient is their ratio and is
//! reported raw, so finite-sample values may fall outside `[0, 1]`.

use crate::data::{PermutationFamily, SampleMatrix, SeedSpec};
use crate::domcount::{count_dominated, count_dominating, CountMode, PointSet};
use crate::error::{Error, Result};
use crate::nn::{nearest_neighbors_with, NeighborMap, NeighborSearch};
use crate::scalar::Scalar;

/// Sub-stream tags for the neighbour maps.
pub(crate) const STREAM_NN_Z: u64 = 0x4e4e_5a;
pub(crate) const STREAM_NN_XZ: u64 = 0x4e4e_585a;
pub(crate) const STREAM_NN_X: u64 = 0x4e4e_58;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EstimatorOptions {
    pub mode: CountMode,
    /// Z-score the conditioning columns before the neighbour search.
    pub standardize: bool,
    pub search: NeighborSearch,
}

impl EstimatorOptions {
    pub fn with_mode(mode: CountMode) -> Self {
        Self { mode, ..Self::default() }
    }
}

/// Per-sample rank sums of the conditional estimator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConditionalTerms {
    /// `R̃(Y_i ∧ Y_{M_(X,Z)(i)})`
    pub rank_xz: Vec<usize>,
    /// `R̃(Y_i ∧ Y_{M_X(i)})`
    pub rank_x: Vec<usize>,
    /// `R̃(Y_i)`
    pub rank_self: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientReport<T> {
    pub value: T,
    pub numerator: T,
    pub denominator: T,
    pub n: usize,
    /// `R̃(Y_i ∧ Y_{M(i)})` (or `R(·)` for the naive estimator).
    pub rank_terms: Vec<usize>,
    /// `Ľ_i` (or `L_i` for the naive estimator); empty for the conditional one.
    pub l_check: Vec<usize>,
    pub conditional: Option<ConditionalTerms>,
}

fn check_rows<T: Scalar>(a: &SampleMatrix<T>, b: &SampleMatrix<T>) -> Result<()> {
    if a.rows() != b.rows() {
        return Err(Error::RowMismatch { left: a.rows(), right: b.rows() });
    }
    if a.rows() < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: a.rows() });
    }
    Ok(())
}

fn check_perms<T: Scalar>(y: &SampleMatrix<T>, perms: &PermutationFamily) -> Result<()> {
    if perms.n() != y.rows() {
        return Err(Error::RowMismatch { left: y.rows(), right: perms.n() });
    }
    if perms.d_y() != y.cols() {
        return Err(Error::DimensionMismatch { expected: y.cols(), got: perms.d_y() });
    }
    Ok(())
}

pub(crate) fn neighbor_map<T: Scalar>(
    z: &SampleMatrix<T>,
    seed: &SeedSpec,
    tag: u64,
    opts: &EstimatorOptions,
) -> Result<NeighborMap> {
    let pts: PointSet<T> = if opts.standardize { z.standardized().into() } else { z.into() };
    nearest_neighbors_with(&pts, &seed.derive(tag), opts.search)
}

/// Coordinatewise minima `Y_i ∧ Y_{j(i)}` appended to `out`.
pub(crate) fn push_meets<T: Scalar>(y: &SampleMatrix<T>, pairs: impl Iterator<Item = (usize, usize)>, out: &mut Vec<T>) {
    for (i, j) in pairs {
        out.extend(y.row(i).iter().zip(y.row(j)).map(|(&a, &b)| a.min(b)));
    }
}

fn ratio<T: Scalar>(num: i128, den: i128) -> (T, T, T) {
    let (num, den) = (T::from_count(num), T::from_count(den));
    (num / den, num, den)
}

/// `Ľ_i = #{l : Y_l >= Ỹ_i}` for every `i`.
pub(crate) fn l_check<T: Scalar>(y: &PointSet<T>, y_perm: &PointSet<T>, mode: CountMode) -> Result<Vec<usize>> {
    Ok(count_dominating(y, y_perm, mode)?.counts)
}

/// `Σ (n - Ľ_i) Ľ_i`, the shared denominator.
pub(crate) fn l_denominator(l: &[usize]) -> i128 {
    let n = l.len() as i128;
    l.iter().map(|&v| (n - v as i128) * v as i128).sum()
}

/// Estimator with a given neighbour map, so callers can reuse or inject one.
pub fn t_ac_with_map<T: Scalar>(
    y: &SampleMatrix<T>,
    map: &NeighborMap,
    perms: &PermutationFamily,
    mode: CountMode,
) -> Result<CoefficientReport<T>> {
    if map.n() != y.rows() {
        return Err(Error::RowMismatch { left: y.rows(), right: map.n() });
    }
    check_perms(y, perms)?;
    let n = y.rows();
    let y_pts = PointSet::from(y);
    let y_perm = PointSet::from(perms.apply(y)?);

    let mut meets = Vec::with_capacity(n * y.cols());
    push_meets(y, (0..n).map(|i| (i, map.get(i))), &mut meets);
    let meets = PointSet::new(y.cols(), meets)?;
    let rank_terms = count_dominated(&y_perm, &meets, mode)?.counts;
    let l = l_check(&y_pts, &y_perm, mode)?;

    let nn = n as i128;
    let numerator: i128 = rank_terms
        .iter()
        .zip(&l)
        .map(|(&r, &l)| nn * r as i128 - (l as i128) * (l as i128))
        .sum();
    let denominator = l_denominator(&l);
    if denominator == 0 {
        return Err(Error::ConstantY);
    }
    let (value, numerator, denominator) = ratio(numerator, denominator);
    Ok(CoefficientReport { value, numerator, denominator, n, rank_terms, l_check: l, conditional: None })
}

/// Multivariate coefficient of `Y` on `Z`.
pub fn t_ac<T: Scalar>(
    y: &SampleMatrix<T>,
    z: &SampleMatrix<T>,
    perms: &PermutationFamily,
    seed: &SeedSpec,
    opts: &EstimatorOptions,
) -> Result<CoefficientReport<T>> {
    check_rows(y, z)?;
    check_perms(y, perms)?;
    let map = neighbor_map(z, seed, STREAM_NN_Z, opts)?;
    t_ac_with_map(y, &map, perms, opts.mode)
}

/// Conditional coefficient of `Y` on `Z` given `X`.
pub fn t_ac_cond<T: Scalar>(
    y: &SampleMatrix<T>,
    z: &SampleMatrix<T>,
    x: &SampleMatrix<T>,
    perms: &PermutationFamily,
    seed: &SeedSpec,
    opts: &EstimatorOptions,
) -> Result<CoefficientReport<T>> {
    check_rows(y, z)?;
    check_rows(y, x)?;
    check_perms(y, perms)?;
    let n = y.rows();
    let map_xz = neighbor_map(&x.hconcat(z)?, seed, STREAM_NN_XZ, opts)?;
    let map_x = neighbor_map(x, seed, STREAM_NN_X, opts)?;
    let y_perm = PointSet::from(perms.apply(y)?);

    // one batched query: meets with M_(X,Z), meets with M_X, then Y itself
    let mut queries = Vec::with_capacity(3 * n * y.cols());
    push_meets(y, (0..n).map(|i| (i, map_xz.get(i))), &mut queries);
    push_meets(y, (0..n).map(|i| (i, map_x.get(i))), &mut queries);
    queries.extend_from_slice(y.values());
    let queries = PointSet::new(y.cols(), queries)?;
    let mut ranks = count_dominated(&y_perm, &queries, opts.mode)?.counts;
    let rank_self = ranks.split_off(2 * n);
    let rank_x = ranks.split_off(n);
    let rank_xz = ranks;

    let numerator: i128 = rank_xz.iter().zip(&rank_x).map(|(&a, &b)| a as i128 - b as i128).sum();
    let denominator: i128 = rank_self.iter().zip(&rank_x).map(|(&a, &b)| a as i128 - b as i128).sum();
    if denominator == 0 {
        return Err(Error::YFunctionOfX);
    }
    let (value, numerator, denominator) = ratio(numerator, denominator);
    Ok(CoefficientReport {
        value,
        numerator,
        denominator,
        n,
        rank_terms: rank_xz.clone(),
        l_check: Vec::new(),
        conditional: Some(ConditionalTerms { rank_xz, rank_x, rank_self }),
    })
}

/// Naive extension: multivariate `R` and `L` over the un-permuted sample.
///
/// Converges to a measure that can vanish under dependence; kept to
/// demonstrate that failure.
pub fn t_ac_naive<T: Scalar>(
    y: &SampleMatrix<T>,
    z: &SampleMatrix<T>,
    seed: &SeedSpec,
    opts: &EstimatorOptions,
) -> Result<CoefficientReport<T>> {
    check_rows(y, z)?;
    let n = y.rows();
    let map = neighbor_map(z, seed, STREAM_NN_Z, opts)?;
    let y_pts = PointSet::from(y);
    let mut meets = Vec::with_capacity(n * y.cols());
    push_meets(y, (0..n).map(|i| (i, map.get(i))), &mut meets);
    let meets = PointSet::new(y.cols(), meets)?;
    let rank_terms = count_dominated(&y_pts, &meets, opts.mode)?.counts;
    let l = count_dominating(&y_pts, &y_pts, opts.mode)?.counts;

    let nn = n as i128;
    let numerator: i128 = rank_terms
        .iter()
        .zip(&l)
        .map(|(&r, &l)| nn * r as i128 - (l as i128) * (l as i128))
        .sum();
    let denominator = l_denominator(&l);
    if denominator == 0 {
        return Err(Error::ConstantY);
    }
    let (value, numerator, denominator) = ratio(numerator, denominator);
    Ok(CoefficientReport { value, numerator, denominator, n, rank_terms, l_check: l, conditional: None })
}
