//! Exact dominance counting.
//!
//! For point sets `A` and `B` of equal dimension, computes for every `b_j`
//! the number of `a_i` with `a_i <= b_j` in every coordinate (non-strict, so
//! ties count). The brute-force oracle is quadratic; the fast paths are a
//! sort + binary search in one dimension, a merge-sort over blocks of second
//! coordinates in two dimensions, and a divide-and-conquer over the first
//! coordinate that bottoms out in the two-dimensional routine for `d >= 3`.

mod merge;

use std::ops::Neg;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::SampleMatrix;

pub use merge::{rank_2d, rank_nd};

/// A set of `d`-dimensional points stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet<T> {
    d: usize,
    data: Vec<T>,
}

impl<T: Copy + PartialOrd> PointSet<T> {
    pub fn new(d: usize, data: Vec<T>) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidInput("point dimension must be at least 1".into()));
        }
        if !data.len().is_multiple_of(d) {
            return Err(Error::InvalidInput(format!(
                "{} values do not form {d}-dimensional points",
                data.len()
            )));
        }
        // NaN is the only value without a self-order.
        if data.iter().any(|v| v.partial_cmp(v).is_none()) {
            return Err(Error::InvalidInput("point coordinates must be ordered (no NaN)".into()));
        }
        Ok(Self { d, data })
    }

    pub fn empty(d: usize) -> Self {
        assert!(d > 0);
        Self { d, data: Vec::new() }
    }

    pub fn from_rows<R: AsRef<[T]>>(d: usize, rows: &[R]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * d);
        for r in rows {
            let r = r.as_ref();
            if r.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: r.len() });
            }
            data.extend_from_slice(r);
        }
        Self::new(d, data)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn point(&self, i: usize) -> &[T] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn coord(&self, i: usize, k: usize) -> T {
        self.data[i * self.d + k]
    }

    pub fn values(&self) -> &[T] {
        &self.data
    }

    /// Points selected (and reordered) by `index`.
    pub fn select(&self, index: &[usize]) -> Self {
        let mut data = Vec::with_capacity(index.len() * self.d);
        for &i in index {
            data.extend_from_slice(self.point(i));
        }
        Self { d: self.d, data }
    }
}

impl<T: Scalar> From<&SampleMatrix<T>> for PointSet<T> {
    fn from(m: &SampleMatrix<T>) -> Self {
        Self { d: m.cols(), data: m.values().to_vec() }
    }
}

impl<T: Scalar> From<SampleMatrix<T>> for PointSet<T> {
    fn from(m: SampleMatrix<T>) -> Self {
        Self::from(&m)
    }
}

/// One count per query point.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DominanceCounts {
    pub counts: Vec<usize>,
}

impl DominanceCounts {
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.counts
    }
}

impl std::ops::Index<usize> for DominanceCounts {
    type Output = usize;
    fn index(&self, i: usize) -> &usize {
        &self.counts[i]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CountMode {
    /// Dimension-specific fast algorithm.
    #[default]
    Auto,
    /// Quadratic pairwise comparison.
    Oracle,
    /// Same routing as `Auto`.
    Fast,
}

impl std::str::FromStr for CountMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Self::Auto),
            "oracle" => Ok(Self::Oracle),
            "fast" => Ok(Self::Fast),
            other => Err(Error::InvalidInput(format!("unknown mode `{other}`"))),
        }
    }
}

fn check_dims<T: Copy + PartialOrd>(a: &PointSet<T>, b: &PointSet<T>) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: b.dim() });
    }
    Ok(())
}

fn require_dim<T: Copy + PartialOrd>(a: &PointSet<T>, ok: bool, what: &str) -> Result<()> {
    if !ok {
        return Err(Error::InvalidInput(format!(
            "{what} counting does not apply to dimension {}",
            a.dim()
        )));
    }
    Ok(())
}

#[inline]
pub(crate) fn dominated_by<T: PartialOrd>(a: &[T], b: &[T]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

/// Pairwise-comparison baseline.
pub fn count_dominated_oracle<T: Copy + PartialOrd>(a: &PointSet<T>, b: &PointSet<T>) -> Result<DominanceCounts> {
    check_dims(a, b)?;
    let counts = (0..b.len())
        .map(|j| {
            let bj = b.point(j);
            (0..a.len()).filter(|&i| dominated_by(a.point(i), bj)).count()
        })
        .collect();
    Ok(DominanceCounts { counts })
}

/// Sort `A`, binary-search every `b_j`.
pub fn count_dominated_1d<T: Copy + PartialOrd>(a: &PointSet<T>, b: &PointSet<T>) -> Result<DominanceCounts> {
    check_dims(a, b)?;
    require_dim(a, a.dim() == 1, "one-dimensional")?;
    let mut sorted = a.values().to_vec();
    sorted.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let counts = b.values().iter().map(|q| sorted.partition_point(|x| x <= q)).collect();
    Ok(DominanceCounts { counts })
}

/// Two-dimensional merge-sort rank construction.
pub fn count_dominated_2d<T: Copy + PartialOrd>(a: &PointSet<T>, b: &PointSet<T>) -> Result<DominanceCounts> {
    check_dims(a, b)?;
    require_dim(a, a.dim() == 2, "two-dimensional")?;
    let pa: Vec<(T, T)> = (0..a.len()).map(|i| (a.coord(i, 0), a.coord(i, 1))).collect();
    let pb: Vec<(T, T)> = (0..b.len()).map(|i| (b.coord(i, 0), b.coord(i, 1))).collect();
    let mut counts = vec![0; b.len()];
    rank_2d(pa, &pb, &mut counts);
    Ok(DominanceCounts { counts })
}

/// Divide-and-conquer rank construction for `d >= 3`.
pub fn count_dominated_nd<T: Copy + PartialOrd>(a: &PointSet<T>, b: &PointSet<T>) -> Result<DominanceCounts> {
    check_dims(a, b)?;
    require_dim(a, a.dim() >= 3, "divide-and-conquer")?;
    let mut counts = vec![0; b.len()];
    let b_idx: Vec<usize> = (0..b.len()).collect();
    rank_nd(a, (0..a.len()).collect(), b, &b_idx, 0, &mut counts);
    Ok(DominanceCounts { counts })
}

/// Dispatches on dimension (`Auto`/`Fast`) or runs the oracle.
pub fn count_dominated<T: Copy + PartialOrd>(a: &PointSet<T>, b: &PointSet<T>, mode: CountMode) -> Result<DominanceCounts> {
    check_dims(a, b)?;
    match (mode, a.dim()) {
        (CountMode::Oracle, _) => count_dominated_oracle(a, b),
        (_, 1) => count_dominated_1d(a, b),
        (_, 2) => count_dominated_2d(a, b),
        _ => count_dominated_nd(a, b),
    }
}

/// `counts[j] = #{i : a_i >= b_j}`, by negating both sets.
pub fn count_dominating<T>(a: &PointSet<T>, b: &PointSet<T>, mode: CountMode) -> Result<DominanceCounts>
where
    T: Copy + PartialOrd + Neg<Output = T>,
{
    check_dims(a, b)?;
    let neg = |p: &PointSet<T>| PointSet { d: p.d, data: p.data.iter().map(|&v| -v).collect() };
    count_dominated(&neg(a), &neg(b), mode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ps(d: usize, rows: &[&[f64]]) -> PointSet<f64> {
        PointSet::from_rows(d, rows).unwrap()
    }

    fn all_modes(a: &PointSet<f64>, b: &PointSet<f64>) -> Vec<usize> {
        let oracle = count_dominated_oracle(a, b).unwrap();
        for mode in [CountMode::Auto, CountMode::Fast] {
            assert_eq!(count_dominated(a, b, mode).unwrap(), oracle);
        }
        oracle.counts
    }

    #[test]
    fn oracle_examples() {
        let a = ps(2, &[&[1., 2.], &[3., 1.], &[2., 3.]]);
        assert_eq!(all_modes(&a, &ps(2, &[&[2., 2.]])), vec![1]);
        assert_eq!(all_modes(&PointSet::empty(2), &ps(2, &[&[2., 2.], &[0., 0.]])), vec![0, 0]);
        for d in 1..=5 {
            let z = vec![0.0; d];
            assert_eq!(all_modes(&ps(d, &[&z]), &ps(d, &[&z])), vec![1]);
        }
    }

    #[test]
    fn one_dimensional_examples() {
        let a = ps(1, &[&[1.], &[2.], &[2.], &[5.]]);
        assert_eq!(count_dominated_1d(&a, &ps(1, &[&[2.]])).unwrap().counts, vec![3]);
        assert_eq!(count_dominated_1d(&a, &ps(1, &[&[0.5]])).unwrap().counts, vec![0]);
        assert!(count_dominated_1d(&ps(2, &[&[1., 1.]]), &ps(2, &[&[1., 1.]])).is_err());
    }

    #[test]
    fn two_dimensional_examples() {
        let a = ps(2, &[&[1., 1.], &[2., 3.], &[3., 2.], &[4., 4.]]);
        let b = ps(2, &[&[3., 3.], &[0., 9.], &[9., 0.]]);
        // (3,3) weakly dominates (1,1), (2,3) and (3,2)
        assert_eq!(count_dominated_2d(&a, &b).unwrap().counts, vec![3, 0, 0]);
        assert_eq!(count_dominated_oracle(&a, &b).unwrap().counts, vec![3, 0, 0]);
        let p: &[f64] = &[1., 1.];
        let same = ps(2, &[p; 5]);
        assert_eq!(count_dominated_2d(&same, &ps(2, &[&[1., 1.]])).unwrap().counts, vec![5]);
        assert!(count_dominated_2d(&ps(3, &[&[1., 1., 1.]]), &ps(3, &[&[1., 1., 1.]])).is_err());
    }

    #[test]
    fn nd_examples() {
        let a = ps(3, &[&[1., 1., 1.], &[2., 2., 2.]]);
        let b = ps(3, &[&[2., 2., 2.], &[1., 0., 2.]]);
        assert_eq!(count_dominated_nd(&a, &b).unwrap().counts, vec![2, 0]);
        assert!(count_dominated_nd(&ps(2, &[&[1., 1.]]), &ps(2, &[&[1., 1.]])).is_err());
    }

    #[test]
    fn dominating_examples() {
        let a = ps(2, &[&[1., 2.], &[3., 4.]]);
        assert_eq!(count_dominating(&a, &ps(2, &[&[2., 2.]]), CountMode::Auto).unwrap().counts, vec![1]);
        assert_eq!(count_dominating(&a, &ps(2, &[&[3., 4.]]), CountMode::Auto).unwrap().counts, vec![1]);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let a = ps(2, &[&[1., 2.]]);
        let b = ps(1, &[&[1.]]);
        for mode in [CountMode::Auto, CountMode::Oracle] {
            assert!(matches!(count_dominated(&a, &b, mode), Err(Error::DimensionMismatch { .. })));
        }
        assert!(count_dominating(&a, &b, CountMode::Auto).is_err());
    }

    #[test]
    fn integer_inputs_are_exact() {
        let a = PointSet::from_rows(3, &[[1i64, 5, 2], [0, 0, 0], [7, 7, 7], [1, 5, 2]]).unwrap();
        let b = PointSet::from_rows(3, &[[1i64, 5, 2], [7, 7, 7], [-1, 0, 0]]).unwrap();
        let fast = count_dominated(&a, &b, CountMode::Fast).unwrap();
        assert_eq!(fast.counts, vec![3, 4, 0]);
    }

    #[test]
    fn nan_rejected() {
        assert!(PointSet::new(1, vec![f64::NAN]).is_err());
    }

    fn grid_points(d: usize, max_n: usize) -> impl Strategy<Value = PointSet<f64>> {
        prop::collection::vec(prop::collection::vec(0i32..6, d), 0..max_n).prop_map(move |rows| {
            let data = rows.into_iter().flatten().map(f64::from).collect();
            PointSet::new(d, data).unwrap()
        })
    }

    fn pair(max_n: usize) -> impl Strategy<Value = (PointSet<f64>, PointSet<f64>)> {
        (1usize..=5).prop_flat_map(move |d| (grid_points(d, max_n), grid_points(d, max_n)))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn fast_matches_oracle((a, b) in pair(80)) {
            let oracle = count_dominated_oracle(&a, &b).unwrap();
            prop_assert_eq!(count_dominated(&a, &b, CountMode::Fast).unwrap(), oracle);
        }

        #[test]
        fn dominating_matches_negated_oracle((a, b) in pair(60)) {
            let fast = count_dominating(&a, &b, CountMode::Fast).unwrap();
            let direct: Vec<usize> = (0..b.len())
                .map(|j| (0..a.len()).filter(|&i| dominated_by(b.point(j), a.point(i))).count())
                .collect();
            prop_assert_eq!(fast.counts, direct);
        }

        #[test]
        fn monotone_in_query((a, b) in pair(60), bump in 0usize..5) {
            prop_assume!(!b.is_empty());
            let d = b.dim();
            let mut raised = b.values().to_vec();
            for (p, v) in raised.iter_mut().enumerate() {
                if p % d == bump % d { *v += 1.0; }
            }
            let raised = PointSet::new(d, raised).unwrap();
            let lo = count_dominated(&a, &b, CountMode::Fast).unwrap();
            let hi = count_dominated(&a, &raised, CountMode::Fast).unwrap();
            for j in 0..b.len() { prop_assert!(lo[j] <= hi[j]); }
        }

        #[test]
        fn invariant_under_shuffling((a, b) in pair(60), rot in 0usize..60) {
            let na = a.len();
            let nb = b.len();
            let a_perm: Vec<usize> = (0..na).map(|i| (i + rot) % na.max(1)).collect();
            let b_perm: Vec<usize> = (0..nb).rev().collect();
            let base = count_dominated(&a, &b, CountMode::Fast).unwrap();
            let shuffled = count_dominated(&a.select(&a_perm), &b.select(&b_perm), CountMode::Fast).unwrap();
            for (k, &j) in b_perm.iter().enumerate() { prop_assert_eq!(shuffled[k], base[j]); }
        }
    }
}
