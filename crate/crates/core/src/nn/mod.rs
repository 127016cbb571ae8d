//! Nearest-neighbour map with uniform random tie-breaking, and the degree
//! statistics of that map used by the variance estimator.
//!
//! Ties are exact: two candidates tie only when their squared Euclidean
//! distances are bitwise-equal floating-point values. The tie set of every
//! point is materialized (conceptually) in ascending index order and one
//! member is drawn with the point's own sub-stream draw
//! [`SeedSpec::index_draw`], so the map is reproducible and independent of
//! evaluation order.

mod kdtree;

use serde::{Deserialize, Serialize};

use crate::data::{uniform_index, SeedSpec};
use crate::domcount::PointSet;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use kdtree::KdTree;
pub(crate) use kdtree::sq_dist;

/// All-pairs search is used up to this many points.
pub const BRUTE_FORCE_LIMIT: usize = 64;

/// `m[i]` is the (0-based) index of the nearest other point.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeighborMap {
    m: Vec<usize>,
}

impl NeighborMap {
    pub fn new(m: Vec<usize>) -> Result<Self> {
        let n = m.len();
        if n < 2 {
            return Err(Error::TooFewSamples { needed: 2, got: n });
        }
        for (i, &j) in m.iter().enumerate() {
            if j >= n || j == i {
                return Err(Error::InvalidInput(format!("invalid neighbour {j} for point {i}")));
            }
        }
        Ok(Self { m })
    }

    pub fn n(&self) -> usize {
        self.m.len()
    }

    pub fn get(&self, i: usize) -> usize {
        self.m[i]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.m
    }

    /// Map of the row-permuted sample `p'_i = p_{σ(i)}` reusing this map's
    /// choices: `M'(i) = σ⁻¹(M(σ(i)))`.
    pub fn relabel(&self, sigma: &[usize]) -> Self {
        let n = self.m.len();
        let mut inv = vec![0; n];
        for (i, &s) in sigma.iter().enumerate() {
            inv[s] = i;
        }
        Self { m: (0..n).map(|i| inv[self.m[sigma[i]]]).collect() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeighborStats {
    /// `(1/n) Σ 1{M(M(i)) = i}`.
    pub mutual_fraction: f64,
    /// `(1/n) Σ |M⁻¹(i)| (|M⁻¹(i)| - 1)`.
    pub indegree_pair_sum: f64,
    pub max_indegree: usize,
}

pub fn neighbor_stats(map: &NeighborMap) -> NeighborStats {
    let n = map.n();
    let mut indegree = vec![0usize; n];
    for &j in &map.m {
        indegree[j] += 1;
    }
    let mutual = (0..n).filter(|&i| map.m[map.m[i]] == i).count();
    let pairs: usize = indegree.iter().map(|&c| c * c.saturating_sub(1)).sum();
    NeighborStats {
        mutual_fraction: mutual as f64 / n as f64,
        indegree_pair_sum: pairs as f64 / n as f64,
        max_indegree: indegree.iter().copied().max().unwrap_or(0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NeighborSearch {
    /// All-pairs up to [`BRUTE_FORCE_LIMIT`] points, k-d tree above.
    #[default]
    Auto,
    BruteForce,
    Indexed,
}

pub fn nearest_neighbors<T: Scalar>(points: &PointSet<T>, seed: &SeedSpec) -> Result<NeighborMap> {
    nearest_neighbors_with(points, seed, NeighborSearch::Auto)
}

pub fn nearest_neighbors_with<T: Scalar>(
    points: &PointSet<T>,
    seed: &SeedSpec,
    search: NeighborSearch,
) -> Result<NeighborMap> {
    let mut m = Vec::with_capacity(points.len());
    visit_tie_sets(points, search, |i, ties| {
        m.push(ties.pick(uniform_index(seed.index_draw(i as u64), ties.len())));
    })?;
    Ok(NeighborMap { m })
}

/// Complete tie sets (ascending indices) of every point.
pub fn tie_sets<T: Scalar>(points: &PointSet<T>, search: NeighborSearch) -> Result<Vec<Vec<usize>>> {
    let mut out = Vec::with_capacity(points.len());
    visit_tie_sets(points, search, |_, ties| out.push(ties.to_vec()))?;
    Ok(out)
}

/// A tie set, either explicit or "a sorted group minus the query itself".
enum Ties<'a> {
    Explicit(&'a [usize]),
    GroupWithout(&'a [usize], usize),
}

impl Ties<'_> {
    fn len(&self) -> usize {
        match self {
            Ties::Explicit(v) => v.len(),
            Ties::GroupWithout(g, _) => g.len() - 1,
        }
    }

    fn pick(&self, k: usize) -> usize {
        match *self {
            Ties::Explicit(v) => v[k],
            Ties::GroupWithout(g, me) => {
                let pos = g.partition_point(|&x| x < me);
                if k < pos {
                    g[k]
                } else {
                    g[k + 1]
                }
            }
        }
    }

    fn to_vec(&self) -> Vec<usize> {
        (0..self.len()).map(|k| self.pick(k)).collect()
    }
}

fn visit_tie_sets<T: Scalar>(
    points: &PointSet<T>,
    search: NeighborSearch,
    mut visit: impl FnMut(usize, Ties<'_>),
) -> Result<()> {
    let n = points.len();
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    let brute = match search {
        NeighborSearch::Auto => n <= BRUTE_FORCE_LIMIT,
        NeighborSearch::BruteForce => true,
        NeighborSearch::Indexed => false,
    };
    if brute {
        let mut ties = Vec::new();
        for i in 0..n {
            let p = points.point(i);
            let mut best = T::infinity();
            ties.clear();
            for j in (0..n).filter(|&j| j != i) {
                let d2 = sq_dist(p, points.point(j));
                if d2 < best {
                    best = d2;
                    ties.clear();
                    ties.push(j);
                } else if d2 == best {
                    ties.push(j);
                }
            }
            visit(i, Ties::Explicit(&ties));
        }
        return Ok(());
    }

    // Collapse exact duplicates so heavily tied (discrete) data stays cheap.
    let d = points.dim();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        points
            .point(a)
            .iter()
            .zip(points.point(b))
            .map(|(x, y)| x.partial_cmp(y).unwrap())
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut group_of = vec![0usize; n];
    let mut reps = Vec::new();
    for &i in &order {
        let same = groups
            .last()
            .is_some_and(|g: &Vec<usize>| points.point(g[0]) == points.point(i));
        if !same {
            groups.push(Vec::new());
            reps.extend_from_slice(points.point(i));
        }
        let g = groups.len() - 1;
        groups[g].push(i);
        group_of[i] = g;
    }
    for g in &mut groups {
        g.sort_unstable();
    }
    let unique = PointSet::new(d, reps)?;
    let tree = KdTree::build(&unique);

    let mut found = Vec::new();
    let mut merged = Vec::new();
    for i in 0..n {
        let g = group_of[i];
        let own = &groups[g];
        let best = tree.nearest_all(points.point(i), g, &mut found);
        let mates = own.len() > 1;
        let others_tie = !found.is_empty() && best == T::zero();
        if mates && !others_tie {
            visit(i, Ties::GroupWithout(own, i));
        } else if !mates && found.len() == 1 {
            visit(i, Ties::Explicit(&groups[found[0]]));
        } else {
            merged.clear();
            if mates {
                merged.extend(own.iter().copied().filter(|&j| j != i));
            }
            for &h in &found {
                merged.extend_from_slice(&groups[h]);
            }
            merged.sort_unstable();
            visit(i, Ties::Explicit(&merged));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn line(xs: &[f64]) -> PointSet<f64> {
        PointSet::new(1, xs.to_vec()).unwrap()
    }

    #[test]
    fn untied_line() {
        let map = nearest_neighbors(&line(&[0., 1., 3.]), &SeedSpec::new(1)).unwrap();
        let one_based: Vec<usize> = map.as_slice().iter().map(|j| j + 1).collect();
        assert_eq!(one_based, vec![2, 1, 2]);
    }

    #[test]
    fn identical_points_break_ties_uniformly() {
        let pts = line(&[5., 5., 5.]);
        for search in [NeighborSearch::BruteForce, NeighborSearch::Indexed] {
            let mut hits = [0usize; 3];
            let reps = 10_000;
            for s in 0..reps {
                let m = nearest_neighbors_with(&pts, &SeedSpec::new(s), search).unwrap();
                hits[m.get(0)] += 1;
            }
            assert_eq!(hits[0], 0);
            let f = hits[1] as f64 / reps as f64;
            assert!((f - 0.5).abs() < 0.02, "{search:?}: {f}");
        }
    }

    #[test]
    fn too_few_points() {
        assert!(matches!(
            nearest_neighbors(&line(&[1.]), &SeedSpec::new(0)),
            Err(Error::TooFewSamples { .. })
        ));
    }

    #[test]
    fn stats_examples() {
        let s = neighbor_stats(&NeighborMap::new(vec![1, 0, 1]).unwrap());
        assert!((s.mutual_fraction - 2.0 / 3.0).abs() < 1e-15);
        assert!((s.indegree_pair_sum - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(s.max_indegree, 2);

        let s = neighbor_stats(&NeighborMap::new(vec![1, 0, 3, 2]).unwrap());
        assert_eq!(s.mutual_fraction, 1.0);

        let n = 9;
        let star: Vec<usize> = (0..n).map(|i| if i == 0 { 1 } else { 0 }).collect();
        let s = neighbor_stats(&NeighborMap::new(star).unwrap());
        assert!((s.indegree_pair_sum - ((n - 1) * (n - 2)) as f64 / n as f64).abs() < 1e-12);
        assert_eq!(s.max_indegree, n - 1);
    }

    #[test]
    fn invalid_map_rejected() {
        assert!(NeighborMap::new(vec![0, 1]).is_err());
        assert!(NeighborMap::new(vec![1, 5]).is_err());
    }

    fn random_points(n: usize, d: usize, seed: u64, grid: Option<i32>) -> PointSet<f64> {
        let mut rng = SeedSpec::new(seed).rng();
        let data = (0..n * d)
            .map(|_| match grid {
                Some(g) => f64::from(rng.random_range(0..g)),
                None => rng.random::<f64>(),
            })
            .collect();
        PointSet::new(d, data).unwrap()
    }

    #[test]
    fn indexed_tie_sets_match_brute_force() {
        for (n, d, grid) in [(500, 3, None), (400, 2, Some(4)), (300, 1, Some(10)), (257, 4, Some(2)), (600, 2, None)] {
            let pts = random_points(n, d, n as u64, grid);
            let brute = tie_sets(&pts, NeighborSearch::BruteForce).unwrap();
            let indexed = tie_sets(&pts, NeighborSearch::Indexed).unwrap();
            assert_eq!(brute, indexed, "n={n} d={d} grid={grid:?}");
            let seed = SeedSpec::new(9);
            assert_eq!(
                nearest_neighbors_with(&pts, &seed, NeighborSearch::BruteForce).unwrap(),
                nearest_neighbors_with(&pts, &seed, NeighborSearch::Indexed).unwrap()
            );
        }
    }

    #[test]
    fn brute_force_argmin_matches_exhaustive_distances() {
        let pts = random_points(500, 3, 77, None);
        let map = nearest_neighbors(&pts, &SeedSpec::new(2)).unwrap();
        for i in 0..pts.len() {
            let dists: Vec<f64> = (0..pts.len())
                .map(|j| if j == i { f64::INFINITY } else { sq_dist(pts.point(i), pts.point(j)) })
                .collect();
            let min = dists.iter().copied().fold(f64::INFINITY, f64::min);
            assert_eq!(dists[map.get(i)], min);
        }
    }

    #[test]
    fn general_position_is_seed_independent() {
        let pts = random_points(300, 2, 5, None);
        let a = nearest_neighbors(&pts, &SeedSpec::new(1)).unwrap();
        let b = nearest_neighbors(&pts, &SeedSpec::new(2)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn exact_rigid_motions_preserve_the_map() {
        // integer grid: shifts, coordinate swaps, sign flips and power-of-two
        // scaling are all exact in floating point
        let pts = random_points(300, 2, 8, Some(7));
        let moved: Vec<f64> = (0..pts.len())
            .flat_map(|i| {
                let p = pts.point(i);
                [-4.0 * p[1] + 3.0, 4.0 * p[0] - 11.0]
            })
            .collect();
        let moved = PointSet::new(2, moved).unwrap();
        assert_eq!(tie_sets(&pts, NeighborSearch::Auto).unwrap(), tie_sets(&moved, NeighborSearch::Auto).unwrap());
        let seed = SeedSpec::new(4);
        assert_eq!(nearest_neighbors(&pts, &seed).unwrap(), nearest_neighbors(&moved, &seed).unwrap());
    }

    #[test]
    fn relabel_matches_recomputation() {
        let pts = random_points(50, 2, 3, None);
        let map = nearest_neighbors(&pts, &SeedSpec::new(0)).unwrap();
        let sigma: Vec<usize> = (0..50).map(|i| (i * 7 + 3) % 50).collect();
        let permuted = pts.select(&sigma);
        assert_eq!(map.relabel(&sigma), nearest_neighbors(&permuted, &SeedSpec::new(0)).unwrap());
    }
}
