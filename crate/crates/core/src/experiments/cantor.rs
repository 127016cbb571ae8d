//! Neighbour-graph statistics along geometric sample-size sequences
//! `n = ⌊2^k x⌋`, for Cantor `Z` and a uniform control.
//!
//! For Cantor `Z` the expectations approach log-periodic functions of `n`
//! rather than constants; for uniform `Z` they converge (mutual fraction to
//! `A_1 = 2/3`, in-degree pair sum to `B_1 = 1/2`).

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_nonempty, check_reps, elapsed_ms, provenance, ExperimentConfig, Provenance, Timing};
use crate::data::{SampleMatrix, SeedSpec};
use crate::domcount::PointSet;
use crate::error::{Error, Result};
use crate::nn::{nearest_neighbors, neighbor_stats};
use crate::simgen::{cantor_a, cantor_b, gen_cantor};
use crate::stats;
use crate::variance::a_const;

const TRAJ: u64 = 0xca47;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZLaw {
    Cantor,
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CantorConfig {
    pub x: Vec<f64>,
    pub k: Vec<u32>,
    pub reps: usize,
    pub digits: usize,
    /// Also run the uniform control.
    pub control: bool,
    pub seed: u64,
}

impl Default for CantorConfig {
    fn default() -> Self {
        Self { x: vec![1.0, 1.3, 1.7], k: (8..=14).collect(), reps: 2000, digits: 40, control: true, seed: 1 }
    }
}

impl CantorConfig {
    pub fn validate(&self) -> Result<()> {
        check_reps(self.reps)?;
        check_nonempty(&self.x, "x")?;
        check_nonempty(&self.k, "k")?;
        if self.x.iter().any(|x| !(1.0..2.0).contains(x)) {
            return Err(Error::InvalidInput("x values must lie in [1, 2)".into()));
        }
        if self.k.iter().any(|&k| !(2..=30).contains(&k)) || self.digits == 0 {
            return Err(Error::InvalidInput("k must lie in 2..=30 and digits must be positive".into()));
        }
        Ok(())
    }

    fn laws(&self) -> Vec<ZLaw> {
        if self.control { vec![ZLaw::Cantor, ZLaw::Uniform] } else { vec![ZLaw::Cantor] }
    }
}

/// Replication average at one `(law, x, k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CantorPoint {
    #[serde(flatten)]
    pub provenance: Provenance,
    pub law: ZLaw,
    pub x: f64,
    pub k: u32,
    pub n: usize,
    pub reps: usize,
    /// Mean of `(1/n) Σ 1{M(M(i)) = i}`, an unbiased estimate of `(n-1) a_n`.
    pub mutual_mean: f64,
    pub mutual_se: f64,
    /// Mean of `(1/n) Σ |M⁻¹(i)|(|M⁻¹(i)| - 1)`, unbiased for `(n-1) b_n`.
    pub indegree_mean: f64,
    pub indegree_se: f64,
    pub mutual_theory: f64,
    pub indegree_theory: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CantorSummary {
    pub law: ZLaw,
    /// Within each `x`, every pair of `k` agrees within 3 combined SEs.
    pub stable_within_x: bool,
    /// Some pair of `x` values (pooled over `k`) differs by more than 3 SEs.
    pub differs_across_x: bool,
    pub pooled_mutual: Vec<f64>,
    pub pooled_mutual_se: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CantorResult {
    pub config: CantorConfig,
    pub rows: Vec<CantorPoint>,
    pub summary: Vec<CantorSummary>,
    pub timing: Vec<Timing>,
}

fn sample_z(law: ZLaw, n: usize, digits: usize, seed: &SeedSpec) -> Result<SampleMatrix<f64>> {
    match law {
        ZLaw::Cantor => gen_cantor(n, digits, seed),
        ZLaw::Uniform => {
            use rand::Rng;
            let mut rng = seed.rng();
            SampleMatrix::from_column((0..n).map(|_| rng.random::<f64>()).collect())
        }
    }
}

fn point(cfg: &CantorConfig, hash: &str, law: ZLaw, x: f64, k: u32) -> Result<CantorPoint> {
    let n = (2f64.powi(k as i32) * x).floor() as usize;
    let sub = SeedSpec::new(cfg.seed).derive_path(&[TRAJ, law as u64, x.to_bits(), k as u64]);
    let stats_per_rep = (0..cfg.reps)
        .into_par_iter()
        .map(|r| {
            let seed = sub.derive(r as u64);
            let z = sample_z(law, n, cfg.digits, &seed)?;
            Ok(neighbor_stats(&nearest_neighbors(&PointSet::from(&z), &seed.derive(1))?))
        })
        .collect::<Result<Vec<_>>>()?;
    let mutual: Vec<f64> = stats_per_rep.iter().map(|s| s.mutual_fraction).collect();
    let indegree: Vec<f64> = stats_per_rep.iter().map(|s| s.indegree_pair_sum).collect();
    let (mutual_theory, indegree_theory) = match law {
        ZLaw::Cantor => (0.5 * cantor_a(n as f64), 0.5 * cantor_b(n as f64)),
        ZLaw::Uniform => (a_const(1)?, 0.5),
    };
    Ok(CantorPoint {
        provenance: provenance(hash, cfg.seed, sub),
        law,
        x,
        k,
        n,
        reps: cfg.reps,
        mutual_mean: stats::mean(&mutual),
        mutual_se: stats::std_error(&mutual),
        indegree_mean: stats::mean(&indegree),
        indegree_se: stats::std_error(&indegree),
        mutual_theory,
        indegree_theory,
    })
}

fn within_3se(a: (f64, f64), b: (f64, f64)) -> bool {
    (a.0 - b.0).abs() <= 3.0 * (a.1 * a.1 + b.1 * b.1).sqrt()
}

fn summarize(cfg: &CantorConfig, law: ZLaw, rows: &[CantorPoint]) -> CantorSummary {
    let mut stable = true;
    let mut pooled = Vec::new();
    for &x in &cfg.x {
        let pts: Vec<(f64, f64)> =
            rows.iter().filter(|r| r.law == law && r.x == x).map(|r| (r.mutual_mean, r.mutual_se)).collect();
        for (i, a) in pts.iter().enumerate() {
            stable &= pts[i + 1..].iter().all(|b| within_3se(*a, *b));
        }
        let m = pts.len() as f64;
        let mean = pts.iter().map(|p| p.0).sum::<f64>() / m;
        let se = pts.iter().map(|p| p.1 * p.1).sum::<f64>().sqrt() / m;
        pooled.push((mean, se));
    }
    let differs = pooled.iter().enumerate().any(|(i, a)| pooled[i + 1..].iter().any(|b| !within_3se(*a, *b)));
    CantorSummary {
        law,
        stable_within_x: stable,
        differs_across_x: differs,
        pooled_mutual: pooled.iter().map(|p| p.0).collect(),
        pooled_mutual_se: pooled.iter().map(|p| p.1).collect(),
    }
}

pub fn run_cantor_trajectory(cfg: &CantorConfig) -> Result<CantorResult> {
    cfg.validate()?;
    let hash = ExperimentConfig::CantorTrajectory(cfg.clone()).hash()?;
    let mut rows = Vec::new();
    let mut timing = Vec::new();
    for law in cfg.laws() {
        for &x in &cfg.x {
            for &k in &cfg.k {
                let start = Instant::now();
                let p = point(cfg, &hash, law, x, k)?;
                timing.push(Timing {
                    cell: format!("{law:?} x={x} k={k}").to_lowercase(),
                    wall_ms: elapsed_ms(start),
                    detail: format!("{} reps at n={}", cfg.reps, p.n),
                });
                rows.push(p);
            }
        }
    }
    let summary = cfg.laws().into_iter().map(|law| summarize(cfg, law, &rows)).collect();
    Ok(CantorResult { config: cfg.clone(), rows, summary, timing })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_control_near_limits() {
        let cfg = CantorConfig { x: vec![1.0], k: vec![10], reps: 200, control: true, ..Default::default() };
        let res = run_cantor_trajectory(&cfg).unwrap();
        let u = res.rows.iter().find(|r| r.law == ZLaw::Uniform).unwrap();
        assert_eq!(u.n, 1024);
        assert!((u.mutual_mean - 2.0 / 3.0).abs() < 4.0 * u.mutual_se + 2e-3, "{u:?}");
        assert!((u.indegree_mean - 0.5).abs() < 4.0 * u.indegree_se + 2e-3, "{u:?}");
        let c = res.rows.iter().find(|r| r.law == ZLaw::Cantor).unwrap();
        assert!((c.mutual_mean - c.mutual_theory).abs() < 4.0 * c.mutual_se + 5e-3, "{c:?}");
    }
}
