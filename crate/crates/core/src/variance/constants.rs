//! Geometric constants of the continuous-`Z` variance limit.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_6};

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::SeedSpec;
use crate::error::{Error, Result};
use crate::quadrature::{adaptive_simpson, lens_volume, unit_ball_volume};
use crate::stats::KahanSum;

/// Monte-Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// `A_d`, via the incomplete-beta ratio in the variable `t = cos²θ`, where
/// the integrand becomes the smooth `2 cos^d θ`.
pub fn a_const(d: usize) -> Result<f64> {
    if d == 0 {
        return Err(Error::InvalidInput("a_const needs d >= 1".into()));
    }
    let f = |t: f64| 2.0 * t.cos().powi(d as i32);
    let part = adaptive_simpson(f, FRAC_PI_6, FRAC_PI_2, 1e-15);
    let full = adaptive_simpson(f, 0.0, FRAC_PI_2, 1e-15);
    Ok(1.0 / (2.0 - part / full))
}

const B_CHUNK: usize = 1 << 14;

fn random_point<R: Rng>(rng: &mut R, d: usize, vd: f64, w: &mut [f64]) -> f64 {
    // proposal density exp(-V_d |w|^d / 2) / 2: V_d |w|^d / 2 ~ Exp(1)
    let e: f64 = Exp1.sample(rng);
    let r = (2.0 * e / vd).powf(1.0 / d as f64);
    let mut norm = 0.0;
    for x in w.iter_mut() {
        *x = StandardNormal.sample(rng);
        norm += *x * *x;
    }
    let s = r / norm.sqrt();
    w.iter_mut().for_each(|x| *x *= s);
    r
}

/// `B_d` by importance sampling, with exact union volumes.
pub fn b_const(d: usize, mc_samples: usize, seed: &SeedSpec) -> Result<McEstimate> {
    if d == 0 {
        return Err(Error::InvalidInput("b_const needs d >= 1".into()));
    }
    if mc_samples < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: mc_samples });
    }
    let vd = unit_ball_volume(d);
    let chunks = mc_samples.div_ceil(B_CHUNK);
    let partial: Vec<(KahanSum, KahanSum)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = seed.derive(c as u64).rng();
            let count = B_CHUNK.min(mc_samples - c * B_CHUNK);
            let (mut w1, mut w2) = (vec![0.0; d], vec![0.0; d]);
            let (mut s, mut s2) = (KahanSum::new(), KahanSum::new());
            for _ in 0..count {
                let r1 = random_point(&mut rng, d, vd, &mut w1);
                let r2 = random_point(&mut rng, d, vd, &mut w2);
                let dist = w1.iter().zip(&w2).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                let mut v = 0.0;
                if r1.max(r2) <= dist {
                    let (p1, p2) = (vd * r1.powi(d as i32), vd * r2.powi(d as i32));
                    let union = p1 + p2 - lens_volume(d, r1, r2, dist);
                    v = 4.0 * (0.5 * (p1 + p2) - union).exp();
                }
                s.add(v);
                s2.add(v * v);
            }
            (s, s2)
        })
        .collect();
    let (mut s, mut s2) = (KahanSum::new(), KahanSum::new());
    for (a, b) in &partial {
        s.add(a.value());
        s2.add(b.value());
    }
    let n = mc_samples as f64;
    let mean = s.value() / n;
    let var = (s2.value() / n - mean * mean).max(0.0) * n / (n - 1.0);
    Ok(McEstimate { value: mean, std_error: (var / n).sqrt(), samples: mc_samples })
}

/// Limit of `σₙ²` when `Z` mixes an absolutely continuous part (weight
/// `1 - η`) with a discrete part (weight `η`).
pub fn sigma_sq_limit(
    gamma1: f64,
    gamma2: f64,
    denom: f64,
    d_z: usize,
    eta: f64,
    mc_samples: usize,
    seed: &SeedSpec,
) -> Result<f64> {
    check_limit_args(denom, eta)?;
    let a = a_const(d_z)?;
    let b = if eta < 1.0 { b_const(d_z, mc_samples, seed)?.value } else { 0.0 };
    sigma_sq_limit_with(gamma1, gamma2, denom, eta, a, b)
}

/// [`sigma_sq_limit`] with precomputed `A_d`, `B_d`.
pub fn sigma_sq_limit_with(gamma1: f64, gamma2: f64, denom: f64, eta: f64, a: f64, b: f64) -> Result<f64> {
    check_limit_args(denom, eta)?;
    Ok((gamma1 * (1.0 + (1.0 - eta) * a) + gamma2 * (eta + (1.0 - eta) * b)) / (denom * denom))
}

fn check_limit_args(denom: f64, eta: f64) -> Result<()> {
    if !(denom > 0.0) {
        return Err(Error::DegenerateVariance(denom));
    }
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidInput(format!("eta must lie in [0, 1], got {eta}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// `∫_{θ0}^{π/2} cos^d` by the reduction formula, written out independently.
    fn cos_tail(d: usize, t0: f64) -> f64 {
        match d {
            0 => FRAC_PI_2 - t0,
            1 => 1.0 - t0.sin(),
            _ => {
                -t0.cos().powi(d as i32 - 1) * t0.sin() / d as f64
                    + (d - 1) as f64 / d as f64 * cos_tail(d - 2, t0)
            }
        }
    }

    #[test]
    fn a_const_closed_forms() {
        assert!((a_const(1).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        let ratio2 = 2.0 / 3.0 - 3f64.sqrt() / (2.0 * PI);
        assert!((a_const(2).unwrap() - 1.0 / (2.0 - ratio2)).abs() < 1e-12);
        for d in 1..12 {
            let want = 1.0 / (2.0 - cos_tail(d, FRAC_PI_6) / cos_tail(d, 0.0));
            let got = a_const(d).unwrap();
            assert!((got - want).abs() < 1e-10 * want, "d={d}");
        }
    }

    #[test]
    fn a_const_decreases_to_half() {
        let vals: Vec<f64> = (1..40).map(|d| a_const(d).unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[1] < w[0]));
        assert!(vals.iter().all(|&a| a > 0.5 && a < 1.0));
        assert!(vals[38] - 0.5 < 0.01);
        assert!(a_const(0).is_err());
    }

    #[test]
    fn b_const_is_deterministic() {
        let s = SeedSpec::new(5);
        assert_eq!(b_const(2, 5000, &s).unwrap(), b_const(2, 5000, &s).unwrap());
    }

    #[test]
    fn limit_substitutions() {
        let (g1, g2, den) = (1.0 / 90.0, 1.0 / 45.0, 1.0 / 6.0);
        let cont = sigma_sq_limit_with(g1, g2, den, 0.0, 2.0 / 3.0, 0.5).unwrap();
        assert!((cont - 16.0 / 15.0).abs() < 1e-12);
        let disc = sigma_sq_limit_with(g1, g2, den, 1.0, 2.0 / 3.0, 0.5).unwrap();
        assert!((disc - 1.2).abs() < 1e-12);
        assert!(sigma_sq_limit_with(g1, g2, 0.0, 0.0, 0.6, 0.5).is_err());
        assert!(sigma_sq_limit_with(g1, g2, den, 1.5, 0.6, 0.5).is_err());
    }
}
