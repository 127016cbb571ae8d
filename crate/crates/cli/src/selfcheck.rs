//! Fast paths against brute force, and statistics against closed forms.

use acdep::simgen::{gen_base, Base};
use acdep::{
    a_const, b_const, build_permutations, count_dominated, count_dominating, gamma_hats, normal_cdf, t_ac,
    t_ac_cond, variance_parts, CountMode, EstimatorOptions, PermScheme, PointSet, SampleMatrix, SeedSpec,
};
use serde::Serialize;

#[derive(Serialize)]
pub struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
}

#[derive(Serialize)]
pub struct Report {
    seed: u64,
    checks: Vec<Check>,
    pub pass: bool,
}

fn check(name: &'static str, run: impl FnOnce() -> acdep::Result<(bool, String)>) -> Check {
    match run() {
        Ok((pass, detail)) => Check { name, pass, detail },
        Err(e) => Check { name, pass: false, detail: format!("error: {e}") },
    }
}

/// Gaussian draws rounded to a grid of width 1/2, so coordinates tie often.
fn tied(n: usize, d: usize, seed: &SeedSpec) -> acdep::Result<SampleMatrix<f64>> {
    gen_base(n, d, Base::Gaussian, seed)?.map(|_, v| (2.0 * v).round() / 2.0)
}

fn uniform(n: usize, d: usize, seed: &SeedSpec) -> acdep::Result<SampleMatrix<f64>> {
    gen_base(n, d, Base::Gaussian, seed)?.map(|_, v| normal_cdf(v))
}

fn domcount_suite(seed: &SeedSpec) -> acdep::Result<(bool, String)> {
    let mut instances = 0;
    for d in 1..=5 {
        for k in 0..20u64 {
            let s = seed.derive_path(&[d as u64, k]);
            let (na, nb) = (1 + (7 * k as usize + 3 * d) % 200, 1 + (11 * k as usize + d) % 150);
            let a = PointSet::from(tied(na, d, &s.derive(0))?);
            let b = PointSet::from(tied(nb, d, &s.derive(1))?);
            for f in [count_dominated::<f64>, count_dominating::<f64>] {
                if f(&a, &b, CountMode::Fast)? != f(&a, &b, CountMode::Oracle)? {
                    return Ok((false, format!("mismatch at d={d}, instance {k}")));
                }
            }
            instances += 1;
        }
    }
    Ok((true, format!("{instances} instances, d = 1..5, both relations")))
}

fn estimator_suite(seed: &SeedSpec) -> acdep::Result<(bool, String)> {
    let n = 300;
    let y = tied(n, 2, &seed.derive(0))?;
    let z = tied(n, 2, &seed.derive(1))?;
    let x = tied(n, 1, &seed.derive(2))?;
    let perms = build_permutations(n, 2, PermScheme::Random, &seed.derive(3))?;
    let fast = EstimatorOptions::with_mode(CountMode::Fast);
    let slow = EstimatorOptions::with_mode(CountMode::Oracle);
    let a = t_ac(&y, &z, &perms, seed, &fast)?;
    let b = t_ac(&y, &z, &perms, seed, &slow)?;
    let c = t_ac_cond(&y, &z, &x, &perms, seed, &fast)?;
    let e = t_ac_cond(&y, &z, &x, &perms, seed, &slow)?;
    let pass = a.value == b.value && a.rank_terms == b.rank_terms && c.value == e.value;
    Ok((pass, format!("t_ac {} / {}, conditional {} / {}", a.value, b.value, c.value, e.value)))
}

fn uniform_suite(seed: &SeedSpec, mode: CountMode) -> acdep::Result<(bool, String)> {
    let n = 20_000;
    let y = uniform(n, 1, &seed.derive(0))?;
    let z = uniform(n, 1, &seed.derive(1))?;
    let perms = build_permutations(n, 1, PermScheme::Cyclic, seed)?;
    let g = gamma_hats(&y, &perms, mode)?;
    let parts = variance_parts(&y, &z, &perms, seed, &EstimatorOptions::with_mode(mode))?;
    let pass = (g.gamma1_hat - 1.0 / 90.0).abs() < 0.002
        && (g.gamma2_hat - 1.0 / 45.0).abs() < 0.002
        && (parts.denom_hat - 1.0 / 6.0).abs() < 0.005
        && (parts.sigma_hat_sq - 16.0 / 15.0).abs() < 0.08;
    Ok((
        pass,
        format!(
            "gamma1 {:.5} (1/90), gamma2 {:.5} (1/45), denominator {:.5} (1/6), sigma^2 {:.4} (16/15)",
            g.gamma1_hat, g.gamma2_hat, parts.denom_hat, parts.sigma_hat_sq
        ),
    ))
}

pub fn run(seed: u64, mode: CountMode) -> Report {
    let s = SeedSpec::new(seed);
    let checks = vec![
        check("dominance counts: fast equals brute force", || domcount_suite(&s.derive(1))),
        check("estimators: fast equals brute force", || estimator_suite(&s.derive(2))),
        check("A_1 = 2/3", || {
            let a = a_const(1)?;
            Ok(((a - 2.0 / 3.0).abs() < 1e-9, format!("{a}")))
        }),
        check("A_2 closed form", || {
            let want = 1.0 / (2.0 - (2.0 / 3.0 - 3f64.sqrt() / (2.0 * std::f64::consts::PI)));
            let a = a_const(2)?;
            Ok(((a - want).abs() < 1e-9, format!("{a} vs {want}")))
        }),
        check("B_1 = 1/2 within 3 SE", || {
            let b = b_const(1, 200_000, &s.derive(3))?;
            Ok(((b.value - 0.5).abs() < 3.0 * b.std_error, format!("{} +- {}", b.value, b.std_error)))
        }),
        check("normal quantile", || {
            let p = normal_cdf(1.959963984540054);
            Ok(((p - 0.975).abs() < 1e-12, format!("{p}")))
        }),
        check("uniform variance components", || uniform_suite(&s.derive(4), mode)),
    ];
    let pass = checks.iter().all(|c| c.pass);
    Report { seed, checks, pass }
}
