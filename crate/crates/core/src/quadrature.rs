//! Adaptive Simpson quadrature and the ball-geometry helpers built on it.

use std::f64::consts::{FRAC_PI_2, PI};

/// Integral of `f` over `[a, b]` by adaptive Simpson with Richardson
/// correction, to absolute tolerance `tol`.
pub fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(&f, a, b, fa, fm, fb, whole, tol, 60)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(f: &impl Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Volume of the unit ball in `R^d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    let (mut v, start) = if d.is_multiple_of(2) { (1.0, 2) } else { (2.0, 3) };
    for k in (start..=d).step_by(2) {
        v *= 2.0 * PI / k as f64;
    }
    v
}

/// `∫_{θ0}^{π/2} cos^d θ dθ` by the reduction formula; `θ0 ∈ [-π/2, π/2]`.
pub fn cos_power_tail(d: usize, theta0: f64) -> f64 {
    let (s, c) = theta0.sin_cos();
    let (mut acc, mut k) = if d.is_multiple_of(2) { (FRAC_PI_2 - theta0, 0) } else { (1.0 - s, 1) };
    while k < d {
        k += 2;
        acc = -c.powi(k as i32 - 1) * s / k as f64 + (k - 1) as f64 / k as f64 * acc;
    }
    acc
}

/// Volume of the part of a radius-`r` ball beyond a plane at signed distance
/// `a` from its centre (`a < 0` gives more than half the ball).
pub fn cap_volume(d: usize, r: f64, a: f64) -> f64 {
    if r <= 0.0 || a >= r {
        return 0.0;
    }
    let vol = unit_ball_volume(d) * r.powi(d as i32);
    if a <= -r {
        return vol;
    }
    let theta0 = (a / r).asin();
    vol * cos_power_tail(d, theta0) / cos_power_tail(d, -FRAC_PI_2)
}

/// Volume of the intersection of two balls with radii `r1`, `r2` whose
/// centres are `dist` apart.
pub fn lens_volume(d: usize, r1: f64, r2: f64, dist: f64) -> f64 {
    if dist >= r1 + r2 {
        return 0.0;
    }
    if dist <= (r1 - r2).abs() {
        let r = r1.min(r2);
        return unit_ball_volume(d) * r.powi(d as i32);
    }
    let a1 = (dist * dist + r1 * r1 - r2 * r2) / (2.0 * dist);
    cap_volume(d, r1, a1) + cap_volume(d, r2, dist - a1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_polynomials_and_transcendentals() {
        let v = adaptive_simpson(|x| x * x * x, 0.0, 2.0, 1e-12);
        assert!((v - 4.0).abs() < 1e-12);
        let v = adaptive_simpson(f64::sin, 0.0, PI, 1e-12);
        assert!((v - 2.0).abs() < 1e-11);
        let v = adaptive_simpson(|x| (-x * x).exp(), -8.0, 8.0, 1e-13);
        assert!((v - PI.sqrt()).abs() < 1e-11);
    }

    #[test]
    fn ball_volumes() {
        assert_eq!(unit_ball_volume(0), 1.0);
        assert_eq!(unit_ball_volume(1), 2.0);
        assert!((unit_ball_volume(2) - PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-14);
        assert!((unit_ball_volume(4) - PI * PI / 2.0).abs() < 1e-14);
    }

    #[test]
    fn cos_power_tail_matches_quadrature() {
        for d in 0..9 {
            for &t0 in &[-1.2, -0.3, 0.0, 0.4, 1.1] {
                let q = adaptive_simpson(|t| t.cos().powi(d as i32), t0, FRAC_PI_2, 1e-14);
                assert!((cos_power_tail(d, t0) - q).abs() < 1e-11, "d={d} t0={t0}");
            }
        }
    }

    #[test]
    fn caps_and_lenses() {
        // interval overlap
        assert!((lens_volume(1, 1.0, 1.0, 1.0) - 1.0).abs() < 1e-14);
        // half disc
        assert!((cap_volume(2, 1.0, 0.0) - PI / 2.0).abs() < 1e-14);
        // spherical cap of height h: π h² (3r - h) / 3
        let (r, a) = (2.0, 0.5);
        let h = r - a;
        assert!((cap_volume(3, r, a) - PI * h * h * (3.0 * r - h) / 3.0).abs() < 1e-12);
        // lens of two unit discs at distance 1: 2π/3 - √3/2
        let want = 2.0 * PI / 3.0 - 3f64.sqrt() / 2.0;
        assert!((lens_volume(2, 1.0, 1.0, 1.0) - want).abs() < 1e-13);
        assert_eq!(lens_volume(3, 1.0, 1.0, 2.5), 0.0);
        assert!((lens_volume(3, 1.0, 0.2, 0.1) - unit_ball_volume(3) * 0.008).abs() < 1e-14);
    }
}
