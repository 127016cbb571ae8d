use acdep::simgen::{
    cantor_a, cantor_b, gen_additive, gen_base, gen_cantor, gen_linear, gen_mixture, gen_triangle, Base, Noise,
    SamplerSpec,
};
use acdep::{build_permutations, stats, t_ac, EstimatorOptions, PermScheme, SeedSpec};

#[test]
fn generators_are_pure_functions_of_the_seed() {
    let s = SeedSpec::new(3).derive(11);
    let spec = SamplerSpec::linear(2, 3, Base::T4, s);
    assert_eq!(gen_linear(&spec, 200).unwrap().y, gen_linear(&spec, 200).unwrap().y);
    assert_ne!(gen_linear(&spec, 200).unwrap().y, gen_linear(&SamplerSpec::linear(2, 3, Base::T4, s.derive(1)), 200).unwrap().y);
    assert_eq!(gen_triangle(100, &s).unwrap().y, gen_triangle(100, &s).unwrap().y);
    assert_eq!(gen_cantor(100, 40, &s).unwrap(), gen_cantor(100, 40, &s).unwrap());
}

#[test]
fn mixture_endpoints() {
    let s = SeedSpec::new(4);
    let full = gen_mixture(1.0, 300, 3, Base::Gaussian, &s).unwrap();
    assert_eq!(full.y, full.z);
    let none = gen_mixture(0.0, 300, 3, Base::Gaussian, &s).unwrap();
    assert!((0..300).all(|i| none.y.row(i) != none.z.row(i)));
}

#[test]
fn additive_signal_grows_with_eta() {
    let n = 4000;
    let p = build_permutations(n, 2, PermScheme::Cyclic, &SeedSpec::new(0)).unwrap();
    let values: Vec<f64> = [0.0, 0.5, 1.0]
        .iter()
        .map(|&eta| {
            let spec = SamplerSpec::additive(2, Base::Gaussian, eta, Noise::Unit, SeedSpec::new(5));
            let ds = gen_additive(&spec, n).unwrap();
            t_ac(&ds.y, &ds.z, &p, &SeedSpec::new(5), &EstimatorOptions::default()).unwrap().value
        })
        .collect();
    assert!(values[0].abs() < 0.05, "{values:?}");
    assert!(values[0] < values[1] && values[1] < values[2], "{values:?}");
}

#[test]
fn triangle_marginals() {
    // each coordinate has density t + 1/2, so mean 7/12 and second moment 5/12
    let ds = gen_triangle(200_000, &SeedSpec::new(6)).unwrap();
    for k in 0..2 {
        let c: Vec<f64> = ds.y.column(k).collect();
        assert!((stats::mean(&c) - 7.0 / 12.0).abs() < 0.003);
        let sq: Vec<f64> = c.iter().map(|v| v * v).collect();
        assert!((stats::mean(&sq) - 5.0 / 12.0).abs() < 0.003);
    }
    assert!((0..200_000).all(|i| ds.y.get(i, 0) + ds.y.get(i, 1) >= 1.0 - 1e-12));
    let z: Vec<f64> = ds.z.column(0).collect();
    assert!((stats::mean(&z) - 0.5).abs() < 0.005);
}

#[test]
fn cantor_points_avoid_the_removed_thirds() {
    let z = gen_cantor(5000, 40, &SeedSpec::new(7)).unwrap();
    for v in z.column(0) {
        // the first three ternary digits are 0 or 2
        let mut x = v;
        for _ in 0..3 {
            x *= 3.0;
            let digit = x.floor();
            assert!(digit == 0.0 || digit == 2.0, "{v}");
            x -= digit;
        }
    }
}

#[test]
fn cantor_functions_are_positive_and_log_periodic() {
    for x in [0.3, 1.0, 1.7, 5.0] {
        assert!((cantor_a(x) - cantor_a(2.0 * x)).abs() < 1e-12);
        assert!((cantor_b(x) - cantor_b(2.0 * x)).abs() < 1e-12);
        assert!(cantor_a(x) > 0.0 && cantor_b(x) > 0.0);
    }
}

#[test]
fn student_t_bases_have_heavier_tails() {
    let s = SeedSpec::new(8);
    let g: Vec<f64> = gen_base(100_000, 1, Base::Gaussian, &s).unwrap().column(0).collect();
    let t: Vec<f64> = gen_base(100_000, 1, Base::T4, &s).unwrap().column(0).collect();
    assert!((stats::kurtosis(&g) - 3.0).abs() < 0.1);
    assert!(stats::kurtosis(&t) > 4.0);
    assert!(t.iter().all(|v| v.is_finite()));
}
