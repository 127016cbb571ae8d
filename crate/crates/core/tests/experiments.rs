use acdep::experiments::{
    run, run_rejection_grid, write_outputs, ExperimentConfig, ExperimentResult, GridCell, GridConfig,
    MonotonicityConfig,
};
use acdep::simgen::Base;
use acdep::stats;
use rayon::prelude::*;

fn small_grid(reps: usize, seed: u64) -> GridConfig {
    GridConfig {
        cells: vec![GridCell { d_y: 1, d_z: 1, base: Base::Gaussian }],
        n: vec![30],
        designs: 1,
        reps,
        alpha: vec![0.10],
        seed,
        ..GridConfig::default()
    }
}

fn rate(cfg: &GridConfig) -> f64 {
    run_rejection_grid(cfg).unwrap().summary[0].rates[0].rate
}

#[test]
fn doubling_replications_halves_the_rate_variance() {
    let seeds = 400u64;
    let spread = |reps: usize| {
        let r: Vec<f64> = (0..seeds).into_par_iter().map(|s| rate(&small_grid(reps, 1000 + s))).collect();
        stats::variance(&r)
    };
    let ratio = spread(40) / spread(80);
    // the ratio of two sample variances over 400 seeds has sd near 0.2 around 2
    assert!((1.4..=2.8).contains(&ratio), "variance ratio {ratio}");
}

#[test]
fn rows_carry_reproducible_provenance() {
    let cfg = ExperimentConfig::RejectionGrid(GridConfig { n: vec![30, 60], designs: 2, ..small_grid(20, 5) });
    let hash = cfg.hash().unwrap();
    let a = run(&cfg).unwrap();
    let b = run(&cfg).unwrap();
    let (ExperimentResult::RejectionGrid(g), ExperimentResult::RejectionGrid(h)) = (&a, &b) else {
        panic!("wrong result kind")
    };
    // everything except wall-clock time repeats exactly
    let content = |r: &acdep::experiments::GridRow| (r.provenance.clone(), r.n, r.design, r.degenerate, r.rates.clone());
    assert_eq!(g.rows.iter().map(content).collect::<Vec<_>>(), h.rows.iter().map(content).collect::<Vec<_>>());
    assert_eq!(g.rows.len(), 4);
    let mut subs: Vec<_> = g.rows.iter().map(|r| r.provenance.sub_seed).collect();
    for r in &g.rows {
        assert_eq!(r.provenance.config_hash, hash);
        assert_eq!(r.provenance.master_seed, 5);
    }
    subs.sort_by_key(|s| (s.master_seed, s.stream_id));
    subs.dedup();
    assert_eq!(subs.len(), 4);

    // the hash is a function of content, so a JSON round trip keeps it
    let text = serde_json::to_string(&cfg).unwrap();
    assert_eq!(ExperimentConfig::from_json(&text).unwrap().hash().unwrap(), hash);
    let other = ExperimentConfig::RejectionGrid(small_grid(20, 6));
    assert_ne!(other.hash().unwrap(), hash);
    let ExperimentResult::RejectionGrid(o) = run(&other).unwrap() else { panic!("wrong result kind") };
    assert_ne!(o.rows[0].provenance.sub_seed, g.rows[0].provenance.sub_seed);
}

#[test]
fn outputs_append_results_and_rewrite_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::Monotonicity(MonotonicityConfig {
        n: 2000,
        designs: 1,
        eta: vec![0.0, 0.5, 1.0],
        ..MonotonicityConfig::default()
    });
    let res = run(&cfg).unwrap();
    let rows = res.json_rows().unwrap().len();
    write_outputs(&res, dir.path()).unwrap();
    write_outputs(&res, dir.path()).unwrap();
    let jsonl = std::fs::read_to_string(dir.path().join("results.jsonl")).unwrap();
    assert_eq!(jsonl.lines().count(), 2 * rows);
    for line in jsonl.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["config_hash"], cfg.hash().unwrap());
    }
    let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 2, "{summary}");
    assert!(summary.starts_with("noise,design,strictly_increasing"));
}

#[test]
fn invalid_configs_are_rejected() {
    for text in [
        r#"{"kind": "rejection-grid", "reps": 0}"#,
        r#"{"kind": "rejection-grid", "alpha": [1.5]}"#,
        r#"{"kind": "rejection-grid", "n": []}"#,
        r#"{"kind": "monotonicity", "bogus": 1}"#,
        r#"{"kind": "no-such-experiment"}"#,
    ] {
        assert!(ExperimentConfig::from_json(text).is_err(), "{text}");
    }
}
