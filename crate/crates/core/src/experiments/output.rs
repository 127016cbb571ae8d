//! `results.jsonl` (appended), `summary.csv` and `timing.csv`.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::{ExperimentResult, Timing};
use crate::error::Result;

fn json_lines<R: Serialize>(rows: &[R]) -> Result<Vec<String>> {
    rows.iter().map(|r| Ok(serde_json::to_string(r)?)).collect()
}

fn f(v: f64) -> String {
    format!("{v:.6}")
}

impl ExperimentResult {
    /// One JSON object per result row.
    pub fn json_rows(&self) -> Result<Vec<String>> {
        match self {
            Self::RejectionGrid(r) => json_lines(&r.rows),
            Self::Monotonicity(r) => json_lines(&r.rows),
            Self::Convergence(r) => json_lines(&r.rows),
            Self::CantorTrajectory(r) => json_lines(&r.rows),
            Self::CalibrationCrossCheck(r) => json_lines(&r.rows),
        }
    }

    pub fn timing(&self) -> &[Timing] {
        match self {
            Self::RejectionGrid(r) => &r.timing,
            Self::Monotonicity(r) => &r.timing,
            Self::Convergence(r) => &r.timing,
            Self::CantorTrajectory(r) => &r.timing,
            Self::CalibrationCrossCheck(r) => &r.timing,
        }
    }

    /// Header and rows of the CSV summary. Rejection rates are percentages.
    pub fn summary_table(&self) -> (Vec<String>, Vec<Vec<String>>) {
        match self {
            Self::RejectionGrid(r) => {
                let cfg = &r.config;
                let mut header: Vec<String> = ["d_y", "d_z", "base", "sigma_mode"].map(String::from).to_vec();
                for n in &cfg.n {
                    for a in &cfg.alpha {
                        header.push(format!("n{n}_a{}", a * 100.0));
                        header.push(format!("n{n}_a{}_se", a * 100.0));
                    }
                    header.push(format!("n{n}_degenerate"));
                }
                let rows = cfg
                    .cells
                    .iter()
                    .map(|c| {
                        let mut row = vec![
                            c.d_y.to_string(),
                            c.d_z.to_string(),
                            format!("{:?}", c.base).to_lowercase(),
                            format!("{:?}", cfg.sigma_mode).to_lowercase(),
                        ];
                        for &n in &cfg.n {
                            let s = r.summary.iter().find(|s| (s.d_y, s.d_z, s.base, s.n) == (c.d_y, c.d_z, c.base, n));
                            for (i, _) in cfg.alpha.iter().enumerate() {
                                let rate = s.map(|s| s.rates[i]);
                                row.push(rate.map_or(String::new(), |x| format!("{:.2}", 100.0 * x.rate)));
                                row.push(rate.map_or(String::new(), |x| format!("{:.2}", 100.0 * x.se)));
                            }
                            row.push(s.map_or(String::new(), |s| s.degenerate.to_string()));
                        }
                        row
                    })
                    .collect();
                (header, rows)
            }
            Self::Monotonicity(r) => {
                let mut header: Vec<String> =
                    ["noise", "design", "strictly_increasing", "mean_second_difference"].map(String::from).to_vec();
                header.extend(r.config.eta.iter().map(|e| format!("eta{e}")));
                let rows = r
                    .summary
                    .iter()
                    .map(|s| {
                        let mut row = vec![
                            format!("{:?}", s.noise).to_lowercase(),
                            s.design.to_string(),
                            s.strictly_increasing.to_string(),
                            f(s.mean_second_difference),
                        ];
                        row.extend(s.values.iter().map(|&v| f(v)));
                        row
                    })
                    .collect();
                (header, rows)
            }
            Self::Convergence(r) => {
                let header = ["d_z", "n", "median_error", "slope"].map(String::from).to_vec();
                let rows = r
                    .summary
                    .iter()
                    .flat_map(|s| {
                        s.n.iter().zip(&s.median_error).map(move |(n, e)| {
                            vec![s.d_z.to_string(), n.to_string(), f(*e), f(s.slope)]
                        })
                    })
                    .collect();
                (header, rows)
            }
            Self::CantorTrajectory(r) => {
                let header = [
                    "law", "x", "k", "n", "reps", "mutual_mean", "mutual_se", "indegree_mean", "indegree_se",
                    "mutual_theory", "indegree_theory",
                ]
                .map(String::from)
                .to_vec();
                let rows = r
                    .rows
                    .iter()
                    .map(|p| {
                        vec![
                            format!("{:?}", p.law).to_lowercase(),
                            p.x.to_string(),
                            p.k.to_string(),
                            p.n.to_string(),
                            p.reps.to_string(),
                            f(p.mutual_mean),
                            f(p.mutual_se),
                            f(p.indegree_mean),
                            f(p.indegree_se),
                            f(p.mutual_theory),
                            f(p.indegree_theory),
                        ]
                    })
                    .collect();
                (header, rows)
            }
            Self::CalibrationCrossCheck(r) => {
                let header = vec!["metric".to_string(), "value".to_string()];
                let rows = [
                    ("datasets", r.rows.len().to_string()),
                    ("degenerate", r.degenerate.to_string()),
                    ("ks_wald", f(r.ks_wald)),
                    ("ks_perm", f(r.ks_perm)),
                    ("ks_critical_5pct", f(r.ks_critical)),
                    ("spearman", f(r.spearman)),
                ]
                .into_iter()
                .map(|(k, v)| vec![k.to_string(), v])
                .collect();
                (header, rows)
            }
        }
    }
}

/// Appends the rows to `results.jsonl` and rewrites the two CSV files.
pub fn write_outputs(result: &ExperimentResult, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut jsonl = OpenOptions::new().create(true).append(true).open(dir.join("results.jsonl"))?;
    for line in result.json_rows()? {
        writeln!(jsonl, "{line}")?;
    }

    let (header, rows) = result.summary_table();
    let mut w = csv::Writer::from_path(dir.join("summary.csv"))?;
    w.write_record(&header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("timing.csv"))?;
    w.write_record(["cell", "wall_ms", "detail"])?;
    for t in result.timing() {
        w.write_record([t.cell.as_str(), &format!("{:.3}", t.wall_ms), t.detail.as_str()])?;
    }
    w.flush()?;
    Ok(())
}
