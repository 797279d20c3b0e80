//! Per-seed CSV files, the across-seed curve and the JSON summary.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use super::runner::{RecordSink, RoundRecord, SeedResult};
use crate::error::Result;

pub fn csv_header(constraints: usize) -> Vec<String> {
    let mut h = vec!["t".to_string(), "action".into(), "reward".into()];
    h.extend((1..=constraints).map(|i| format!("cost_{i}")));
    h.push("mean_reward".into());
    h.extend((1..=constraints).map(|i| format!("mean_cost_{i}")));
    h.extend(["inst_regret".into(), "cum_regret".into(), "violated".into()]);
    h
}

/// Streams records to a CSV writer.
pub struct CsvSink<W: Write> {
    writer: csv::Writer<W>,
}

impl CsvSink<BufWriter<File>> {
    pub fn create(path: impl AsRef<Path>, constraints: usize) -> Result<Self> {
        Self::new(BufWriter::new(File::create(path)?), constraints)
    }
}

impl<W: Write> CsvSink<W> {
    pub fn new(inner: W, constraints: usize) -> Result<Self> {
        let mut writer = csv::Writer::from_writer(inner);
        writer.write_record(csv_header(constraints))?;
        Ok(Self { writer })
    }

    pub fn finish(mut self) -> Result<W> {
        self.writer.flush()?;
        self.writer.into_inner().map_err(|e| e.into_error().into())
    }
}

impl<W: Write> RecordSink for CsvSink<W> {
    fn record(&mut self, r: &RoundRecord) -> Result<()> {
        let mut row = Vec::with_capacity(7 + 2 * r.costs.len());
        row.push(r.t.to_string());
        row.push(r.action.clone());
        row.push(r.reward.to_string());
        row.extend(r.costs.iter().map(f64::to_string));
        row.push(r.mean_reward.to_string());
        row.extend(r.mean_costs.iter().map(f64::to_string));
        row.push(r.inst_regret.to_string());
        row.push(r.cum_regret.to_string());
        row.push(u8::from(r.violated).to_string());
        self.writer.write_record(&row)?;
        Ok(())
    }
}

/// Mean and sample standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Clone, Debug, Serialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub final_regret: f64,
    pub violation_rate: f64,
    pub clean: bool,
    pub clean_rounds: usize,
    pub optimism_checks: usize,
    pub optimism_failures: usize,
    pub warm_start_rounds: usize,
    pub approximate_rounds: usize,
    pub oracle_value: f64,
    pub alpha_r: f64,
    pub alpha_c: Option<f64>,
    pub theorem_bound_value: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub algorithm: String,
    pub horizon: usize,
    pub final_regret_mean: f64,
    pub final_regret_std: f64,
    /// Mean over seeds of the fraction of rounds with a violated constraint.
    pub violation_rate: f64,
    /// Largest per-seed bound (bounds differ across random instances).
    pub theorem_bound_value: Option<f64>,
    /// Every clean seed stayed below its own bound.
    pub bound_satisfied: Option<bool>,
    pub clean_seeds: usize,
    pub seeds: Vec<SeedSummary>,
    /// Set for the comparison baseline, which is a simplified stand-in.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Summary {
    pub fn new(algorithm: &str, results: &[SeedResult]) -> Self {
        let finals: Vec<f64> = results.iter().map(SeedResult::final_regret).collect();
        let (final_regret_mean, final_regret_std) = mean_std(&finals);
        let rates: Vec<f64> = results.iter().map(SeedResult::violation_rate).collect();
        let bounds: Vec<f64> = results.iter().filter_map(|r| r.theorem_bound).collect();
        let has_bound = !bounds.is_empty();
        let bound_satisfied = has_bound.then(|| {
            results
                .iter()
                .filter(|r| r.clean())
                .all(|r| r.theorem_bound.is_none_or(|b| r.final_regret() <= b))
        });
        Self {
            algorithm: algorithm.to_string(),
            horizon: results.first().map_or(0, |r| r.horizon),
            final_regret_mean,
            final_regret_std,
            violation_rate: mean_std(&rates).0,
            theorem_bound_value: has_bound.then(|| bounds.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
            bound_satisfied,
            clean_seeds: results.iter().filter(|r| r.clean()).count(),
            seeds: results
                .iter()
                .map(|r| SeedSummary {
                    seed: r.seed,
                    final_regret: r.final_regret(),
                    violation_rate: r.violation_rate(),
                    clean: r.clean(),
                    clean_rounds: r.clean_rounds,
                    optimism_checks: r.optimism_checks,
                    optimism_failures: r.optimism_failures,
                    warm_start_rounds: r.warm_start_rounds,
                    approximate_rounds: r.approximate_rounds,
                    oracle_value: r.oracle_value,
                    alpha_r: r.alpha_r,
                    alpha_c: r.alpha_c,
                    theorem_bound_value: r.theorem_bound,
                })
                .collect(),
            note: (algorithm == "safe_ts_baseline")
                .then(|| "simplified safe Thompson-sampling baseline, not a faithful reproduction".to_string()),
        }
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut w, self)?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    }
}

/// Per-round mean and standard deviation across seeds.
#[derive(Clone, Debug, Default)]
pub struct Curve {
    pub regret_mean: Vec<f64>,
    pub regret_std: Vec<f64>,
    pub reward_mean: Vec<f64>,
    /// `cost_mean[i][t]`.
    pub cost_mean: Vec<Vec<f64>>,
}

impl Curve {
    pub fn new(results: &[SeedResult]) -> Self {
        let Some(first) = results.first() else {
            return Self::default();
        };
        let len = results.iter().map(|r| r.cum_regret.len()).min().unwrap_or(0);
        let column = |f: &dyn Fn(&SeedResult) -> f64| -> (f64, f64) {
            let xs: Vec<f64> = results.iter().map(f).collect();
            mean_std(&xs)
        };
        let mut c = Self {
            cost_mean: vec![Vec::with_capacity(len); first.constraints],
            ..Self::default()
        };
        for t in 0..len {
            let (m, s) = column(&|r| r.cum_regret[t]);
            c.regret_mean.push(m);
            c.regret_std.push(s);
            c.reward_mean.push(column(&|r| r.mean_reward[t]).0);
            for (i, col) in c.cost_mean.iter_mut().enumerate() {
                col.push(column(&|r| r.mean_cost[i][t]).0);
            }
        }
        c
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
        let mut header = vec![
            "t".to_string(),
            "cum_regret_mean".into(),
            "cum_regret_std".into(),
            "mean_reward".into(),
        ];
        header.extend((1..=self.cost_mean.len()).map(|i| format!("mean_cost_{i}")));
        w.write_record(&header)?;
        for t in 0..self.regret_mean.len() {
            let mut row = vec![
                (t + 1).to_string(),
                self.regret_mean[t].to_string(),
                self.regret_std[t].to_string(),
                self.reward_mean[t].to_string(),
            ];
            row.extend(self.cost_mean.iter().map(|col| col[t].to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}
