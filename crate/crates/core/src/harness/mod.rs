//! Experiment harness: configuration, seed fan-out, the per-round loop and
//! CSV/JSON output.

pub mod baseline;
pub mod config;
pub mod output;
pub mod runner;

use std::path::{Path, PathBuf};

use rayon::prelude::*;

pub use config::{AlgorithmKind, Alpha, EnvironmentConfig, ExperimentConfig};
pub use output::{CsvSink, Curve, Summary};
pub use runner::{run_seed, NullSink, RecordSink, RoundRecord, SeedResult};

use crate::error::{Error, Result};

/// Results of every seed plus the aggregated summary.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub results: Vec<SeedResult>,
    pub summary: Summary,
}

impl Experiment {
    pub fn curve(&self) -> Curve {
        Curve::new(&self.results)
    }
}

pub fn seed_csv_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("seed_{seed}.csv"))
}

fn run_one(cfg: &ExperimentConfig, seed: u64, out: Option<&Path>) -> Result<SeedResult> {
    match out {
        None => run_seed(cfg, seed, &mut NullSink),
        Some(dir) => {
            let constraints = cfg.environment.constraints();
            let mut sink = CsvSink::create(seed_csv_path(dir, seed), constraints)?;
            let result = run_seed(cfg, seed, &mut sink)?;
            sink.finish()?;
            Ok(result)
        }
    }
}

/// Runs every seed of `cfg`, in parallel on `threads` workers (all cores if
/// `None`). Output goes to `cfg.output_dir` when set: one CSV per seed,
/// `summary.json` and optionally `curve.csv`.
pub fn run_experiment(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<Experiment> {
    cfg.validate()?;
    let out = cfg.output_dir.as_deref();
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    let results = pool.install(|| {
        cfg.algorithm
            .seeds
            .par_iter()
            .map(|&seed| run_one(cfg, seed, out))
            .collect::<Result<Vec<_>>>()
    })?;
    let summary = Summary::new(cfg.algorithm.kind.name(), &results);
    let exp = Experiment { results, summary };
    if let Some(dir) = out {
        exp.summary.write_json(dir.join("summary.json"))?;
        if cfg.write_curve {
            exp.curve().write_csv(dir.join("curve.csv"))?;
        }
    }
    Ok(exp)
}
