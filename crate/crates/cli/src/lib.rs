//! Config-driven experiment runner behind the `mbqml` binary.

pub mod config;
pub mod output;
pub mod runner;

use config::{Diagnostic, Experiment, ExperimentConfig};
use mbqml::hea::GreedyConfig;
use mbqml::kernel::{run_kernel_svm, DatasetKind};
use std::fmt;
use std::path::{Path, PathBuf};

/// Why a command failed. Invalid input and IO problems map to different
/// exit codes.
#[derive(Debug)]
pub enum Failure {
    Invalid(Vec<Diagnostic>),
    Io(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Invalid(_) => 2,
            Failure::Io(_) => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Invalid(ds) => {
                let lines: Vec<String> = ds.iter().map(|d| format!("invalid config: {d}")).collect();
                write!(f, "{}", lines.join("\n"))
            }
            Failure::Io(e) => write!(f, "error: {e:#}"),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Io(e)
    }
}

pub fn load(path: &Path) -> Result<ExperimentConfig, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Io(anyhow::anyhow!("reading {}: {e}", path.display())))?;
    config::parse(&text).map_err(Failure::Invalid)
}

pub fn validate(path: &Path) -> Result<String, Failure> {
    let cfg = load(path)?;
    Ok(format!("{} is valid ({})", path.display(), cfg.experiment.kind()))
}

pub fn run(path: &Path, seed: Option<u64>, out: Option<PathBuf>) -> Result<String, Failure> {
    let mut cfg = load(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(o) = out {
        cfg.output = o;
    }
    Ok(runner::run(&cfg)?)
}

fn checked(e: &Experiment) -> Result<(), Failure> {
    let d = config::check(e);
    if d.is_empty() {
        Ok(())
    } else {
        Err(Failure::Invalid(d))
    }
}

/// One kernel SVM train/test run written as a JSON report.
pub fn kernel_svm(
    dataset: DatasetKind,
    n_train: usize,
    n_test: usize,
    noise: f64,
    c: f64,
    seed: u64,
    out: &Path,
) -> Result<String, Failure> {
    checked(&Experiment::KernelSvm(config::KernelSvm { datasets: vec![dataset], runs: 1, n_train, n_test, noise, c }))?;
    let r = run_kernel_svm(dataset, n_train, n_test, noise, c, seed, &mut mbqml::experiments::rng(seed))
        .map_err(anyhow::Error::from)?;
    output::atomic_write(out, &output::to_json(&r)?)?;
    Ok(format!(
        "kernel-svm: train accuracy {:.3}, test accuracy {:.3}; results in {}",
        r.train_accuracy,
        r.test_accuracy,
        out.display()
    ))
}

/// One greedy search for (T x 1) IsingXX(-pi/4); writes the evaluation log.
pub fn hea(cfg: GreedyConfig, n_train: usize, n_test: usize, seed: u64, out: &Path) -> Result<String, Failure> {
    checked(&Experiment::Hea(config::Hea { greedy: cfg, runs: 1, n_train, n_test }))?;
    let r = mbqml::experiments::hea_search(&cfg, n_train, n_test, false, seed).map_err(anyhow::Error::from)?;
    output::atomic_write(out, r.greedy.to_csv().as_bytes())?;
    Ok(format!(
        "hea: {} after {} evaluations, best loss {:.3e}, test loss {:.3e}; log in {}",
        if r.greedy.success { "solved" } else { "not solved" },
        r.greedy.evaluations(),
        r.greedy.best_loss,
        r.test_loss,
        out.display()
    ))
}
