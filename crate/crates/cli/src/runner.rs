//! Executes a validated configuration and writes its artifacts.

use crate::config::{DataNoise, Experiment, ExperimentConfig};
use crate::output::{num, Csv, OutDir, Stats};
use anyhow::Result;
use mbqml::experiments;
use mbqml::kernel::run_kernel_svm;
use mbqml::learn::TrainRun;
use mbqml::sim::NoiseChannel;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use std::f64::consts::PI;

/// Final test infidelity below which a run counts as converged.
pub const CONVERGED: f64 = 1e-3;

/// Seed of run `k` for base seed `seed`.
pub fn run_seed(seed: u64, k: usize) -> u64 {
    seed.wrapping_add(k as u64)
}

/// Runs the experiment, writes every artifact plus `manifest.json`, and
/// returns the one-line summary.
pub fn run(cfg: &ExperimentConfig) -> Result<String> {
    let mut out = OutDir::new(&cfg.output);
    let seed = cfg.seed;
    let line = match &cfg.experiment {
        Experiment::GateLearn(c) => {
            let runs = par_runs(c.runs, seed, |s| experiments::gate_learning(c.target, c.pairs, c.n_train, &c.train, s))?;
            curves(&mut out, &runs, seed)?
        }
        Experiment::Teleport(c) => {
            let runs = par_runs(c.runs, seed, |s| experiments::teleportation(c.n_train, c.n_test, &c.train, s))?;
            curves(&mut out, &runs, seed)?
        }
        Experiment::NoiseSweep(c) => {
            let n = c.target.num_qubits();
            let channel = |x: f64| match c.noise {
                DataNoise::Bitflip => NoiseChannel::BitFlip { p: x },
                DataNoise::Brownian => NoiseChannel::Brownian {
                    dt: x * 2.0 * PI / ((1usize << n) as f64 * c.brownian_steps as f64).sqrt(),
                    steps: c.brownian_steps,
                },
            };
            let runs = sweep(&c.strengths, c.runs, seed, |x, s| {
                experiments::noisy_data_learning(c.target, &channel(x), c.pairs, c.n_train, &c.train, s)
            })?;
            sweep_outputs(&mut out, "strength", &c.strengths, &runs, seed)?
        }
        Experiment::DepolarizingSweep(c) => {
            let runs = sweep(&c.ps, c.runs, seed, |p, s| {
                experiments::depolarized_learning(c.target, p, c.n_train, c.n_test, &c.train, s)
            })?;
            sweep_outputs(&mut out, "p", &c.ps, &runs, seed)?
        }
        Experiment::Qfi(c) => {
            let reports = (0..c.runs)
                .into_par_iter()
                .map(|k| experiments::qfi_classification(&c.settings, &c.train, run_seed(seed, k)))
                .collect::<mbqml::Result<Vec<_>>>()?;
            let mut table = Csv::new(&["seed", "train_accuracy", "test_accuracy", "haar_accuracy", "test_excluded", "haar_excluded"]);
            for (k, r) in reports.iter().enumerate() {
                let s = run_seed(seed, k);
                out.csv(&format!("curves/run_{s}.csv"), &curve_csv(&r.run))?;
                table.row([
                    s.to_string(),
                    num(r.train_accuracy.value()),
                    num(r.test_accuracy.value()),
                    num(r.haar_accuracy.value()),
                    r.test_accuracy.excluded.to_string(),
                    r.haar_accuracy.excluded.to_string(),
                ]);
            }
            out.csv("accuracy.csv", &table)?;
            let acc = |f: fn(&experiments::QfiReport) -> f64| Stats::of(&reports.iter().map(f).collect::<Vec<_>>());
            let test = acc(|r| r.test_accuracy.value());
            let haar = acc(|r| r.haar_accuracy.value());
            out.json(
                "summary.json",
                &json!({
                    "train_accuracy": acc(|r| r.train_accuracy.value()),
                    "test_accuracy": test,
                    "haar_accuracy": haar,
                    "runs": reports,
                }),
            )?;
            format!(
                "{} runs, test accuracy {:.3} +- {:.3}, Haar accuracy {:.3} +- {:.3}",
                reports.len(),
                test.mean,
                test.std,
                haar.mean,
                haar.std
            )
        }
        Experiment::KernelSvm(c) => {
            let jobs: Vec<_> = c.datasets.iter().flat_map(|&d| (0..c.runs).map(move |k| (d, k))).collect();
            let reports = jobs
                .par_iter()
                .map(|&(d, k)| {
                    let s = run_seed(seed, k);
                    run_kernel_svm(d, c.n_train, c.n_test, c.noise, c.c, s, &mut experiments::rng(s))
                })
                .collect::<mbqml::Result<Vec<_>>>()?;
            let mut table = Csv::new(&["dataset", "seed", "train_accuracy", "test_accuracy"]);
            let mut summary = Vec::new();
            let mut parts = Vec::new();
            for &d in &c.datasets {
                let name = serde_json::to_value(d)?.as_str().unwrap_or_default().to_string();
                let mine: Vec<_> = reports.iter().filter(|r| r.dataset == d).collect();
                for r in &mine {
                    table.row([name.clone(), r.seed.to_string(), num(r.train_accuracy), num(r.test_accuracy)]);
                    out.csv(&format!("decision/{name}_{}.csv", r.seed), &decision_csv(r))?;
                }
                let st = Stats::of(&mine.iter().map(|r| r.test_accuracy).collect::<Vec<_>>());
                parts.push(format!("{name} {:.3}", st.mean));
                summary.push(json!({ "dataset": name, "test_accuracy": st }));
            }
            out.csv("accuracy.csv", &table)?;
            out.json("summary.json", &json!({ "datasets": summary, "runs": reports }))?;
            format!("mean test accuracy {}", parts.join(", "))
        }
        Experiment::Hea(c) => {
            let reports = (0..c.runs)
                .into_par_iter()
                .map(|k| experiments::hea_search(&c.greedy, c.n_train, c.n_test, true, run_seed(seed, k)))
                .collect::<mbqml::Result<Vec<_>>>()?;
            let mut table = Csv::new(&[
                "seed",
                "greedy_success",
                "greedy_evaluations",
                "greedy_best_loss",
                "test_loss",
                "random_success",
                "random_evaluations",
                "random_best_loss",
            ]);
            for r in &reports {
                out.write(&format!("logs/greedy_{}.csv", r.seed), r.greedy.to_csv().as_bytes())?;
                let random = r.random.as_ref().expect("baseline requested");
                out.write(&format!("logs/random_{}.csv", r.seed), random.to_csv().as_bytes())?;
                table.row([
                    r.seed.to_string(),
                    r.greedy.success.to_string(),
                    r.greedy.evaluations().to_string(),
                    num(r.greedy.best_loss),
                    num(r.test_loss),
                    random.success.to_string(),
                    random.evaluations().to_string(),
                    num(random.best_loss),
                ]);
            }
            out.csv("runs.csv", &table)?;
            let solved = reports.iter().filter(|r| r.greedy.success).count();
            let evals = Stats::of(&reports.iter().map(|r| r.greedy.evaluations() as f64).collect::<Vec<_>>());
            out.json(
                "summary.json",
                &json!({ "greedy_solved": solved, "greedy_evaluations": evals, "runs": reports }),
            )?;
            format!("greedy solved {solved}/{} runs, {:.0} +- {:.0} evaluations", reports.len(), evals.mean, evals.std)
        }
        Experiment::Expressivity(c) => {
            let r = experiments::expressivity(c.width, c.samples, seed)?;
            let mut table = Csv::new(&["width", "dla_dim", "is_full", "variance_bound", "empirical_variance", "std_error"]);
            table.row([
                c.width.to_string(),
                r.dim.to_string(),
                r.is_full.to_string(),
                r.bound.map(num).unwrap_or_default(),
                num(r.empirical_variance),
                num(r.std_error),
            ]);
            out.csv("expressivity.csv", &table)?;
            out.json("report.json", &r)?;
            let bound = r.bound.map_or("none".to_string(), |b| format!("{b:.4}"));
            format!("DLA dimension {}, variance {:.4} (bound {bound})", r.dim, r.empirical_variance)
        }
    };
    let files = out.files().to_vec();
    out.json(
        "manifest.json",
        &json!({ "version": env!("CARGO_PKG_VERSION"), "config": cfg, "files": files }),
    )?;
    Ok(format!("{}: {line}; results in {}", cfg.experiment.kind(), out.root().display()))
}

fn par_runs<F>(runs: usize, seed: u64, f: F) -> Result<Vec<TrainRun>>
where
    F: Fn(u64) -> mbqml::Result<TrainRun> + Sync,
{
    Ok((0..runs).into_par_iter().map(|k| f(run_seed(seed, k))).collect::<mbqml::Result<Vec<_>>>()?)
}

/// Every sweep point reuses the same run seeds.
fn sweep<F>(points: &[f64], runs: usize, seed: u64, f: F) -> Result<Vec<Vec<TrainRun>>>
where
    F: Fn(f64, u64) -> mbqml::Result<TrainRun> + Sync,
{
    let flat = (0..points.len() * runs)
        .into_par_iter()
        .map(|j| f(points[j / runs], run_seed(seed, j % runs)))
        .collect::<mbqml::Result<Vec<_>>>()?;
    Ok(flat.chunks(runs).map(|c| c.to_vec()).collect())
}

pub fn curve_csv(r: &TrainRun) -> Csv {
    let mut c = Csv::new(&["step", "train_loss", "test_loss"]);
    for (k, (a, b)) in r.train_loss.iter().zip(&r.test_loss).enumerate() {
        c.row([k.to_string(), num(*a), num(*b)]);
    }
    c
}

fn decision_csv(r: &mbqml::kernel::KernelReport) -> Csv {
    let mut c = Csv::new(&["x0", "x1", "label", "decision"]);
    for ((p, l), d) in r.test_points.iter().zip(&r.test_labels).zip(&r.test_decision) {
        c.row([num(p[0]), num(p[1]), l.to_string(), num(*d)]);
    }
    c
}

/// Loss at `step`, holding the final value after an early stop.
fn at(h: &[f64], step: usize) -> f64 {
    h[step.min(h.len() - 1)]
}

#[derive(Serialize)]
struct RunSummary {
    seed: u64,
    steps: usize,
    final_train_loss: f64,
    final_test_loss: f64,
    converged: bool,
}

fn run_summary(r: &TrainRun, seed: u64) -> RunSummary {
    RunSummary {
        seed,
        steps: r.train_loss.len() - 1,
        final_train_loss: r.final_train_loss(),
        final_test_loss: r.final_test_loss(),
        converged: r.final_test_loss() < CONVERGED,
    }
}

fn curves(out: &mut OutDir, runs: &[TrainRun], seed: u64) -> Result<String> {
    for (k, r) in runs.iter().enumerate() {
        out.csv(&format!("curves/run_{}.csv", run_seed(seed, k)), &curve_csv(r))?;
    }
    let len = runs.iter().map(|r| r.train_loss.len()).max().unwrap_or(0);
    let mut table = Csv::new(&["step", "mean_train_loss", "std_train_loss", "mean_test_loss", "std_test_loss"]);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for step in 0..len {
        let a = Stats::of(&runs.iter().map(|r| at(&r.train_loss, step)).collect::<Vec<_>>());
        let b = Stats::of(&runs.iter().map(|r| at(&r.test_loss, step)).collect::<Vec<_>>());
        table.row([step.to_string(), num(a.mean), num(a.std), num(b.mean), num(b.std)]);
        train.push(a);
        test.push(b);
    }
    out.csv("summary.csv", &table)?;
    let per_run: Vec<_> = runs.iter().enumerate().map(|(k, r)| run_summary(r, run_seed(seed, k))).collect();
    let converged = per_run.iter().filter(|r| r.converged).count();
    let last = test.last().copied().unwrap_or(Stats { mean: f64::NAN, std: f64::NAN });
    out.json(
        "summary.json",
        &json!({
            "converged_threshold": CONVERGED,
            "converged": converged,
            "runs": per_run,
            "train_loss": train,
            "test_loss": test,
        }),
    )?;
    Ok(format!(
        "{} runs, final test loss {:.3e} +- {:.3e}, {converged}/{} below {CONVERGED:e}",
        runs.len(),
        last.mean,
        last.std,
        runs.len()
    ))
}

fn sweep_outputs(out: &mut OutDir, axis: &str, points: &[f64], runs: &[Vec<TrainRun>], seed: u64) -> Result<String> {
    let mut table = Csv::new(&[axis, "mean_fidelity", "std_fidelity", "mean_train_loss", "std_train_loss"]);
    let mut rows = Vec::new();
    for (&x, rs) in points.iter().zip(runs) {
        let fid = Stats::of(&rs.iter().map(|r| 1.0 - r.final_test_loss()).collect::<Vec<_>>());
        let tr = Stats::of(&rs.iter().map(|r| r.final_train_loss()).collect::<Vec<_>>());
        table.row([num(x), num(fid.mean), num(fid.std), num(tr.mean), num(tr.std)]);
        let per_run: Vec<_> = rs.iter().enumerate().map(|(k, r)| run_summary(r, run_seed(seed, k))).collect();
        rows.push(json!({ axis: x, "fidelity": fid, "train_loss": tr, "runs": per_run }));
    }
    out.csv("sweep.csv", &table)?;
    out.json("summary.json", &json!({ "points": rows }))?;
    let fid = |i: usize| 1.0 - runs[i].iter().map(|r| r.final_test_loss()).sum::<f64>() / runs[i].len() as f64;
    Ok(format!(
        "{} points, mean clean fidelity {:.4} at {axis}={} to {:.4} at {axis}={}",
        points.len(),
        fid(0),
        points[0],
        fid(points.len() - 1),
        points[points.len() - 1]
    ))
}

