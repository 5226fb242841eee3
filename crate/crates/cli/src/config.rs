//! Experiment configuration files and their validation.

use mbqml::experiments::{GateTarget, QfiSettings};
use mbqml::hea::GreedyConfig;
use mbqml::kernel::{DatasetKind, DEFAULT_C};
use mbqml::learn::{AdamConfig, TrainConfig};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::path::PathBuf;

pub const KINDS: [&str; 8] =
    ["gate-learn", "noise-sweep", "depolarizing-sweep", "qfi", "teleport", "kernel-svm", "hea", "expressivity"];

/// A fully resolved configuration; every default is filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub output: PathBuf,
    #[serde(flatten)]
    pub experiment: Experiment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "kebab-case")]
pub enum Experiment {
    GateLearn(GateLearn),
    NoiseSweep(NoiseSweep),
    DepolarizingSweep(DepolarizingSweep),
    Qfi(Qfi),
    Teleport(Teleport),
    KernelSvm(KernelSvm),
    Hea(Hea),
    Expressivity(Expressivity),
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::GateLearn(_) => "gate-learn",
            Experiment::NoiseSweep(_) => "noise-sweep",
            Experiment::DepolarizingSweep(_) => "depolarizing-sweep",
            Experiment::Qfi(_) => "qfi",
            Experiment::Teleport(_) => "teleport",
            Experiment::KernelSvm(_) => "kernel-svm",
            Experiment::Hea(_) => "hea",
            Experiment::Expressivity(_) => "expressivity",
        }
    }
}

fn train(steps: usize) -> TrainConfig {
    TrainConfig { steps, adam: AdamConfig::default(), tol: None }
}

fn isingxx() -> GateTarget {
    GateTarget::IsingXX { angle: FRAC_PI_2 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GateLearn {
    pub target: GateTarget,
    pub runs: usize,
    pub pairs: usize,
    pub n_train: usize,
    pub train: TrainConfig,
}

impl Default for GateLearn {
    fn default() -> Self {
        Self { target: GateTarget::Haar, runs: 20, pairs: 10, n_train: 7, train: train(500) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataNoise {
    Bitflip,
    Brownian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSweep {
    pub noise: DataNoise,
    /// Flip probability p, or the Brownian strength (dt / 2 pi) sqrt(2^n r).
    pub strengths: Vec<f64>,
    /// r for Brownian noise.
    pub brownian_steps: usize,
    pub target: GateTarget,
    pub runs: usize,
    pub pairs: usize,
    pub n_train: usize,
    pub train: TrainConfig,
}

impl Default for NoiseSweep {
    fn default() -> Self {
        Self {
            noise: DataNoise::Bitflip,
            strengths: (0..=10).map(|k| k as f64 * 0.05).collect(),
            brownian_steps: 10,
            target: isingxx(),
            runs: 5,
            pairs: 100,
            n_train: 70,
            train: train(200),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DepolarizingSweep {
    pub ps: Vec<f64>,
    pub target: GateTarget,
    pub runs: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub train: TrainConfig,
}

impl Default for DepolarizingSweep {
    fn default() -> Self {
        Self { ps: vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5], target: isingxx(), runs: 5, n_train: 10, n_test: 3, train: train(200) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Qfi {
    pub settings: QfiSettings,
    pub runs: usize,
    pub train: TrainConfig,
}

impl Default for Qfi {
    fn default() -> Self {
        Self { settings: QfiSettings::default(), runs: 5, train: train(1500) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Teleport {
    pub runs: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub train: TrainConfig,
}

impl Default for Teleport {
    fn default() -> Self {
        Self { runs: 10, n_train: 10, n_test: 15, train: train(500) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelSvm {
    pub datasets: Vec<DatasetKind>,
    pub runs: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub noise: f64,
    pub c: f64,
}

impl Default for KernelSvm {
    fn default() -> Self {
        Self {
            datasets: vec![DatasetKind::Circles, DatasetKind::Moons, DatasetKind::Blobs],
            runs: 3,
            n_train: 160,
            n_test: 40,
            noise: 0.1,
            c: DEFAULT_C,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hea {
    pub greedy: GreedyConfig,
    pub runs: usize,
    pub n_train: usize,
    pub n_test: usize,
}

impl Default for Hea {
    fn default() -> Self {
        Self { greedy: GreedyConfig::default(), runs: 5, n_train: 7, n_test: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Expressivity {
    pub width: usize,
    pub samples: usize,
}

impl Default for Expressivity {
    fn default() -> Self {
        Self { width: 2, samples: 2000 }
    }
}

/// One problem found in a configuration; `field` is a dotted path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub field: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

fn diag(field: &str, message: impl Into<String>) -> Diagnostic {
    Diagnostic { field: field.to_string(), message: message.into() }
}

/// Parse and check a configuration. Either the resolved config or every
/// problem found.
pub fn parse(text: &str) -> Result<ExperimentConfig, Vec<Diagnostic>> {
    let v: Value = serde_json::from_str(text).map_err(|e| vec![diag("<file>", format!("malformed JSON: {e}"))])?;
    let Some(obj) = v.as_object() else {
        return Err(vec![diag("<file>", "expected a JSON object")]);
    };
    let mut out = Vec::new();
    for k in obj.keys() {
        if !["kind", "seed", "output", "params"].contains(&k.as_str()) {
            out.push(diag(k, "unknown field"));
        }
    }
    match obj.get("kind") {
        None => out.push(diag("kind", "missing field")),
        Some(Value::String(s)) if KINDS.contains(&s.as_str()) => {}
        Some(k) => out.push(diag("kind", format!("unknown experiment kind {k}; expected one of {}", KINDS.join(", ")))),
    }
    match obj.get("seed") {
        None => out.push(diag("seed", "missing field")),
        Some(s) if s.as_u64().is_none() => out.push(diag("seed", format!("expected a non-negative integer, got {s}"))),
        _ => {}
    }
    match obj.get("output") {
        None => out.push(diag("output", "missing field")),
        Some(Value::String(s)) if !s.is_empty() => {}
        Some(o) => out.push(diag("output", format!("expected a non-empty path, got {o}"))),
    }
    if let Some(p) = obj.get("params") {
        if !p.is_object() {
            out.push(diag("params", "expected an object"));
        }
    }
    if !out.is_empty() {
        return Err(out);
    }
    let mut full = obj.clone();
    full.entry("params").or_insert_with(|| Value::Object(Default::default()));
    let cfg: ExperimentConfig =
        serde_json::from_value(Value::Object(full)).map_err(|e| vec![diag("params", e.to_string())])?;
    let problems = check(&cfg.experiment);
    if problems.is_empty() {
        Ok(cfg)
    } else {
        Err(problems)
    }
}

fn positive(out: &mut Vec<Diagnostic>, field: &str, v: usize) {
    if v == 0 {
        out.push(diag(field, "must be at least 1"));
    }
}

fn probability(out: &mut Vec<Diagnostic>, field: &str, p: f64) {
    if !(0.0..=1.0).contains(&p) {
        out.push(diag(field, format!("{p} outside [0, 1]")));
    }
}

fn split(out: &mut Vec<Diagnostic>, n_train: usize, total: usize) {
    if n_train == 0 || n_train >= total {
        out.push(diag("params.n_train", format!("{n_train} must lie in 1..{total} so both splits are non-empty")));
    }
}

fn training(out: &mut Vec<Diagnostic>, t: &TrainConfig) {
    if !(t.adam.lr > 0.0) || !t.adam.lr.is_finite() {
        out.push(diag("params.train.adam.lr", format!("{} must be positive", t.adam.lr)));
    }
    for (name, b) in [("beta1", t.adam.beta1), ("beta2", t.adam.beta2)] {
        if !(0.0..1.0).contains(&b) {
            out.push(diag(&format!("params.train.adam.{name}"), format!("{b} outside [0, 1)")));
        }
    }
}

fn target(out: &mut Vec<Diagnostic>, t: &GateTarget) {
    if let GateTarget::IsingXX { angle } = t {
        if !angle.is_finite() {
            out.push(diag("params.target.angle", "must be finite"));
        }
    }
}

/// Range and consistency checks on parsed parameters.
pub fn check(e: &Experiment) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let o = &mut out;
    match e {
        Experiment::GateLearn(c) => {
            target(o, &c.target);
            positive(o, "params.runs", c.runs);
            split(o, c.n_train, c.pairs);
            training(o, &c.train);
        }
        Experiment::NoiseSweep(c) => {
            if c.strengths.is_empty() {
                o.push(diag("params.strengths", "must not be empty"));
            }
            for (k, &s) in c.strengths.iter().enumerate() {
                let f = format!("params.strengths[{k}]");
                match c.noise {
                    DataNoise::Bitflip => probability(o, &f, s),
                    DataNoise::Brownian if !(s > 0.0) || !s.is_finite() => o.push(diag(&f, format!("{s} must be positive"))),
                    DataNoise::Brownian => {}
                }
            }
            positive(o, "params.brownian_steps", c.brownian_steps);
            target(o, &c.target);
            positive(o, "params.runs", c.runs);
            split(o, c.n_train, c.pairs);
            training(o, &c.train);
        }
        Experiment::DepolarizingSweep(c) => {
            if c.ps.is_empty() {
                o.push(diag("params.ps", "must not be empty"));
            }
            for (k, &p) in c.ps.iter().enumerate() {
                probability(o, &format!("params.ps[{k}]"), p);
            }
            target(o, &c.target);
            positive(o, "params.runs", c.runs);
            positive(o, "params.n_train", c.n_train);
            positive(o, "params.n_test", c.n_test);
            training(o, &c.train);
        }
        Experiment::Qfi(c) => {
            let s = &c.settings;
            positive(o, "params.settings.per_family", s.per_family);
            if !(s.train_fraction > 0.0 && s.train_fraction < 1.0) {
                o.push(diag("params.settings.train_fraction", format!("{} outside (0, 1)", s.train_fraction)));
            }
            if !(s.epsilon >= 0.0) {
                o.push(diag("params.settings.epsilon", format!("{} must be non-negative", s.epsilon)));
            }
            if !(s.band >= 0.0) {
                o.push(diag("params.settings.band", format!("{} must be non-negative", s.band)));
            }
            positive(o, "params.runs", c.runs);
            training(o, &c.train);
        }
        Experiment::Teleport(c) => {
            positive(o, "params.runs", c.runs);
            positive(o, "params.n_train", c.n_train);
            positive(o, "params.n_test", c.n_test);
            training(o, &c.train);
        }
        Experiment::KernelSvm(c) => {
            if c.datasets.is_empty() {
                o.push(diag("params.datasets", "must not be empty"));
            }
            positive(o, "params.runs", c.runs);
            if c.n_train < 4 {
                o.push(diag("params.n_train", "need at least 4 training points"));
            }
            positive(o, "params.n_test", c.n_test);
            if !(c.noise >= 0.0) || !c.noise.is_finite() {
                o.push(diag("params.noise", format!("{} must be non-negative", c.noise)));
            }
            if !(c.c > 0.0) || !c.c.is_finite() {
                o.push(diag("params.c", format!("{} must be positive", c.c)));
            }
        }
        Experiment::Hea(c) => {
            let g = &c.greedy;
            probability(o, "params.greedy.epsilon", g.epsilon);
            positive(o, "params.greedy.n_reset", g.n_reset);
            if g.l_max == 0 || g.l_max > 6 {
                o.push(diag("params.greedy.l_max", format!("{} outside 1..=6 (slices of the (2,0) layer)", g.l_max)));
            }
            if !(g.delta > 0.0) {
                o.push(diag("params.greedy.delta", format!("{} must be positive", g.delta)));
            }
            positive(o, "params.runs", c.runs);
            positive(o, "params.n_train", c.n_train);
            positive(o, "params.n_test", c.n_test);
        }
        Experiment::Expressivity(c) => {
            if !(1..=3).contains(&c.width) {
                o.push(diag("params.width", format!("{} outside 1..=3", c.width)));
            }
            if c.samples < 2 {
                o.push(diag("params.samples", "need at least 2 samples"));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_in() {
        let c = parse(r#"{"kind": "gate-learn", "seed": 3, "output": "out"}"#).unwrap();
        assert_eq!(c.seed, 3);
        assert_eq!(c.experiment, Experiment::GateLearn(GateLearn::default()));
        let back: ExperimentConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn missing_seed_is_named() {
        let d = parse(r#"{"kind": "qfi", "output": "out"}"#).unwrap_err();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].field, "seed");
    }

    #[test]
    fn range_violation() {
        let d = parse(r#"{"kind": "noise-sweep", "seed": 1, "output": "o", "params": {"strengths": [0.1, 1.5]}}"#).unwrap_err();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].field, "params.strengths[1]");
        assert!(d[0].message.contains("1.5"));
    }

    #[test]
    fn unknown_kind_and_fields() {
        let d = parse(r#"{"kind": "dqn", "seed": 1, "output": "o"}"#).unwrap_err();
        assert_eq!(d[0].field, "kind");
        let d = parse(r#"{"kind": "hea", "seed": 1, "output": "o", "params": {"lmax": 3}}"#).unwrap_err();
        assert!(d[0].message.contains("lmax"));
        assert!(parse("{").is_err());
    }
}
