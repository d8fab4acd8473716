//! Experiment files.
//!
//! ```toml
//! preset = "appendix-e"        # optional starting point
//! model = "models/chain.toml"  # path relative to this file, or an inline [model] table
//! algorithms = ["bglm-ofu-unknown", "ucb"]
//! horizons = [10000, 20000]
//! runs = 10
//! seed = 7
//! rho_scale = 0.1
//! scope = "target-only"        # or "all"
//! cycles = 1                   # or "log"
//! skip_second_init = true
//! actions = "ones-2"           # standard | budget-K | ones-K
//! ```
//!
//! Keys override the preset; without a preset they override library defaults.

use std::path::Path;

use serde::Deserialize;

use super::{ActionSpec, ExperimentSpec, Preset};
use crate::bandit::Algorithm;
use crate::discovery::{CycleCount, DiscoveryScope};
use crate::scm::{parse_model, read_model, write_model};
use crate::{Error, Result};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentFile {
    preset: Option<String>,
    model: Option<toml::Value>,
    algorithms: Option<Vec<String>>,
    horizons: Option<Vec<usize>>,
    runs: Option<usize>,
    seed: Option<u64>,
    rho_scale: Option<f64>,
    c0: Option<f64>,
    c1: Option<f64>,
    scope: Option<String>,
    cycles: Option<toml::Value>,
    skip_second_init: Option<bool>,
    actions: Option<String>,
    refit_every: Option<usize>,
    epsilon: Option<f64>,
    curve_points: Option<usize>,
    trace_stride: Option<usize>,
    threads: Option<usize>,
    out_dir: Option<String>,
}

fn parse_scope(s: &str) -> Result<DiscoveryScope> {
    match s {
        "all" => Ok(DiscoveryScope::All),
        "target-only" | "target" => Ok(DiscoveryScope::TargetOnly),
        _ => Err(Error::Parse(format!("unknown scope `{s}` (all, target-only)"))),
    }
}

fn scope_name(s: DiscoveryScope) -> &'static str {
    match s {
        DiscoveryScope::All => "all",
        DiscoveryScope::TargetOnly => "target-only",
    }
}

fn parse_cycles(v: &toml::Value) -> Result<CycleCount> {
    match v {
        toml::Value::String(s) if s == "log" => Ok(CycleCount::LogHorizon),
        toml::Value::Integer(k) if *k >= 1 => Ok(CycleCount::Fixed(*k as usize)),
        _ => Err(Error::Parse(format!("cycles must be \"log\" or a positive integer, got {v}"))),
    }
}

/// Parses an experiment file; relative model paths resolve against `base`.
pub fn parse_experiment(text: &str, base: Option<&Path>) -> Result<ExperimentSpec> {
    let file: ExperimentFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let mut spec = match &file.preset {
        Some(p) => ExperimentSpec::preset(Preset::parse(p)?),
        None if file.model.is_none() => {
            return Err(Error::InvalidConfig("experiment needs a preset or a model".into()));
        }
        None => ExperimentSpec::new("inline", crate::scm::appendix_e()),
    };
    match &file.model {
        Some(toml::Value::String(path)) => {
            let full = base.map_or_else(|| Path::new(path).to_path_buf(), |b| b.join(path));
            spec.model = read_model(&full)?;
            spec.source = path.clone();
        }
        Some(toml::Value::Table(table)) => {
            let text = toml::to_string(table).map_err(|e| Error::Parse(e.to_string()))?;
            spec.model = parse_model(&text)?;
            spec.source = "inline".into();
        }
        Some(other) => return Err(Error::Parse(format!("model must be a path or a table, got {other}"))),
        None => {}
    }
    if let Some(algs) = &file.algorithms {
        spec.algorithms = algs.iter().map(|a| a.parse::<Algorithm>()).collect::<Result<_>>()?;
    }
    if let Some(v) = file.horizons {
        spec.horizons = v;
    }
    if let Some(v) = file.runs {
        spec.runs = v;
    }
    if let Some(v) = file.seed {
        spec.seed = v;
    }
    if let Some(v) = file.rho_scale {
        spec.rho_scale = v;
    }
    if let Some(v) = file.c0 {
        spec.c0 = v;
    }
    if let Some(v) = file.c1 {
        spec.c1 = v;
    }
    if let Some(s) = &file.scope {
        spec.scope = parse_scope(s)?;
    }
    if let Some(v) = &file.cycles {
        spec.cycles = parse_cycles(v)?;
    }
    if let Some(v) = file.skip_second_init {
        spec.skip_second_init = v;
    }
    if let Some(s) = &file.actions {
        spec.actions = ActionSpec::parse(s)?;
    }
    if let Some(v) = file.refit_every {
        spec.refit_every = v;
    }
    if let Some(v) = file.epsilon {
        spec.epsilon = v;
    }
    if let Some(v) = file.curve_points {
        spec.curve_points = v;
    }
    if let Some(v) = file.trace_stride {
        spec.trace_stride = v;
    }
    if let Some(v) = file.threads {
        spec.threads = v;
    }
    if let Some(v) = file.out_dir {
        spec.out_dir = Some(v.into());
    }
    spec.validate()?;
    Ok(spec)
}

/// Reads an experiment file from disk.
pub fn read_experiment(path: &Path) -> Result<ExperimentSpec> {
    let text = std::fs::read_to_string(path)?;
    parse_experiment(&text, path.parent())
}

impl ExperimentSpec {
    /// Every resolved setting with the model inlined; parsing it back yields
    /// the same experiment.
    pub fn to_toml(&self) -> String {
        let algs: Vec<String> = self.algorithms.iter().map(|a| format!("\"{}\"", a.name())).collect();
        let horizons: Vec<String> = self.horizons.iter().map(usize::to_string).collect();
        let cycles = match self.cycles {
            CycleCount::LogHorizon => "\"log\"".to_string(),
            CycleCount::Fixed(k) => k.to_string(),
        };
        let mut out = String::new();
        out.push_str(&format!("# source: {}\n", self.source));
        out.push_str(&format!("algorithms = [{}]\n", algs.join(", ")));
        out.push_str(&format!("horizons = [{}]\n", horizons.join(", ")));
        out.push_str(&format!("runs = {}\n", self.runs));
        out.push_str(&format!("seed = {}\n", self.seed));
        out.push_str(&format!("rho_scale = {:?}\n", self.rho_scale));
        out.push_str(&format!("c0 = {:?}\n", self.c0));
        out.push_str(&format!("c1 = {:?}\n", self.c1));
        out.push_str(&format!("scope = \"{}\"\n", scope_name(self.scope)));
        out.push_str(&format!("cycles = {cycles}\n"));
        out.push_str(&format!("skip_second_init = {}\n", self.skip_second_init));
        out.push_str(&format!("actions = \"{}\"\n", self.actions.name()));
        out.push_str(&format!("refit_every = {}\n", self.refit_every));
        out.push_str(&format!("epsilon = {:?}\n", self.epsilon));
        out.push_str(&format!("curve_points = {}\n", self.curve_points));
        out.push_str(&format!("trace_stride = {}\n", self.trace_stride));
        out.push_str(&format!("threads = {}\n", self.threads));
        if let Some(dir) = &self.out_dir {
            out.push_str(&format!("out_dir = {:?}\n", dir.display().to_string()));
        }
        out.push_str("\n[model]\n");
        for line in write_model(&self.model).lines() {
            // Nested arrays of tables live under `model`.
            let line = match line.trim() {
                "[[nodes]]" => "[[model.nodes]]",
                "[[edges]]" => "[[model.edges]]",
                _ => line,
            };
            out.push_str(line);
            out.push('\n');
        }
        out
    }
}
