//! Replicated experiments: presets, parallel execution, aggregation and
//! CSV/SVG output.
//!
//! Each `(algorithm, T, run)` cell runs on its own random stream derived from
//! the base seed, so results do not depend on scheduling. Output files are
//! written in `(algorithm, T, run)` order and contain no timing data; wall
//! times go to a separate metadata file.

mod config;
mod output;
mod plot;

use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;

use crate::bandit::{run, Algorithm, RegretRow, RunConfig};
use crate::discovery::{AncestorRelation, CycleCount, DiscoveryScope};
use crate::rng::derive_seed;
use crate::scm::{appendix_e, ActionSet, CausalModel};
use crate::{Error, Result};

pub use config::{parse_experiment, read_experiment};
pub use output::{resolve_out_dir, write_aggregate, write_outputs, write_runs, OUT_DIR_ENV};
pub use plot::{emit_plot, read_series, render_svg, Series};

/// Named experiment presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Four algorithms, `T ∈ {1, 2, 4, 8}·10⁴`, 50 runs.
    AppendixE,
    /// Desk-scale variant: 20 runs, `T ∈ {1, 2}·10⁴`.
    AppendixESmall,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Self::AppendixE => "appendix-e",
            Self::AppendixESmall => "appendix-e-small",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "appendix-e" => Ok(Self::AppendixE),
            "appendix-e-small" => Ok(Self::AppendixESmall),
            _ => Err(Error::Parse(format!("unknown preset `{s}`"))),
        }
    }
}

/// How the action list of a run is built.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionSpec {
    /// `do()` and every atomic intervention.
    Standard,
    /// Every intervention on at most `k` nodes with any values.
    Budgeted(usize),
    /// `do(S=1)` for every `S` of exactly `k` intervenable nodes.
    AllOnes(usize),
}

impl ActionSpec {
    pub fn name(self) -> String {
        match self {
            Self::Standard => "standard".into(),
            Self::Budgeted(k) => format!("budget-{k}"),
            Self::AllOnes(k) => format!("ones-{k}"),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        if s == "standard" {
            return Ok(Self::Standard);
        }
        let num = |rest: &str| rest.parse::<usize>().map_err(|_| Error::Parse(format!("bad action spec `{s}`")));
        if let Some(rest) = s.strip_prefix("budget-") {
            return Ok(Self::Budgeted(num(rest)?));
        }
        if let Some(rest) = s.strip_prefix("ones-") {
            return Ok(Self::AllOnes(num(rest)?));
        }
        Err(Error::Parse(format!("unknown action spec `{s}` (standard, budget-K, ones-K)")))
    }

    pub fn build(self, model: &CausalModel) -> Result<ActionSet> {
        match self {
            Self::Standard => Ok(ActionSet::standard(model)),
            Self::Budgeted(k) => Ok(ActionSet::budgeted(model, k)),
            Self::AllOnes(k) => {
                let nodes: Vec<usize> = (1..model.n()).collect();
                ActionSet::all_ones(model, &nodes, k)
            }
        }
    }
}

/// Full description of a replicated regret experiment.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    /// Preset name or model path, echoed into the metadata.
    pub source: String,
    pub model: CausalModel,
    pub algorithms: Vec<Algorithm>,
    pub horizons: Vec<usize>,
    pub runs: usize,
    pub seed: u64,
    pub rho_scale: f64,
    pub c0: f64,
    pub c1: f64,
    pub scope: DiscoveryScope,
    pub cycles: CycleCount,
    pub skip_second_init: bool,
    pub actions: ActionSpec,
    pub refit_every: usize,
    pub epsilon: f64,
    /// Points per regret curve.
    pub curve_points: usize,
    /// Row stride of per-run traces; 0 disables trace files.
    pub trace_stride: usize,
    /// Worker threads; 0 uses the available parallelism.
    pub threads: usize,
    pub out_dir: Option<PathBuf>,
}

impl ExperimentSpec {
    /// Library defaults on an arbitrary model.
    pub fn new(source: impl Into<String>, model: CausalModel) -> Self {
        Self {
            source: source.into(),
            model,
            algorithms: vec![Algorithm::BglmOfuUnknown, Algorithm::BlmLrUnknown, Algorithm::Ucb, Algorithm::EpsGreedy],
            horizons: vec![10_000],
            runs: 10,
            seed: 0,
            rho_scale: 1.0,
            c0: 0.1,
            c1: 0.1,
            scope: DiscoveryScope::All,
            cycles: CycleCount::LogHorizon,
            skip_second_init: false,
            actions: ActionSpec::Standard,
            refit_every: 1,
            epsilon: 0.02,
            curve_points: 100,
            trace_stride: 100,
            threads: 0,
            out_dir: None,
        }
    }

    /// The reference experiment: radii scaled by 0.1, discovery restricted to
    /// edges into `Y`, no null-intervention phase, one initialization cycle and
    /// the ten `do(S=1)` pair arms.
    pub fn preset(preset: Preset) -> Self {
        let mut spec = Self::new(preset.name(), appendix_e());
        spec.rho_scale = 0.1;
        spec.scope = DiscoveryScope::TargetOnly;
        spec.cycles = CycleCount::Fixed(1);
        spec.skip_second_init = true;
        spec.actions = ActionSpec::AllOnes(2);
        match preset {
            Preset::AppendixE => {
                spec.runs = 50;
                spec.horizons = vec![10_000, 20_000, 40_000, 80_000];
            }
            Preset::AppendixESmall => {
                spec.runs = 20;
                spec.horizons = vec![10_000, 20_000];
            }
        }
        spec
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::InvalidConfig("runs must be at least 1".into()));
        }
        if self.horizons.is_empty() || self.horizons.contains(&0) {
            return Err(Error::InvalidConfig("horizons must be a non-empty list of positive integers".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::InvalidConfig("at least one algorithm is required".into()));
        }
        if self.curve_points == 0 {
            return Err(Error::InvalidConfig("curve_points must be positive".into()));
        }
        self.actions.build(&self.model)?;
        for &alg in &self.algorithms {
            for &t in &self.horizons {
                self.run_config(alg, t, 0)?.validate(&self.model)?;
            }
        }
        Ok(())
    }

    /// Per-run configuration.
    pub fn run_config(&self, algorithm: Algorithm, horizon: usize, run: usize) -> Result<RunConfig> {
        let mut cfg = RunConfig::new(&self.model, algorithm, horizon, self.run_seed(algorithm, run));
        cfg.c0 = self.c0;
        cfg.c1 = self.c1;
        cfg.rho_scale = self.rho_scale;
        cfg.scope = self.scope;
        cfg.cycles = self.cycles;
        cfg.skip_second_init = self.skip_second_init;
        cfg.actions = self.actions.build(&self.model)?;
        cfg.refit_every = self.refit_every;
        cfg.epsilon = self.epsilon;
        Ok(cfg)
    }

    pub fn run_seed(&self, algorithm: Algorithm, run: usize) -> u64 {
        derive_seed(self.seed, run as u64, algorithm.name())
    }
}

/// Outcome of one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub algorithm: Algorithm,
    pub horizon: usize,
    pub run: usize,
    pub seed: u64,
    pub cum_regret: f64,
    /// Whether the learned relation matches the truth on the discovered scope.
    pub relation_correct: Option<bool>,
    /// `(t, cumulative regret)` at the curve points.
    pub curve: Vec<(usize, f64)>,
    /// Strided trace rows; empty when traces are disabled.
    pub trace: Vec<RegretRow>,
    pub wall_seconds: f64,
}

/// Mean and standard error of the final cumulative regret per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub horizon: usize,
    pub algorithm: Algorithm,
    pub mean_cum_regret: f64,
    pub stderr: f64,
}

/// Everything an experiment produced.
#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub runs: Vec<RunSummary>,
    pub aggregate: Vec<AggregateRow>,
    pub wall_seconds: f64,
}

impl ExperimentResult {
    pub fn mean(&self, algorithm: Algorithm, horizon: usize) -> Option<f64> {
        self.aggregate.iter().find(|r| r.algorithm == algorithm && r.horizon == horizon).map(|r| r.mean_cum_regret)
    }

    /// `(t, mean, stderr)` of the cumulative regret curve of one cell.
    pub fn curve(&self, algorithm: Algorithm, horizon: usize) -> Vec<(usize, f64, f64)> {
        let cell: Vec<&RunSummary> =
            self.runs.iter().filter(|r| r.algorithm == algorithm && r.horizon == horizon).collect();
        let Some(first) = cell.first() else { return Vec::new() };
        (0..first.curve.len())
            .map(|k| {
                let values: Vec<f64> = cell.iter().map(|r| r.curve[k].1).collect();
                let (mean, se) = mean_stderr(&values);
                (first.curve[k].0, mean, se)
            })
            .collect()
    }
}

/// Sample mean and `s/√k`; the error is 0 for a single value.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

/// Rounds at which curves are sampled: `⌈k·T/points⌉` for `k = 1 … points`.
pub fn curve_rounds(horizon: usize, points: usize) -> Vec<usize> {
    let points = points.min(horizon);
    let mut out: Vec<usize> = (1..=points).map(|k| (k * horizon).div_ceil(points)).collect();
    out.dedup();
    out
}

fn run_cell(spec: &ExperimentSpec, algorithm: Algorithm, horizon: usize, run_id: usize) -> Result<RunSummary> {
    let start = Instant::now();
    let cfg = spec.run_config(algorithm, horizon, run_id)?;
    let trace = run(&spec.model, &cfg)?;
    let truth = AncestorRelation::from_model(&spec.model);
    let relation_correct = trace.relation.as_ref().map(|r| match spec.scope {
        DiscoveryScope::All => r.matches_on_x(&truth) && r.matches_on_target(&truth),
        DiscoveryScope::TargetOnly => r.matches_on_target(&truth),
    });
    let curve = curve_rounds(horizon, spec.curve_points).into_iter().map(|t| (t, trace.rows[t - 1].cum_regret)).collect();
    let rows = if spec.trace_stride == 0 {
        Vec::new()
    } else {
        trace.rows.iter().filter(|r| r.t % spec.trace_stride == 0 || r.t == horizon).cloned().collect()
    };
    Ok(RunSummary {
        algorithm,
        horizon,
        run: run_id,
        seed: cfg.seed,
        cum_regret: trace.cumulative_regret(),
        relation_correct,
        curve,
        trace: rows,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Runs every `(algorithm, T, run)` cell and aggregates the final regrets.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    let start = Instant::now();
    let mut cells = Vec::new();
    for &alg in &spec.algorithms {
        for &t in &spec.horizons {
            for r in 0..spec.runs {
                cells.push((alg, t, r));
            }
        }
    }
    let work = || cells.par_iter().map(|&(a, t, r)| run_cell(spec, a, t, r)).collect::<Result<Vec<_>>>();
    let mut runs = if spec.threads == 0 {
        work()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(spec.threads)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
        pool.install(work)?
    };
    runs.sort_by(|a, b| (a.algorithm, a.horizon, a.run).cmp(&(b.algorithm, b.horizon, b.run)));
    let mut aggregate = Vec::new();
    let mut keys: Vec<(Algorithm, usize)> = runs.iter().map(|r| (r.algorithm, r.horizon)).collect();
    keys.dedup();
    for (alg, t) in keys {
        let values: Vec<f64> = runs.iter().filter(|r| r.algorithm == alg && r.horizon == t).map(|r| r.cum_regret).collect();
        let (mean, se) = mean_stderr(&values);
        aggregate.push(AggregateRow { horizon: t, algorithm: alg, mean_cum_regret: mean, stderr: se });
    }
    Ok(ExperimentResult { runs, aggregate, wall_seconds: start.elapsed().as_secs_f64() })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 || points.iter().any(|&(x, y)| x <= 0.0 || y <= 0.0) {
        return Err(Error::InvalidConfig("log-log fit needs at least two positive points".into()));
    }
    let k = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn tiny_spec() -> ExperimentSpec {
        let mut spec = ExperimentSpec::preset(Preset::AppendixESmall);
        spec.horizons = vec![1_500];
        spec.runs = 3;
        spec.curve_points = 10;
        spec.trace_stride = 50;
        spec.threads = 1;
        spec
    }

    #[test]
    fn single_run_has_zero_stderr() {
        let mut spec = tiny_spec();
        spec.runs = 1;
        spec.algorithms = vec![Algorithm::Ucb];
        let res = run_experiment(&spec).unwrap();
        assert_eq!(res.aggregate.len(), 1);
        assert_eq!(res.aggregate[0].stderr, 0.0);
    }

    #[test]
    fn aggregate_matches_runs_and_order_is_canonical() {
        let spec = tiny_spec();
        let res = run_experiment(&spec).unwrap();
        assert_eq!(res.runs.len(), 4 * 3);
        for row in &res.aggregate {
            let finals: Vec<f64> = res
                .runs
                .iter()
                .filter(|r| r.algorithm == row.algorithm && r.horizon == row.horizon)
                .map(|r| r.trace.last().unwrap().cum_regret)
                .collect();
            assert_abs_diff_eq!(finals.iter().sum::<f64>() / finals.len() as f64, row.mean_cum_regret, epsilon = 1e-9);
        }
        let keys: Vec<_> = res.runs.iter().map(|r| (r.algorithm, r.horizon, r.run)).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
    }

    #[test]
    fn validation_rejects_degenerate_specs() {
        let mut spec = tiny_spec();
        spec.runs = 0;
        assert!(spec.validate().is_err());
        let mut spec = tiny_spec();
        spec.horizons = vec![];
        assert!(spec.validate().is_err());
    }

    #[test]
    fn curve_rounds_end_at_horizon() {
        assert_eq!(curve_rounds(10, 5), vec![2, 4, 6, 8, 10]);
        assert_eq!(curve_rounds(3, 10), vec![1, 2, 3]);
        assert_eq!(*curve_rounds(80_000, 100).last().unwrap(), 80_000);
    }

    #[test]
    fn loglog_slope_recovers_power() {
        let pts: Vec<(f64, f64)> = [1e4, 2e4, 4e4, 8e4].iter().map(|&t: &f64| (t, 3.0 * t.powf(0.66))).collect();
        assert_abs_diff_eq!(loglog_slope(&pts).unwrap(), 0.66, epsilon = 1e-12);
        assert!(loglog_slope(&[(1.0, 1.0)]).is_err());
    }

    #[test]
    fn action_spec_names_round_trip() {
        for s in [ActionSpec::Standard, ActionSpec::Budgeted(2), ActionSpec::AllOnes(2)] {
            assert_eq!(ActionSpec::parse(&s.name()).unwrap(), s);
        }
        assert_eq!(ActionSpec::AllOnes(2).build(&appendix_e()).unwrap().len(), 10);
    }
}
