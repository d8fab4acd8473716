//! `cbandit`: command-line front end of the causal bandit simulator.

use std::path::PathBuf;
use std::process::ExitCode;

use cbandit_core::bandit::{optimal_value, reward_mode_for, Algorithm};
use cbandit_core::discovery::{
    bglm_ancestors, block_size, nogap_blm_ancestors, AncestorRelation, CycleCount, DiscoveryScope, InitMode,
    InitObservationLog, InitPlan,
};
use cbandit_core::explore::{causal_pe_unknown, pure_lucb, EssentialGraph, PeConfig, PeOutcome};
use cbandit_core::harness::{
    emit_plot, loglog_slope, read_experiment, read_series, resolve_out_dir, run_experiment, write_outputs,
    ActionSpec, ExperimentResult, ExperimentSpec, Preset,
};
use cbandit_core::rng::stream;
use cbandit_core::scm::{appendix_e, easy_observation, expected_reward, read_model};
use cbandit_core::{CausalModel, Error, Intervention, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "cbandit", version, about = "Combinatorial causal bandits with unknown graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw samples under an intervention and report the mean reward.
    Simulate(SimulateArgs),
    /// Run the interventional initialization phase and print the learned ancestor relation.
    Discover(DiscoverArgs),
    /// Replicated cumulative-regret experiment.
    Regret(RegretArgs),
    /// Best-arm identification over `do()` and the atomic interventions.
    PureExplore(PureExploreArgs),
    /// Full reference sweep with the qualitative ordering checks.
    ReproduceAppendixE(ReproduceArgs),
    /// Render `aggregate.csv` or `curves.csv` as an SVG line plot.
    Plot(PlotArgs),
}

#[derive(Args)]
struct ModelArgs {
    /// Model file (TOML).
    #[arg(long, conflicts_with = "preset")]
    model: Option<PathBuf>,
    /// Built-in model: `appendix-e` or `easy-observation-K`.
    #[arg(long)]
    preset: Option<String>,
}

impl ModelArgs {
    fn load(&self) -> Result<CausalModel> {
        match (&self.model, &self.preset) {
            (Some(path), _) => read_model(path),
            (None, Some(p)) => builtin_model(p),
            (None, None) => Err(Error::InvalidConfig("pass --model FILE or --preset NAME".into())),
        }
    }
}

fn builtin_model(name: &str) -> Result<CausalModel> {
    if name == "appendix-e" {
        return Ok(appendix_e());
    }
    if let Some(k) = name.strip_prefix("easy-observation-") {
        let roots = k.parse().map_err(|_| Error::Parse(format!("bad root count in `{name}`")))?;
        return easy_observation(roots);
    }
    Err(Error::Parse(format!("unknown model preset `{name}` (appendix-e, easy-observation-K)")))
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Intervention such as `X2=1,X3=0`; empty for `do()`.
    #[arg(long = "do", default_value = "")]
    intervention: String,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write every sample as CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Sqrt,
    TwoThirds,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScopeArg {
    All,
    TargetOnly,
}

impl From<ScopeArg> for DiscoveryScope {
    fn from(s: ScopeArg) -> Self {
        match s {
            ScopeArg::All => DiscoveryScope::All,
            ScopeArg::TargetOnly => DiscoveryScope::TargetOnly,
        }
    }
}

fn parse_cycles(s: &str) -> Result<CycleCount> {
    if s == "log" {
        return Ok(CycleCount::LogHorizon);
    }
    match s.parse::<usize>() {
        Ok(k) if k >= 1 => Ok(CycleCount::Fixed(k)),
        _ => Err(Error::Parse(format!("cycles must be `log` or a positive integer, got `{s}`"))),
    }
}

#[derive(Args)]
struct DiscoverArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_enum, default_value = "sqrt")]
    mode: ModeArg,
    #[arg(long = "T", default_value_t = 10_000)]
    horizon: usize,
    #[arg(long, default_value_t = 0.1)]
    c0: f64,
    #[arg(long, default_value_t = 0.1)]
    c1: f64,
    /// Cycles of the two-thirds schedule: `log` or a count.
    #[arg(long, default_value = "log")]
    cycles: String,
    #[arg(long, value_enum, default_value = "all")]
    scope: ScopeArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Read the initialization log instead of simulating it.
    #[arg(long)]
    log: Option<PathBuf>,
    /// Save the simulated initialization log.
    #[arg(long)]
    write_log: Option<PathBuf>,
    /// Adjacency list output; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RegretArgs {
    /// Experiment file; flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Experiment preset: `appendix-e` or `appendix-e-small`.
    #[arg(long, conflicts_with = "model")]
    preset: Option<String>,
    /// Model file; library defaults for everything else.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Algorithms, comma separated or repeated.
    #[arg(long = "algo", value_delimiter = ',')]
    algorithms: Vec<String>,
    /// Horizons, comma separated or repeated.
    #[arg(long = "T", value_delimiter = ',')]
    horizons: Vec<usize>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    rho_scale: Option<f64>,
    #[arg(long)]
    c0: Option<f64>,
    #[arg(long)]
    c1: Option<f64>,
    #[arg(long, value_enum)]
    scope: Option<ScopeArg>,
    /// `log` or a count.
    #[arg(long)]
    cycles: Option<String>,
    #[arg(long)]
    skip_second_init: Option<bool>,
    /// `standard`, `budget-K` or `ones-K`.
    #[arg(long)]
    actions: Option<String>,
    #[arg(long)]
    trace_stride: Option<usize>,
    /// Worker threads; 0 uses the available parallelism.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum GraphArg {
    /// Markov equivalence class of the true graph.
    Essential,
    /// Skeleton with only the edges into `Y` oriented.
    Skeleton,
    /// The true graph.
    Oriented,
}

#[derive(Args)]
struct PureExploreArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 0.05)]
    eps: f64,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Sample cap; the run is uncertified when it is reached.
    #[arg(long)]
    cap: Option<u64>,
    #[arg(long, value_enum, default_value = "essential")]
    graph: GraphArg,
    /// Run the interventional-only LUCB baseline instead.
    #[arg(long)]
    baseline: bool,
    /// Per-round trace CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct ReproduceArgs {
    /// Desk-scale preset: 20 runs, T ≤ 2·10⁴.
    #[arg(long)]
    small: bool,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, default_value = "appendix-e-out")]
    out: PathBuf,
}

#[derive(Args)]
struct PlotArgs {
    /// `aggregate.csv` or `curves.csv`.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

fn simulate(args: &SimulateArgs) -> Result<()> {
    if args.samples == 0 {
        return Err(Error::InvalidConfig("--samples must be at least 1".into()));
    }
    let model = args.model.load()?;
    let a = Intervention::parse(&model, &args.intervention)?;
    let mut rng = stream(args.seed);
    let mut writer = match &args.out {
        Some(p) => {
            let mut w = csv::Writer::from_path(p)?;
            let header: Vec<&str> = (0..model.len()).map(|i| model.name(i)).collect();
            w.write_record(&header)?;
            Some(w)
        }
        None => None,
    };
    let mut buf = Vec::new();
    let mut sum = 0.0;
    for _ in 0..args.samples {
        model.sample_into(&a, &mut rng, &mut buf);
        sum += buf[model.target()];
        if let Some(w) = writer.as_mut() {
            w.write_record(buf.iter().map(f64::to_string))?;
        }
    }
    if let Some(mut w) = writer {
        w.flush()?;
    }
    println!("intervention = {}", a.label(&model));
    println!("samples = {}", args.samples);
    println!("mean_y = {}", sum / args.samples as f64);
    println!("expected_y = {}", expected_reward(&model, &a, reward_mode_for(&model))?);
    Ok(())
}

fn discover(args: &DiscoverArgs) -> Result<()> {
    let model = args.model.load()?;
    let n = model.n();
    let mode = match args.mode {
        ModeArg::Sqrt => InitMode::Sqrt,
        ModeArg::TwoThirds => InitMode::TwoThirds,
    };
    let log = match &args.log {
        Some(p) => InitObservationLog::read_csv(&model, p)?,
        None => {
            let mut plan = InitPlan::new(mode, args.c0, args.horizon);
            plan.cycles = parse_cycles(&args.cycles)?;
            let log = InitObservationLog::collect(&model, &plan.schedule(n), &mut stream(args.seed));
            if let Some(p) = &args.write_log {
                log.write_csv(&model, p)?;
            }
            log
        }
    };
    let scope = args.scope.into();
    let rel = match mode {
        InitMode::Sqrt => bglm_ancestors(&log, n, args.c0, args.c1, args.horizon, scope)?,
        InitMode::TwoThirds => nogap_blm_ancestors(&log, n, args.c0, args.c1, args.horizon, scope)?,
    };
    let text = rel.to_adjacency_list(&model);
    match &args.out {
        Some(p) => std::fs::write(p, &text)?,
        None => print!("{text}"),
    }
    let truth = AncestorRelation::from_model(&model);
    let correct = match scope {
        DiscoveryScope::All => rel.matches_on_x(&truth) && rel.matches_on_target(&truth),
        DiscoveryScope::TargetOnly => rel.matches_on_target(&truth),
    };
    eprintln!("block = {}, rounds = {}, matches_truth = {correct}", block_size(args.c0, args.horizon, mode), log.len());
    Ok(())
}

fn regret_spec(args: &RegretArgs) -> Result<ExperimentSpec> {
    let mut spec = match (&args.config, &args.preset, &args.model) {
        (Some(path), _, _) => read_experiment(path)?,
        (None, Some(p), _) => ExperimentSpec::preset(Preset::parse(p)?),
        (None, None, Some(path)) => ExperimentSpec::new(path.display().to_string(), read_model(path)?),
        (None, None, None) => return Err(Error::InvalidConfig("pass --config, --preset or --model".into())),
    };
    if args.config.is_some() {
        if let Some(p) = &args.preset {
            let base = ExperimentSpec::preset(Preset::parse(p)?);
            spec.model = base.model;
        }
        if let Some(path) = &args.model {
            spec.model = read_model(path)?;
            spec.source = path.display().to_string();
        }
    }
    if !args.algorithms.is_empty() {
        spec.algorithms = args.algorithms.iter().map(|a| a.parse()).collect::<Result<Vec<Algorithm>>>()?;
    }
    if !args.horizons.is_empty() {
        spec.horizons = args.horizons.clone();
    }
    if let Some(v) = args.runs {
        spec.runs = v;
    }
    if let Some(v) = args.seed {
        spec.seed = v;
    }
    if let Some(v) = args.rho_scale {
        spec.rho_scale = v;
    }
    if let Some(v) = args.c0 {
        spec.c0 = v;
    }
    if let Some(v) = args.c1 {
        spec.c1 = v;
    }
    if let Some(v) = args.scope {
        spec.scope = v.into();
    }
    if let Some(v) = &args.cycles {
        spec.cycles = parse_cycles(v)?;
    }
    if let Some(v) = args.skip_second_init {
        spec.skip_second_init = v;
    }
    if let Some(v) = &args.actions {
        spec.actions = ActionSpec::parse(v)?;
    }
    if let Some(v) = args.trace_stride {
        spec.trace_stride = v;
    }
    if let Some(v) = args.threads {
        spec.threads = v;
    }
    if let Some(v) = &args.out {
        spec.out_dir = Some(v.clone());
    }
    spec.validate()?;
    Ok(spec)
}

fn print_aggregate(result: &ExperimentResult) {
    println!("{:<20} {:>8} {:>16} {:>10}", "algorithm", "T", "mean_cum_regret", "stderr");
    for row in &result.aggregate {
        println!("{:<20} {:>8} {:>16.3} {:>10.3}", row.algorithm.name(), row.horizon, row.mean_cum_regret, row.stderr);
    }
}

fn finish_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    let result = run_experiment(spec)?;
    print_aggregate(&result);
    if let Some(dir) = resolve_out_dir(spec) {
        write_outputs(spec, &result, &dir)?;
        println!("wrote {}", dir.display());
    }
    Ok(result)
}

fn regret(args: &RegretArgs) -> Result<()> {
    finish_experiment(&regret_spec(args)?).map(|_| ())
}

fn reproduce(args: &ReproduceArgs) -> Result<()> {
    let mut spec = ExperimentSpec::preset(if args.small { Preset::AppendixESmall } else { Preset::AppendixE });
    if let Some(v) = args.runs {
        spec.runs = v;
    }
    if let Some(v) = args.seed {
        spec.seed = v;
    }
    if let Some(v) = args.threads {
        spec.threads = v;
    }
    spec.out_dir = Some(args.out.clone());
    let result = finish_experiment(&spec)?;
    let (first, last) = (spec.horizons[0], *spec.horizons.iter().max().expect("validated"));
    let ordering = |t: usize| -> Vec<(Algorithm, f64)> {
        let mut v: Vec<(Algorithm, f64)> =
            spec.algorithms.iter().filter_map(|&a| result.mean(a, t).map(|m| (a, m))).collect();
        v.sort_by(|x, y| x.1.total_cmp(&y.1));
        v
    };
    for t in [first, last] {
        let names: Vec<String> = ordering(t).iter().map(|(a, m)| format!("{}={m:.1}", a.name())).collect();
        println!("T={t}: {}", names.join(" < "));
    }
    for alg in [Algorithm::BlmLrUnknown, Algorithm::BglmOfuUnknown] {
        let pts: Vec<(f64, f64)> =
            spec.horizons.iter().filter_map(|&t| result.mean(alg, t).map(|m| (t as f64, m))).collect();
        if let Ok(slope) = loglog_slope(&pts) {
            println!("log-log slope {}: {slope:.3}", alg.name());
        }
    }
    println!("wall_seconds = {:.1}", result.wall_seconds);
    Ok(())
}

fn print_pe(model: &CausalModel, out: &PeOutcome) {
    println!("arm = {}", out.arm);
    println!("action = {}", out.action.label(model));
    println!("samples = {}", out.samples);
    println!("rounds = {}", out.rounds);
    println!("certified = {}", out.certified);
    println!("undirected_edges_left = {}", out.graph.undirected_count());
    println!("arm,action,lower,upper,mu_hat,known,interventional_samples");
    for (k, a) in out.arms.iter().enumerate() {
        println!("{k},{},{},{},{},{},{}", a.action.label(model), a.lower, a.upper, a.mu_hat(), a.known, a.d);
    }
}

fn pure_explore(args: &PureExploreArgs) -> Result<()> {
    let model = args.model.load()?;
    let mut cfg = PeConfig::new(args.eps, args.delta, args.seed);
    if let Some(cap) = args.cap {
        cfg.cap = cap;
    }
    cfg.record_trace = args.trace.is_some();
    let out = if args.baseline {
        pure_lucb(&model, &cfg)?
    } else {
        let graph = match args.graph {
            GraphArg::Essential => EssentialGraph::from_model(&model),
            GraphArg::Skeleton => EssentialGraph::skeleton(&model),
            GraphArg::Oriented => EssentialGraph::fully_oriented(&model),
        };
        causal_pe_unknown(&model, &graph, &cfg)?
    };
    print_pe(&model, &out);
    if let Some(path) = &args.trace {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["t", "a_h", "a_l", "lower_h", "upper_l", "samples"])?;
        for r in &out.trace {
            w.write_record([
                r.t.to_string(),
                r.a_h.to_string(),
                r.a_l.to_string(),
                r.lower_h.to_string(),
                r.upper_l.to_string(),
                r.samples.to_string(),
            ])?;
        }
        w.flush()?;
    }
    let (best, _) = optimal_value(&model, &cbandit_core::ActionSet::standard(&model))?;
    eprintln!("true best arm = {best}");
    Ok(())
}

fn plot(args: &PlotArgs) -> Result<()> {
    let (series, x_label) = read_series(&args.input)?;
    emit_plot(&series, &x_label, "mean cumulative regret", &args.out)?;
    println!("wrote {} ({} series)", args.out.display(), series.len());
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Discover(a) => discover(a),
        Command::Regret(a) => regret(a),
        Command::PureExplore(a) => pure_explore(a),
        Command::ReproduceAppendixE(a) => reproduce(a),
        Command::Plot(a) => plot(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn builtin_models() {
        assert_eq!(builtin_model("appendix-e").unwrap().n(), 6);
        assert_eq!(builtin_model("easy-observation-3").unwrap().n(), 5);
        assert!(builtin_model("nope").is_err());
    }

    #[test]
    fn cycles_flag() {
        assert_eq!(parse_cycles("log").unwrap(), CycleCount::LogHorizon);
        assert_eq!(parse_cycles("2").unwrap(), CycleCount::Fixed(2));
        assert!(parse_cycles("0").is_err());
    }
}
