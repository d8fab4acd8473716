//! Result files. Everything except `metadata.toml` is a pure function of the
//! experiment spec, so reruns with the same seed produce identical bytes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::plot::{emit_plot, Series};
use super::{ExperimentResult, ExperimentSpec};
use crate::bandit::Algorithm;
use crate::Result;

/// Environment variable that overrides the output directory.
pub const OUT_DIR_ENV: &str = "CBANDIT_OUT_DIR";

/// Output directory: the environment override, else the spec's `out_dir`.
pub fn resolve_out_dir(spec: &ExperimentSpec) -> Option<PathBuf> {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(v) if !v.is_empty() => Some(PathBuf::from(v)),
        _ => spec.out_dir.clone(),
    }
}

fn slug(a: Algorithm) -> String {
    a.name().to_ascii_lowercase()
}

fn opt_to_string<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// `T,algorithm,mean_cum_regret,stderr`, one row per cell.
pub fn write_aggregate(result: &ExperimentResult, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["T", "algorithm", "mean_cum_regret", "stderr"])?;
    for row in &result.aggregate {
        w.write_record([
            row.horizon.to_string(),
            row.algorithm.name().to_string(),
            row.mean_cum_regret.to_string(),
            row.stderr.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One row per replication with its seed and discovery outcome.
pub fn write_runs(result: &ExperimentResult, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["algorithm", "T", "run_id", "seed", "cum_regret", "relation_correct"])?;
    for r in &result.runs {
        w.write_record([
            r.algorithm.name().to_string(),
            r.horizon.to_string(),
            r.run.to_string(),
            r.seed.to_string(),
            r.cum_regret.to_string(),
            opt_to_string(r.relation_correct),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_curves(spec: &ExperimentSpec, result: &ExperimentResult, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["algorithm", "T", "t", "mean_cum_regret", "stderr"])?;
    for &alg in &spec.algorithms {
        for &horizon in &spec.horizons {
            for (t, mean, se) in result.curve(alg, horizon) {
                w.write_record([
                    alg.name().to_string(),
                    horizon.to_string(),
                    t.to_string(),
                    mean.to_string(),
                    se.to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn write_traces(result: &ExperimentResult, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut start = 0;
    while start < result.runs.len() {
        let (alg, horizon) = (result.runs[start].algorithm, result.runs[start].horizon);
        let end = start + result.runs[start..].iter().take_while(|r| r.algorithm == alg && r.horizon == horizon).count();
        let path = dir.join(format!("{}_T{}.csv", slug(alg), horizon));
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["run_id", "t", "action_id", "y", "expected_reward", "inst_regret", "cum_regret"])?;
        for run in &result.runs[start..end] {
            for row in &run.trace {
                w.write_record([
                    run.run.to_string(),
                    row.t.to_string(),
                    opt_to_string(row.action_id),
                    row.y.to_string(),
                    row.expected_reward.to_string(),
                    row.inst_regret.to_string(),
                    row.cum_regret.to_string(),
                ])?;
            }
        }
        w.flush()?;
        written.push(path);
        start = end;
    }
    Ok(written)
}

fn write_metadata(spec: &ExperimentSpec, result: &ExperimentResult, path: &Path) -> Result<()> {
    let mut f = fs::File::create(path)?;
    writeln!(f, "source = {:?}", spec.source)?;
    writeln!(f, "wall_seconds = {}", result.wall_seconds)?;
    writeln!(f, "threads = {}", if spec.threads == 0 { rayon::current_num_threads() } else { spec.threads })?;
    for &alg in &spec.algorithms {
        for &horizon in &spec.horizons {
            let cell: Vec<f64> = result
                .runs
                .iter()
                .filter(|r| r.algorithm == alg && r.horizon == horizon)
                .map(|r| r.wall_seconds)
                .collect();
            writeln!(f, "\n[[cell]]\nalgorithm = {:?}\nT = {}", alg.name(), horizon)?;
            writeln!(f, "run_seconds_total = {}", cell.iter().sum::<f64>())?;
            writeln!(f, "run_seconds_mean = {}", cell.iter().sum::<f64>() / cell.len().max(1) as f64)?;
        }
    }
    Ok(())
}

/// Writes the aggregate, per-run, curve and trace CSVs, the config echo, the
/// timing metadata and the regret curves of the longest horizon into `dir`.
pub fn write_outputs(spec: &ExperimentSpec, result: &ExperimentResult, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let aggregate = dir.join("aggregate.csv");
    write_aggregate(result, &aggregate)?;
    written.push(aggregate);
    let runs = dir.join("runs.csv");
    write_runs(result, &runs)?;
    written.push(runs);
    let curves = dir.join("curves.csv");
    write_curves(spec, result, &curves)?;
    written.push(curves);
    if spec.trace_stride > 0 {
        written.extend(write_traces(result, &dir.join("traces"))?);
    }
    let config = dir.join("config.toml");
    fs::write(&config, spec.to_toml())?;
    written.push(config);
    let meta = dir.join("metadata.toml");
    write_metadata(spec, result, &meta)?;
    written.push(meta);
    let horizon = spec.horizons.iter().copied().max().unwrap_or(0);
    let series: Vec<Series> = spec
        .algorithms
        .iter()
        .map(|&alg| Series {
            label: alg.name().to_string(),
            points: result.curve(alg, horizon).into_iter().map(|(t, mean, _)| (t as f64, mean)).collect(),
        })
        .collect();
    let plot = dir.join("regret.svg");
    emit_plot(&series, "t", "mean cumulative regret", &plot)?;
    written.push(plot);
    Ok(written)
}
