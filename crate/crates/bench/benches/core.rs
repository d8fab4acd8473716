use std::hint::black_box;

use cbandit_bench::logistic_dataset;
use cbandit_core::bandit::{run, Algorithm, RunConfig};
use cbandit_core::estimation::{mle_estimate, RegressionState};
use cbandit_core::explore::{causal_pe_unknown, EssentialGraph, PeConfig};
use cbandit_core::harness::{ExperimentSpec, Preset};
use cbandit_core::rng::stream;
use cbandit_core::scm::{appendix_e, expected_reward};
use cbandit_core::{Intervention, LinkFunction, RewardMode};
use criterion::{criterion_group, criterion_main, Criterion};
use nalgebra::DVector;

fn scm(c: &mut Criterion) {
    let m = appendix_e();
    let a = Intervention::from_pairs([(1, 1), (2, 1)]);
    let mut rng = stream(1);
    let mut buf = Vec::new();
    c.bench_function("sample appendix-e", |b| b.iter(|| m.sample_into(black_box(&a), &mut rng, &mut buf)));
    c.bench_function("reward exact-linear", |b| b.iter(|| expected_reward(&m, black_box(&a), RewardMode::ExactLinear)));
    c.bench_function("reward enumerate", |b| b.iter(|| expected_reward(&m, black_box(&a), RewardMode::Enumerate)));
}

fn estimation(c: &mut Criterion) {
    let data = logistic_dataset(6, 10_000, 2);
    let link = LinkFunction::logistic();
    c.bench_function("mle 6-dim 1e4 rows", |b| b.iter(|| mle_estimate(black_box(&data), &link)));
    let v = DVector::from_vec(vec![1.0, 0.0, 1.0, 1.0, 0.0, 1.0]);
    c.bench_function("ridge update 6-dim", |b| {
        let mut s = RegressionState::new(6);
        b.iter(|| s.update(black_box(&v), 1.0))
    });
}

fn bandits(c: &mut Criterion) {
    let spec = ExperimentSpec::preset(Preset::AppendixE);
    let mut group = c.benchmark_group("appendix-e run T=5000");
    group.sample_size(10);
    for alg in [Algorithm::BglmOfuUnknown, Algorithm::BlmLrUnknown, Algorithm::Ucb] {
        let cfg: RunConfig = spec.run_config(alg, 5_000, 0).expect("preset is valid");
        group.bench_function(alg.name(), |b| b.iter(|| run(&spec.model, black_box(&cfg))));
    }
    group.finish();
}

fn pure_exploration(c: &mut Criterion) {
    let m = appendix_e();
    let g = EssentialGraph::from_model(&m);
    let cfg = PeConfig::new(0.2, 0.1, 3);
    let mut group = c.benchmark_group("pure exploration");
    group.sample_size(10);
    group.bench_function("causal-pe appendix-e eps=0.2", |b| b.iter(|| causal_pe_unknown(&m, &g, black_box(&cfg))));
    group.finish();
}

criterion_group!(benches, scm, estimation, bandits, pure_exploration);
criterion_main!(benches);
