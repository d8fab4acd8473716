use std::path::Path;

use cbandit_core::harness::{read_experiment, ExperimentSpec, Preset};
use cbandit_core::scm::generate::appendix_e;
use cbandit_core::scm::{read_model, write_model};

fn root() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../.."))
}

#[test]
fn shipped_model_is_the_reference_instance() {
    let m = read_model(&root().join("models/appendix-e.toml")).unwrap();
    assert_eq!(write_model(&m), write_model(&appendix_e()));
}

#[test]
fn shipped_experiment_matches_the_preset() {
    let spec = read_experiment(&root().join("experiments/appendix-e.toml")).unwrap();
    let preset = ExperimentSpec::preset(Preset::AppendixE);
    // The first line names the source and differs by construction.
    let body = |s: &ExperimentSpec| s.to_toml().split_once('\n').unwrap().1.to_string();
    assert_eq!(body(&spec), body(&preset));
}
