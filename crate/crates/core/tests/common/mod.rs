#![allow(dead_code)]

use std::path::PathBuf;

use swarmclt::experiments::ExperimentSpec;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn load_fixture(name: &str, overrides: &[&str]) -> ExperimentSpec {
    let overrides: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
    ExperimentSpec::load(&fixture(name), &overrides).expect("fixture parses")
}
