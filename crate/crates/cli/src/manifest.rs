use std::path::{Path, PathBuf};

use serde::Serialize;

use dirac_lab_core::io::write_atomic;

#[derive(Debug, Clone, Serialize)]
pub struct Assertion {
    pub name: String,
    pub value: f64,
    /// Human-readable condition, e.g. `< 1e-3`.
    pub condition: String,
    pub pass: bool,
}

impl Assertion {
    pub fn below(name: &str, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            condition: format!("< {bound:e}"),
            pass: value < bound,
        }
    }

    pub fn at_least(name: &str, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            condition: format!(">= {bound}"),
            pass: value >= bound,
        }
    }

    pub fn above(name: &str, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            condition: format!("> {bound}"),
            pass: value > bound,
        }
    }

    pub fn within(name: &str, value: f64, lo: f64, hi: f64) -> Self {
        Self {
            name: name.into(),
            value,
            condition: format!("in [{lo}, {hi}]"),
            pass: (lo..=hi).contains(&value),
        }
    }

    /// Boolean property; `value` carries the 1/0 outcome.
    pub fn holds(name: &str, pass: bool, condition: &str) -> Self {
        Self {
            name: name.into(),
            value: if pass { 1.0 } else { 0.0 },
            condition: condition.into(),
            pass,
        }
    }
}

/// Outputs and assertions collected by a scenario.
#[derive(Debug, Default)]
pub struct Report {
    pub outputs: Vec<PathBuf>,
    pub assertions: Vec<Assertion>,
    pub config: serde_json::Value,
}

impl Report {
    pub fn check(&mut self, a: Assertion) {
        self.assertions.push(a);
    }

    pub fn output(&mut self, path: PathBuf) {
        self.outputs.push(path);
    }

    pub fn pass(&self) -> bool {
        self.assertions.iter().all(|a| a.pass)
    }
}

#[derive(Debug, Serialize)]
pub struct RunManifest<'a> {
    pub scenario: &'a str,
    pub version: &'a str,
    pub config: &'a serde_json::Value,
    pub seed: Option<u64>,
    pub threads: usize,
    pub wall_time_s: f64,
    pub outputs: Vec<String>,
    pub assertions: &'a [Assertion],
    pub pass: bool,
    /// Set when the scenario stopped on an error.
    pub error: Option<String>,
}

impl RunManifest<'_> {
    pub fn write(&self, dir: &Path) -> std::io::Result<PathBuf> {
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(self).expect("manifest serialises");
        write_atomic(&path, text.as_bytes())?;
        Ok(path)
    }
}
