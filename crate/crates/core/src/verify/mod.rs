//! Reproduction suites for the explicit counterexample weights and the
//! theorem probes, with machine-readable results.

mod dilation;
mod nondoubling;
mod reflection;
mod theorems;

use std::fmt;

use serde::Serialize;
use serde_json::Value;

pub use dilation::{dilation_weight, suite_dilation, t_interval};
pub use nondoubling::{j_closed_form, nondoubling_ap_closed_form, nondoubling_weight, suite_nondoubling};
pub use reflection::{j_interval, reflection_weight, suite_reflection};
pub use theorems::{suite_theorems, test_functions, weak_type_quantity, TheoremsConfig};

use crate::error::{Error, Result};

/// Where the expected relation comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    /// Stated in the source literature.
    Literature,
    /// Follows from a computation done here (closed form, fit, oracle).
    Computed,
    /// Immediate from the definitions.
    Immediate,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub description: String,
    pub value: Option<f64>,
    pub unbounded: bool,
    pub relation: String,
    pub pass: bool,
    pub basis: Basis,
    pub inputs: Value,
}

impl Check {
    pub fn new(name: &str, description: &str, value: f64, relation: String, pass: bool, basis: Basis, inputs: Value) -> Self {
        Check {
            name: name.to_string(),
            description: description.to_string(),
            value: value.is_finite().then_some(value),
            unbounded: value.is_infinite(),
            relation,
            pass,
            basis,
            inputs,
        }
    }

    /// `|value - expected| <= tol`.
    pub fn close(name: &str, description: &str, value: f64, expected: f64, tol: f64, basis: Basis, inputs: Value) -> Self {
        let pass = (value - expected).abs() <= tol;
        Check::new(name, description, value, format!("|value - {expected:e}| <= {tol:e}"), pass, basis, inputs)
    }

    pub fn at_most(name: &str, description: &str, value: f64, bound: f64, basis: Basis, inputs: Value) -> Self {
        Check::new(name, description, value, format!("value <= {bound:e}"), value <= bound, basis, inputs)
    }

    pub fn at_least(name: &str, description: &str, value: f64, bound: f64, basis: Basis, inputs: Value) -> Self {
        Check::new(name, description, value, format!("value >= {bound:e}"), value >= bound, basis, inputs)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SuiteId {
    Dilation,
    Nondoubling,
    Reflection,
    Theorems,
}

impl SuiteId {
    pub const ALL: [SuiteId; 4] = [SuiteId::Dilation, SuiteId::Nondoubling, SuiteId::Reflection, SuiteId::Theorems];

    pub fn name(self) -> &'static str {
        match self {
            SuiteId::Dilation => "dilation",
            SuiteId::Nondoubling => "nondoubling",
            SuiteId::Reflection => "reflection",
            SuiteId::Theorems => "theorems",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        SuiteId::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown suite {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteResult {
    pub suite: SuiteId,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl SuiteResult {
    pub fn new(suite: SuiteId, checks: Vec<Check>) -> Self {
        let passed = checks.iter().all(|c| c.pass);
        SuiteResult { suite, passed, checks }
    }

    pub fn failing(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for SuiteResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "suite {}: {}", self.suite.name(), if self.passed { "PASS" } else { "FAIL" })?;
        for c in &self.checks {
            let v = match c.value {
                Some(v) => format!("{v:.10e}"),
                None if c.unbounded => "inf".to_string(),
                None => "n/a".to_string(),
            };
            writeln!(
                f,
                "  [{}] {:<28} {:>18}  {}  ({:?})",
                if c.pass { "ok" } else { "FAIL" },
                c.name,
                v,
                c.relation,
                c.basis
            )?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub passed: bool,
    pub suites: Vec<SuiteResult>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyOptions {
    pub nondoubling_p: Vec<f64>,
    pub theorems: TheoremsConfig,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { nondoubling_p: vec![1.5, 2.0, 3.0], theorems: TheoremsConfig::default() }
    }
}

pub fn run_suite(id: SuiteId, opts: &VerifyOptions) -> Result<SuiteResult> {
    match id {
        SuiteId::Dilation => suite_dilation(),
        SuiteId::Nondoubling => suite_nondoubling(&opts.nondoubling_p),
        SuiteId::Reflection => suite_reflection(),
        SuiteId::Theorems => suite_theorems(&opts.theorems),
    }
}

/// Runs the suites in parallel and assembles them in the order given.
pub fn run_suites(ids: &[SuiteId], opts: &VerifyOptions) -> Result<Summary> {
    use rayon::prelude::*;
    let suites = ids.par_iter().map(|id| run_suite(*id, opts)).collect::<Result<Vec<_>>>()?;
    Ok(Summary { passed: suites.iter().all(|s| s.passed), suites })
}
