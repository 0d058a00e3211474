use std::fmt;

use kpzlab::trees::StabilizationCertificate;
use serde::Serialize;
use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `|observed - expected| <= tolerance`
    Within,
    /// `observed < expected`
    Below,
    /// `observed >= expected`
    AtLeast,
    /// `observed == expected`, bit for bit
    Equal,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Assertion {
    pub name: String,
    pub relation: Relation,
    pub expected: f64,
    pub tolerance: f64,
    pub observed: f64,
    pub passed: bool,
}

impl Assertion {
    pub fn within(name: impl Into<String>, expected: f64, tolerance: f64, observed: f64) -> Self {
        let passed = (observed - expected).abs() <= tolerance;
        Assertion { name: name.into(), relation: Relation::Within, expected, tolerance, observed, passed }
    }

    pub fn below(name: impl Into<String>, bound: f64, observed: f64) -> Self {
        Assertion {
            name: name.into(),
            relation: Relation::Below,
            expected: bound,
            tolerance: 0.0,
            observed,
            passed: observed < bound,
        }
    }

    pub fn at_least(name: impl Into<String>, bound: f64, observed: f64) -> Self {
        let passed = observed >= bound;
        Assertion { name: name.into(), relation: Relation::AtLeast, expected: bound, tolerance: 0.0, observed, passed }
    }

    pub fn equal(name: impl Into<String>, expected: f64, observed: f64) -> Self {
        let passed = observed == expected;
        Assertion { name: name.into(), relation: Relation::Equal, expected, tolerance: 0.0, observed, passed }
    }

    /// A property that must hold: expected 1, observed 1 or 0.
    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Assertion::equal(name, 1.0, if ok { 1.0 } else { 0.0 })
    }
}

impl fmt::Display for Assertion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "pass" } else { "FAIL" };
        let expected = match self.relation {
            Relation::Within => format!("{} +- {}", self.expected, self.tolerance),
            Relation::Below => format!("< {}", self.expected),
            Relation::AtLeast => format!(">= {}", self.expected),
            Relation::Equal => format!("== {}", self.expected),
        };
        write!(
            f,
            "{verdict} {}: expected {expected}, observed {}, tolerance {}",
            self.name, self.observed, self.tolerance
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    InsufficientCertification,
}

/// What a command produced: a JSON summary, its assertions and data files.
#[derive(Debug, Default)]
pub struct Outcome {
    pub results: Value,
    pub assertions: Vec<Assertion>,
    pub files: Vec<(String, String)>,
}

impl Outcome {
    pub fn file(&mut self, name: &str, contents: String) {
        self.files.push((name.to_string(), contents));
    }
}

#[derive(Serialize)]
pub struct Report<'a> {
    pub command: &'a str,
    pub config_hash: &'a str,
    pub status: Status,
    pub assertions: &'a [Assertion],
    pub results: &'a Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificates: Option<&'a [StabilizationCertificate]>,
}
