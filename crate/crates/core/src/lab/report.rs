use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ScenarioConfig;
use crate::error::{Error, Result};

/// JSON has no infinities or NaN; those are written as the strings
/// `"inf"`, `"-inf"` and `"nan"` and read back from the same.
pub mod float {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn to_text(x: f64) -> Option<&'static str> {
        if x.is_nan() {
            Some("nan")
        } else if x == f64::INFINITY {
            Some("inf")
        } else if x == f64::NEG_INFINITY {
            Some("-inf")
        } else {
            None
        }
    }

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        match to_text(*x) {
            Some(t) => s.serialize_str(t),
            None => s.serialize_f64(*x),
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(de::Error::custom(format!("expected a number, got {other:?}"))),
            },
        }
    }
}

/// Inequality asserted by a check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `lhs <= slack * rhs`.
    Le,
    /// `lhs >= slack * rhs`.
    Ge,
    /// `lhs == slack * rhs` up to the relative tolerance.
    Eq,
}

impl Direction {
    pub fn symbol(self) -> &'static str {
        match self {
            Direction::Le => "<=",
            Direction::Ge => ">=",
            Direction::Eq => "==",
        }
    }
}

/// One asserted inequality with its measured sides.
///
/// `margin` is the ratio of the two sides oriented so that `margin >= 1`
/// means the inequality holds. Checks aggregated over several instances
/// report the instance with the smallest margin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub section: String,
    pub name: String,
    pub direction: Direction,
    #[serde(with = "float")]
    pub lhs: f64,
    #[serde(with = "float")]
    pub rhs: f64,
    #[serde(with = "float")]
    pub slack: f64,
    #[serde(with = "float")]
    pub margin: f64,
    /// Relative tolerance applied to the comparison.
    #[serde(with = "float")]
    pub tolerance: f64,
    pub instances: usize,
    pub failures: usize,
    pub passed: bool,
    pub expected_fail: bool,
}

impl CheckRecord {
    /// Single comparison `lhs (dir) slack * rhs` up to relative `tolerance`.
    pub fn compare(section: &str, name: &str, direction: Direction, lhs: f64, rhs: f64, slack: f64, tolerance: f64) -> Self {
        let bound = slack * rhs;
        let passed = match direction {
            Direction::Le => lhs <= bound * (1.0 + tolerance) || bound == f64::INFINITY,
            Direction::Ge => lhs * (1.0 + tolerance) >= bound || lhs == f64::INFINITY,
            Direction::Eq => lhs == bound || (lhs - bound).abs() <= tolerance * bound.abs(),
        };
        let margin = match direction {
            Direction::Eq if lhs == bound => f64::INFINITY,
            Direction::Eq => tolerance * bound.abs() / (lhs - bound).abs(),
            _ => margin(direction, lhs, bound),
        };
        Self {
            section: section.into(),
            name: name.into(),
            direction,
            lhs,
            rhs,
            slack,
            margin,
            tolerance,
            instances: 1,
            failures: usize::from(!passed),
            passed,
            expected_fail: false,
        }
    }

    /// Fold several instances into one record keeping the tightest.
    pub fn aggregate(section: &str, name: &str, records: Vec<CheckRecord>) -> Option<Self> {
        let instances = records.len();
        let failures = records.iter().filter(|r| !r.passed).count();
        let mut worst = records.into_iter().reduce(|a, b| if b.margin < a.margin || (b.margin.is_nan() && !a.margin.is_nan()) { b } else { a })?;
        worst.section = section.into();
        worst.name = name.into();
        worst.instances = instances;
        worst.failures = failures;
        worst.passed = failures == 0;
        Some(worst)
    }
}

fn margin(direction: Direction, lhs: f64, bound: f64) -> f64 {
    let (num, den) = match direction {
        Direction::Le => (bound, lhs),
        Direction::Ge | Direction::Eq => (lhs, bound),
    };
    if den == 0.0 {
        if num == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        num / den
    }
}

/// A measured quantity reported alongside the checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measured {
    pub name: String,
    #[serde(with = "float")]
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureSummary {
    pub atoms: usize,
    pub dim: usize,
    #[serde(with = "float")]
    pub mass: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub checks: usize,
    pub passed: usize,
    pub failed: usize,
    pub expected_failures: usize,
    /// Checks tagged as expected to fail that passed.
    pub unexpected_passes: usize,
    /// No check failed other than the expected ones.
    pub ok: bool,
}

impl Summary {
    pub fn of(checks: &[CheckRecord]) -> Self {
        let mut s = Summary { checks: checks.len(), ..Default::default() };
        for c in checks {
            match (c.passed, c.expected_fail) {
                (true, false) => s.passed += 1,
                (false, false) => s.failed += 1,
                (false, true) => s.expected_failures += 1,
                (true, true) => s.unexpected_passes += 1,
            }
        }
        s.ok = s.failed == 0;
        s
    }
}

/// Structured record of one verification run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub name: String,
    pub version: String,
    pub config: Option<ScenarioConfig>,
    pub measure: Option<MeasureSummary>,
    pub measured: Vec<Measured>,
    pub checks: Vec<CheckRecord>,
    pub summary: Summary,
    /// Seconds per check, present only when requested in the config.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<BTreeMap<String, f64>>,
}

impl ScenarioReport {
    pub fn empty(name: &str) -> Self {
        Self {
            name: name.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config: None,
            measure: None,
            measured: Vec::new(),
            checks: Vec::new(),
            summary: Summary::of(&[]),
            timings: None,
        }
    }

    pub fn measured_value(&self, name: &str) -> Option<f64> {
        self.measured.iter().find(|m| m.name == name).map(|m| m.value)
    }

    pub fn check(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Json,
    Csv,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            other => Err(Error::InvalidArgument(format!("unknown report format {other:?}"))),
        }
    }
}

const CSV_HEADER: [&str; 14] = [
    "scenario",
    "section",
    "name",
    "direction",
    "lhs",
    "rhs",
    "slack",
    "margin",
    "tolerance",
    "instances",
    "failures",
    "passed",
    "expected_fail",
    "status",
];

fn cell(x: f64) -> String {
    float::to_text(x).map_or_else(|| x.to_string(), str::to_string)
}

fn status(c: &CheckRecord) -> &'static str {
    match (c.passed, c.expected_fail) {
        (true, false) => "pass",
        (false, false) => "fail",
        (false, true) => "expected_fail",
        (true, true) => "unexpected_pass",
    }
}

/// Flat per-check table over several reports; header only when empty.
pub fn write_csv<W: Write>(reports: &[ScenarioReport], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CSV_HEADER)?;
    for r in reports {
        for c in &r.checks {
            w.write_record([
                r.name.clone(),
                c.section.clone(),
                c.name.clone(),
                c.direction.symbol().into(),
                cell(c.lhs),
                cell(c.rhs),
                cell(c.slack),
                cell(c.margin),
                cell(c.tolerance),
                c.instances.to_string(),
                c.failures.to_string(),
                c.passed.to_string(),
                c.expected_fail.to_string(),
                status(c).into(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Full JSON record (an array when several reports are given) or the flat
/// CSV check table.
pub fn emit_reports(reports: &[ScenarioReport], format: ReportFormat, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    match format {
        ReportFormat::Json => {
            if let [one] = reports {
                serde_json::to_writer_pretty(&mut out, one)?;
            } else {
                serde_json::to_writer_pretty(&mut out, reports)?;
            }
            out.write_all(b"\n")?;
        }
        ReportFormat::Csv => write_csv(reports, &mut out)?,
    }
    out.flush()?;
    Ok(())
}

pub fn emit_report(report: &ScenarioReport, format: ReportFormat, path: &Path) -> Result<()> {
    emit_reports(std::slice::from_ref(report), format, path)
}
