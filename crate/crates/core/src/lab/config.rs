use std::path::PathBuf;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::curvature::FamilySpec;
use crate::error::{Error, Result};
use crate::functionals::{EvalOptions, SetSampler};
use crate::measure::{io, GeneratorSpec, WeightedPointMeasure};

/// Where a scenario's measure comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub struct MeasureSource {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorSpec>,
    /// CSV or JSON point cloud.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    /// Push forward to the first `m` coordinates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub project_to: Option<usize>,
}

impl MeasureSource {
    pub fn generated(spec: GeneratorSpec) -> Self {
        Self { generator: Some(spec), path: None, project_to: None }
    }

    pub fn file(path: impl Into<PathBuf>) -> Self {
        Self { generator: None, path: Some(path.into()), project_to: None }
    }

    pub fn load(&self) -> Result<WeightedPointMeasure> {
        let mu = match (&self.generator, &self.path) {
            (Some(g), None) => g.generate()?,
            (None, Some(p)) => io::load(p)?,
            _ => return Err(Error::InvalidConfig("measure needs exactly one of `generator` or `path`".into())),
        };
        self.project(mu)
    }

    /// Same source with a different atom count; generated sources only.
    pub fn with_count(&self, count: usize) -> Result<Self> {
        let mut g = self
            .generator
            .clone()
            .ok_or_else(|| Error::InvalidConfig("refinement checks need a generated measure".into()))?;
        g.count = count;
        Ok(Self { generator: Some(g), path: None, project_to: self.project_to })
    }

    fn project(&self, mu: WeightedPointMeasure) -> Result<WeightedPointMeasure> {
        match self.project_to {
            None => Ok(mu),
            Some(m) if m == 0 || m > mu.dim() => {
                Err(Error::InvalidConfig(format!("project_to = {m} must lie in 1..={}", mu.dim())))
            }
            Some(m) => mu.pushforward(&DMatrix::from_fn(m, mu.dim(), |r, c| if r == c { 1.0 } else { 0.0 })),
        }
    }
}

fn default_trials() -> usize {
    100
}

fn default_gaussian_forms() -> usize {
    100
}

fn default_layer_cake_forms() -> usize {
    20
}

fn default_cs_families() -> usize {
    50
}

fn default_p() -> f64 {
    1.0
}

fn default_maximal_frames() -> usize {
    8
}

fn default_factor() -> f64 {
    2.0
}

fn default_rel_tol() -> f64 {
    1e-6
}

fn default_growth_factor() -> f64 {
    0.9
}

/// One verification to run against the scenario measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case", deny_unknown_fields)]
pub enum CheckKind {
    /// `I^{c_k delta_hat}(mu, ..., mu) <= C_k eps` over the eps grid.
    Mainst,
    /// Corollary bound with `mu` followed by `others` (k measures in all).
    Maincor {
        #[serde(default)]
        others: Vec<MeasureSource>,
    },
    /// Restricted weak-type probe against the explicit constant.
    Rwt {
        #[serde(default = "default_trials")]
        trials: usize,
        #[serde(default)]
        sampler: SetSampler,
        /// Added to the estimated curvature constant.
        #[serde(default)]
        norm_slack: f64,
    },
    /// Gaussian lower bound and the Gaussian-vs-content bound.
    Gaussian {
        #[serde(default = "default_gaussian_forms")]
        forms: usize,
    },
    LayerCake {
        #[serde(default = "default_layer_cake_forms")]
        forms: usize,
        #[serde(default = "default_rel_tol")]
        rel_tol: f64,
    },
    /// Slab-to-ellipsoid implication over the family grid members.
    Slab,
    /// Family-restricted maximal-function inequality.
    Maximal {
        #[serde(default = "default_p")]
        p: f64,
        /// Frames taken from the front of the family.
        #[serde(default = "default_maximal_frames")]
        frames: usize,
    },
    CauchySchwarz {
        #[serde(default = "default_cs_families")]
        families: usize,
    },
    /// Curvature constants across atom counts stay within `max_factor`.
    Stability {
        counts: Vec<usize>,
        #[serde(default = "default_factor")]
        max_factor: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha: Option<f64>,
    },
    /// The constant grows by at least `min_growth` from the first count
    /// to the last.
    Growth { counts: Vec<usize>, min_growth: f64, alpha: f64 },
    /// Growth as the family floor shrinks by `2^{dj}` from `base_floor`:
    /// at least `factor 2^{k alpha dj}` and, separately, `factor 2^{alpha dj}`.
    Necessity {
        base_floor: f64,
        delta_j: Vec<i32>,
        #[serde(default = "default_growth_factor")]
        factor: f64,
    },
}

/// A check with its expected outcome.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckSpec {
    #[serde(flatten)]
    pub kind: CheckKind,
    /// Names of records that are meant to fail; `"*"` marks all of them.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub expected_fail: Vec<String>,
}

impl CheckSpec {
    pub fn new(kind: CheckKind) -> Self {
        Self { kind, expected_fail: Vec::new() }
    }

    pub fn expecting_failure(mut self, names: &[&str]) -> Self {
        self.expected_fail = names.iter().map(|s| s.to_string()).collect();
        self
    }
}

fn default_eps_grid() -> Vec<f64> {
    vec![0.1, 0.2, 0.4]
}

fn default_refine() -> usize {
    20
}

fn default_slack() -> f64 {
    1.0
}

/// A verification run: measure, parameters and the checks to perform.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub measure: MeasureSource,
    pub k: usize,
    pub alpha: f64,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default = "default_eps_grid")]
    pub eps_grid: Vec<f64>,
    #[serde(default)]
    pub family: FamilySpec,
    /// Local-search steps per curvature search.
    #[serde(default = "default_refine")]
    pub refine: usize,
    #[serde(default)]
    pub eval: EvalOptions,
    #[serde(default)]
    pub seed: u64,
    /// Multiplier on the right side of the sublevel bounds.
    #[serde(default = "default_slack")]
    pub slack: f64,
    #[serde(default)]
    pub checks: Vec<CheckSpec>,
    /// Record wall-clock time per check. Off by default so reports are
    /// byte-reproducible.
    #[serde(default)]
    pub timings: bool,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.k == 0 {
            return bad("k must be >= 1".into());
        }
        if !(self.alpha > 0.0) {
            return bad("alpha must be positive".into());
        }
        if self.eps_grid.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
            return bad("eps_grid values must lie in (0, 1]".into());
        }
        if self.eps_grid.windows(2).any(|w| w[0] > w[1]) {
            return bad("eps_grid must be sorted ascending".into());
        }
        if !(self.slack > 0.0) {
            return bad("slack must be positive".into());
        }
        for c in &self.checks {
            match &c.kind {
                CheckKind::Rwt { trials, .. } => {
                    if !(self.gamma > 0.0 && self.gamma < self.alpha) {
                        return bad(format!("rwt needs 0 < gamma < alpha, got gamma={} alpha={}", self.gamma, self.alpha));
                    }
                    if *trials == 0 {
                        return bad("rwt needs at least one trial".into());
                    }
                }
                CheckKind::Maincor { others } if others.len() + 1 != self.k && !others.is_empty() => {
                    return bad(format!("maincor needs {} other measures, got {}", self.k - 1, others.len()));
                }
                CheckKind::Stability { counts, .. } | CheckKind::Growth { counts, .. } if counts.len() < 2 => {
                    return bad("refinement checks need at least two counts".into());
                }
                CheckKind::Necessity { base_floor, delta_j, .. } if !(*base_floor > 0.0) || delta_j.is_empty() => {
                    return bad("necessity needs a positive base_floor and at least one delta_j".into());
                }
                CheckKind::Maximal { p, frames } if !(*p > 0.0) || *frames == 0 => {
                    return bad("maximal needs p > 0 and at least one frame".into());
                }
                _ => {}
            }
        }
        Ok(())
    }
}
