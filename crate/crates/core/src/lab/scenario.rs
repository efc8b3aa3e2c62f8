use std::collections::BTreeMap;
use std::time::Instant;

use super::config::{CheckKind, CheckSpec, MeasureSource, ScenarioConfig};
use super::report::{MeasureSummary, ScenarioReport, Summary};
use super::verify::{self, RwtParams, Section};
use crate::curvature::{estimate_curvature_constant, FamilySpec};
use crate::error::{Error, Result};
use crate::measure::{CubeSampler, Family, GeneratorSpec, WeightedPointMeasure};

fn section_name(kind: &CheckKind) -> &'static str {
    match kind {
        CheckKind::Mainst => "mainst",
        CheckKind::Maincor { .. } => "maincor",
        CheckKind::Rwt { .. } => "rwt",
        CheckKind::Gaussian { .. } => "gaussian",
        CheckKind::LayerCake { .. } => "layer_cake",
        CheckKind::Slab => "slab",
        CheckKind::Maximal { .. } => "maximal",
        CheckKind::CauchySchwarz { .. } => "cauchy_schwarz",
        CheckKind::Stability { .. } => "stability",
        CheckKind::Growth { .. } => "growth",
        CheckKind::Necessity { .. } => "necessity",
    }
}

fn run_check(cfg: &ScenarioConfig, mu: &WeightedPointMeasure, spec: &CheckSpec) -> Result<Section> {
    let k = cfg.k;
    let family = || cfg.family.build(mu);
    match &spec.kind {
        CheckKind::Mainst => verify::verify_mainst(mu, k, &cfg.eps_grid, &family()?, cfg.refine, cfg.slack, &cfg.eval),
        CheckKind::Maincor { others } => {
            let others: Vec<WeightedPointMeasure> = if others.is_empty() {
                vec![mu.clone(); k - 1]
            } else {
                others.iter().map(MeasureSource::load).collect::<Result<_>>()?
            };
            let mut mus = vec![mu];
            mus.extend(others.iter());
            let families = mus.iter().map(|m| cfg.family.build(m)).collect::<Result<Vec<_>>>()?;
            verify::verify_maincor(&mus, &cfg.eps_grid, &families, cfg.refine, cfg.slack, &cfg.eval)
        }
        CheckKind::Rwt { trials, sampler, norm_slack } => {
            let p = RwtParams {
                k,
                gamma: cfg.gamma,
                alpha: cfg.alpha,
                trials: *trials,
                seed: cfg.seed,
                sampler,
                norm_slack: *norm_slack,
                refine: cfg.refine,
            };
            verify::verify_rwt(mu, &family()?, &p, &cfg.eval)
        }
        CheckKind::Gaussian { forms } => verify::verify_gaussian(mu, k, cfg.alpha, *forms, cfg.seed),
        CheckKind::LayerCake { forms, rel_tol } => verify::verify_layer_cake(mu, *forms, *rel_tol, cfg.seed),
        CheckKind::Slab => verify::verify_slab(mu, k, cfg.alpha, &family()?),
        CheckKind::Maximal { p, frames } => verify::verify_maximal(mu, k, cfg.alpha, *p, &family()?, *frames),
        CheckKind::CauchySchwarz { families } => {
            let gamma = if cfg.gamma > 0.0 { cfg.gamma } else { 0.5 };
            verify::verify_cauchy_schwarz(mu, k, gamma, *families, cfg.seed, &cfg.eval)
        }
        CheckKind::Stability { counts, max_factor, alpha } => verify::verify_stability(
            &cfg.measure,
            counts,
            &cfg.family,
            k,
            alpha.unwrap_or(cfg.alpha),
            cfg.refine,
            *max_factor,
        ),
        CheckKind::Growth { counts, min_growth, alpha } => {
            verify::verify_growth(&cfg.measure, counts, &cfg.family, k, *alpha, cfg.refine, *min_growth)
        }
        CheckKind::Necessity { base_floor, delta_j, factor } => {
            verify::verify_necessity(mu, &cfg.family, k, cfg.alpha, cfg.refine, *base_floor, delta_j, *factor)
        }
    }
}

/// Load or generate the measure, run every configured check and collect
/// the report. Checks named in a spec's `expected_fail` are tagged so that
/// their failure does not count against the scenario.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioReport> {
    cfg.validate()?;
    let mu = cfg.measure.load()?;
    if cfg.k > mu.dim() {
        return Err(Error::InvalidConfig(format!("k = {} exceeds the measure dimension {}", cfg.k, mu.dim())));
    }
    let mut report = ScenarioReport::empty(&cfg.name);
    report.config = Some(cfg.clone());
    report.measure = Some(MeasureSummary { atoms: mu.len(), dim: mu.dim(), mass: mu.total_mass() });
    let mut timings = BTreeMap::new();

    let start = cfg.timings.then(Instant::now);
    let family = cfg.family.build(&mu)?;
    let est = estimate_curvature_constant(&mu, cfg.k, cfg.alpha, &family, cfg.refine)?;
    report.measured.push(super::report::Measured { name: "curvature_constant".into(), value: est.constant });
    report.measured.push(super::report::Measured { name: "family_size".into(), value: est.family_size as f64 });
    if let Some(t) = start {
        timings.insert("curvature_constant".to_string(), t.elapsed().as_secs_f64());
    }

    for (i, spec) in cfg.checks.iter().enumerate() {
        let start = cfg.timings.then(Instant::now);
        let mut section = run_check(cfg, &mu, spec)?;
        for c in &mut section.checks {
            c.expected_fail = spec.expected_fail.iter().any(|n| n == "*" || *n == c.name);
        }
        report.checks.extend(section.checks);
        report.measured.extend(section.measured);
        if let Some(t) = start {
            timings.insert(format!("{i:02}_{}", section_name(&spec.kind)), t.elapsed().as_secs_f64());
        }
    }
    report.summary = Summary::of(&report.checks);
    if cfg.timings {
        report.timings = Some(timings);
    }
    Ok(report)
}

/// Names of the scenarios shipped with the library.
pub const BUNDLED: [&str; 3] = ["lebesgue-cube-d2-k2", "flat-subspace-negative", "sphere-pushforward-d3"];

fn base(name: &str, measure: MeasureSource, k: usize, alpha: f64) -> ScenarioConfig {
    ScenarioConfig {
        name: name.into(),
        measure,
        k,
        alpha,
        gamma: 0.0,
        eps_grid: vec![0.1, 0.2, 0.4],
        family: FamilySpec::default(),
        refine: 20,
        eval: Default::default(),
        seed: 0,
        slack: 1.0,
        checks: Vec::new(),
        timings: false,
    }
}

/// A bundled scenario by name.
pub fn bundled(name: &str) -> Option<ScenarioConfig> {
    let cube = |n: usize| GeneratorSpec {
        family: Family::CubeLebesgue { sampler: CubeSampler::Grid, centered: false },
        dim: 2,
        count: n * n,
        seed: 0,
    };
    let cfg = match name {
        "lebesgue-cube-d2-k2" => {
            let mut c = base(name, MeasureSource::generated(cube(24)), 2, 1.0);
            c.gamma = 0.5;
            let circle = MeasureSource::generated(GeneratorSpec::sphere(2, 240, 1));
            c.checks = vec![
                CheckSpec::new(CheckKind::Mainst),
                CheckSpec::new(CheckKind::Maincor { others: vec![circle] }),
                CheckSpec::new(CheckKind::Rwt { trials: 100, sampler: Default::default(), norm_slack: 0.0 }),
                CheckSpec::new(CheckKind::Gaussian { forms: 100 }),
                CheckSpec::new(CheckKind::LayerCake { forms: 20, rel_tol: 1e-6 }),
                CheckSpec::new(CheckKind::Slab),
                CheckSpec::new(CheckKind::Maximal { p: 1.0, frames: 8 }),
                CheckSpec::new(CheckKind::CauchySchwarz { families: 50 }),
                CheckSpec::new(CheckKind::Stability { counts: vec![256, 1024], max_factor: 2.0, alpha: None }),
                CheckSpec::new(CheckKind::Growth { counts: vec![256, 1024], min_growth: 1.3, alpha: 1.25 }),
            ];
            c
        }
        "flat-subspace-negative" => {
            let line = GeneratorSpec { family: Family::SubspaceLebesgue { m: 1, centered: false }, dim: 2, count: 4096, seed: 0 };
            let mut c = base(name, MeasureSource::generated(line), 2, 1.0);
            c.family.random_frames = 16;
            c.checks = vec![
                CheckSpec::new(CheckKind::Necessity { base_floor: 1.0 / 16.0, delta_j: vec![1, 2, 3], factor: 0.9 })
                    .expecting_failure(&["necessity[dj=1]", "necessity[dj=2]", "necessity[dj=3]"]),
                CheckSpec::new(CheckKind::Stability { counts: vec![1024, 4096], max_factor: 2.0, alpha: None })
                    .expecting_failure(&["*"]),
            ];
            c
        }
        "sphere-pushforward-d3" => {
            let mut src = MeasureSource::generated(GeneratorSpec::sphere(3, 2000, 3));
            src.project_to = Some(2);
            let mut c = base(name, src, 2, 1.0);
            c.checks = vec![
                CheckSpec::new(CheckKind::Stability { counts: vec![500, 2000], max_factor: 2.0, alpha: None }),
                CheckSpec::new(CheckKind::Gaussian { forms: 50 }),
                CheckSpec::new(CheckKind::LayerCake { forms: 20, rel_tol: 1e-6 }),
            ];
            c
        }
        _ => return None,
    };
    Some(cfg)
}
