use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::MeasureSource;
use super::report::{CheckRecord, Direction, Measured};
use crate::curvature::{
    estimate_curvature_constant, gaussian_content_check, gaussian_integral, layer_cake_check, maximal_inequality,
    min_content_at_mass, slab_implication, EllipsoidFamily, FamilyMode, FamilySpec,
};
use crate::error::{invalid, Result};
use crate::functionals::constants::{big_c_k, c_k, corollary_constant, rwt_constant};
use crate::functionals::{cauchy_schwarz_check, rwt_probe, EvalOptions, SetSampler, SublevelTable};
use crate::measure::WeightedPointMeasure;

/// Exact comparisons still get a few ulps of room for summation order.
const EXACT_TOL: f64 = 1e-12;

/// Checks and measured values produced by one driver.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Section {
    pub checks: Vec<CheckRecord>,
    pub measured: Vec<Measured>,
}

impl Section {
    fn measure(&mut self, name: impl Into<String>, value: f64) {
        self.measured.push(Measured { name: name.into(), value });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Main theorem: for each `eps`, `delta_hat = min_content_at_mass(mu, k, eps)`
/// and `I^{c_k delta_hat}(mu, ..., mu) <= slack C_k eps`.
///
/// `delta_hat` over-estimates the true infimum, which can only make the
/// check fail; `slack` (default 1) is the room given to that gap.
pub fn verify_mainst(
    mu: &WeightedPointMeasure,
    k: usize,
    eps_grid: &[f64],
    family: &EllipsoidFamily,
    refine: usize,
    slack: f64,
    opts: &EvalOptions,
) -> Result<Section> {
    let mut s = Section::default();
    if k >= 2 {
        s.checks.push(CheckRecord::compare(
            "mainst",
            "c_k_recursion",
            Direction::Eq,
            c_k(k),
            2f64.powi(-(k as i32)) * c_k(k - 1),
            1.0,
            EXACT_TOL,
        ));
    }
    let mus = vec![mu; k];
    let table = SublevelTable::build(&mus, opts)?;
    s.measure("excluded_mass", table.excluded_mass());
    for &eps in eps_grid {
        let w = min_content_at_mass(mu, k, eps, family, refine)?;
        let delta = c_k(k) * w.delta_hat;
        let value = table.query(delta);
        s.measure(format!("delta_hat[eps={eps}]"), w.delta_hat);
        s.measure(format!("sublevel[eps={eps}]"), value);
        s.checks.push(CheckRecord::compare(
            "mainst",
            &format!("sublevel[eps={eps}]"),
            Direction::Le,
            value,
            big_c_k(k) * eps,
            slack,
            EXACT_TOL,
        ));
    }
    Ok(s)
}

/// Corollary: `a_i = delta_hat_i^{1/k}` and
/// `I^{c_k a_1 ... a_k}(mu_1, ..., mu_k) <= slack (k^k/k!) C_k eps`.
pub fn verify_maincor(
    mus: &[&WeightedPointMeasure],
    eps_grid: &[f64],
    families: &[EllipsoidFamily],
    refine: usize,
    slack: f64,
    opts: &EvalOptions,
) -> Result<Section> {
    let k = mus.len();
    if k == 0 || families.len() != k {
        return Err(invalid("maincor needs one family per measure"));
    }
    let mut s = Section::default();
    let table = SublevelTable::build(mus, opts)?;
    for &eps in eps_grid {
        let mut delta = c_k(k);
        for (mu, family) in mus.iter().zip(families) {
            delta *= min_content_at_mass(mu, k, eps, family, refine)?.delta_hat.powf(1.0 / k as f64);
        }
        let value = table.query(delta);
        s.measure(format!("corollary_delta[eps={eps}]"), delta);
        s.measure(format!("corollary_sublevel[eps={eps}]"), value);
        s.checks.push(CheckRecord::compare(
            "maincor",
            &format!("corollary[eps={eps}]"),
            Direction::Le,
            value,
            corollary_constant(k) * eps,
            slack,
            EXACT_TOL,
        ));
    }
    Ok(s)
}

/// Parameters of the restricted weak-type probe.
#[derive(Clone, Debug)]
pub struct RwtParams<'a> {
    pub k: usize,
    pub gamma: f64,
    pub alpha: f64,
    pub trials: usize,
    pub seed: u64,
    pub sampler: &'a SetSampler,
    /// Added to the estimated curvature constant, which is a lower bound.
    pub norm_slack: f64,
    pub refine: usize,
}

/// Empirical restricted weak-type supremum against
/// `C_{k,alpha,gamma} (||mu||_0 + slack)^{gamma/alpha}`.
pub fn verify_rwt(mu: &WeightedPointMeasure, family: &EllipsoidFamily, p: &RwtParams<'_>, opts: &EvalOptions) -> Result<Section> {
    let mut s = Section::default();
    let norm = estimate_curvature_constant(mu, p.k, p.alpha, family, p.refine)?.constant;
    let constant = rwt_constant(p.k, p.alpha, p.gamma);
    let probe = rwt_probe(mu, p.k, p.gamma, p.alpha, p.sampler, p.trials, p.seed, opts)?;
    s.measure("rwt_constant", constant);
    s.measure("rwt_curvature_constant", norm);
    s.measure("rwt_sup_ratio", probe.sup_ratio);
    s.measure("rwt_witness_trial", probe.witness_trial as f64);
    s.checks.push(CheckRecord::compare(
        "rwt",
        "rwt_bound",
        Direction::Le,
        probe.sup_ratio,
        constant * (norm + p.norm_slack).powf(p.gamma / p.alpha),
        1.0,
        EXACT_TOL,
    ));
    Ok(s)
}

/// `Q = s G / r` with `G` uniform in `[-1,1]^{d x d}`, `s` log-uniform in
/// `[1/4, 8]` and `r` the cloud radius.
pub fn random_form(d: usize, radius: f64, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let scale = 2f64.powf(rng.random_range(-2.0..3.0)) / radius.max(f64::MIN_POSITIVE);
    DMatrix::from_fn(d, d, |_, _| scale * rng.random_range(-1.0..1.0))
}

fn forms(mu: &WeightedPointMeasure, count: usize, seed: u64, stream: u64) -> Vec<DMatrix<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    (0..count).map(|_| random_form(mu.dim(), mu.max_norm(), &mut rng)).collect()
}

/// Gaussian lower bound `e^{-1} mu(|Qx| <= 1) <= int e^{-|Qx|^2}` and the
/// bound by the dyadic-dilate curvature constant times `|Q|_k^alpha`.
pub fn verify_gaussian(mu: &WeightedPointMeasure, k: usize, alpha: f64, count: usize, seed: u64) -> Result<Section> {
    let mut s = Section::default();
    let mut lower = Vec::with_capacity(count);
    let mut content = Vec::with_capacity(count);
    for q in forms(mu, count, seed, 7) {
        let g = gaussian_integral(mu, &q, &vec![0.0; q.nrows()])?;
        let inside = mu.eval(|p| (&q * DVector::from_column_slice(p)).norm_squared() <= 1.0);
        lower.push(CheckRecord::compare("gaussian", "", Direction::Le, (-1f64).exp() * inside, g, 1.0, 0.0));
        let c = gaussian_content_check(mu, &q, k, alpha)?;
        content.push(CheckRecord::compare("gaussian", "", Direction::Le, c.lhs, c.bound, 1.0, EXACT_TOL));
    }
    s.checks.extend(CheckRecord::aggregate("gaussian", "gaussian_lower_bound", lower));
    s.checks.extend(CheckRecord::aggregate("gaussian", "gaussian_content_bound", content));
    Ok(s)
}

pub fn verify_layer_cake(mu: &WeightedPointMeasure, count: usize, rel_tol: f64, seed: u64) -> Result<Section> {
    let mut s = Section::default();
    let mut recs = Vec::with_capacity(count);
    let mut worst_squared: f64 = 0.0;
    for q in forms(mu, count, seed, 8) {
        let lc = layer_cake_check(mu, &q)?;
        recs.push(CheckRecord::compare("layer_cake", "", Direction::Le, lc.rel_err, rel_tol, 1.0, 0.0));
        if lc.lhs > 0.0 {
            worst_squared = worst_squared.max((lc.lhs - lc.squared_set_rhs).abs() / lc.lhs);
        }
    }
    s.checks.extend(CheckRecord::aggregate("layer_cake", "layer_cake_rel_err", recs));
    s.measure("layer_cake_squared_set_rel_err", worst_squared);
    Ok(s)
}

pub fn verify_slab(mu: &WeightedPointMeasure, k: usize, alpha: f64, family: &EllipsoidFamily) -> Result<Section> {
    let mut s = Section::default();
    let members = family.members();
    let r = slab_implication(mu, k, alpha, &members)?;
    s.measure("slab_constant", r.c_slab);
    s.measure("slab_members", r.checked as f64);
    let mut rec = CheckRecord::compare("slab", "slab_implication", Direction::Le, r.worst, 1.0, 1.0, 1e-9);
    rec.instances = r.checked;
    rec.failures = r.violations;
    rec.passed = r.violations == 0;
    s.checks.push(rec);
    let mut content = CheckRecord::compare("slab", "slab_content", Direction::Le, 0.0, 1.0, 1.0, 0.0);
    content.passed = r.content_ok;
    content.failures = usize::from(!r.content_ok);
    s.checks.push(content);
    Ok(s)
}

/// Maximal inequality over a doubling family built on the first `frames`
/// frames of `family`.
pub fn verify_maximal(
    mu: &WeightedPointMeasure,
    k: usize,
    alpha: f64,
    p: f64,
    family: &EllipsoidFamily,
    frames: usize,
) -> Result<Section> {
    let mut s = Section::default();
    let (j_min, j_max) = family.j_range();
    let frames = family.frames()[..frames.min(family.frames().len())].to_vec();
    let doubling = EllipsoidFamily::new(FamilyMode::DoublingDyadic, frames, j_min, j_max, family.floor())?;
    let m = maximal_inequality(mu, k, alpha, p, &doubling)?;
    s.measure("maximal_weak_norm", m.weak_norm);
    s.checks.push(CheckRecord::compare("maximal", "maximal_inequality", Direction::Le, m.lhs, m.rhs, 1.0, EXACT_TOL));
    Ok(s)
}

pub fn verify_cauchy_schwarz(
    mu: &WeightedPointMeasure,
    k: usize,
    gamma: f64,
    families: usize,
    seed: u64,
    opts: &EvalOptions,
) -> Result<Section> {
    let mut s = Section::default();
    let sampler = SetSampler::default();
    let mut recs = Vec::with_capacity(families);
    for t in 0..families {
        let (_, sets) = sampler.draw_family(mu, k, t, seed);
        if sets.iter().any(|set| set.is_empty()) {
            continue;
        }
        let cs = cauchy_schwarz_check(mu, k, gamma, &sets, opts)?;
        recs.push(CheckRecord::compare("cauchy_schwarz", "", Direction::Le, cs.lhs, cs.rhs, 1.0, EXACT_TOL));
    }
    s.checks.extend(CheckRecord::aggregate("cauchy_schwarz", "cauchy_schwarz", recs));
    Ok(s)
}

fn constant_at(source: &MeasureSource, count: usize, spec: &FamilySpec, k: usize, alpha: f64, refine: usize) -> Result<f64> {
    let mu = source.with_count(count)?.load()?;
    let family = spec.build(&mu)?;
    Ok(estimate_curvature_constant(&mu, k, alpha, &family, refine)?.constant)
}

/// The curvature constant, re-estimated on refinements of the measure,
/// varies by at most `max_factor`.
pub fn verify_stability(
    source: &MeasureSource,
    counts: &[usize],
    spec: &FamilySpec,
    k: usize,
    alpha: f64,
    refine: usize,
    max_factor: f64,
) -> Result<Section> {
    let mut s = Section::default();
    let mut values = Vec::with_capacity(counts.len());
    for &n in counts {
        let c = constant_at(source, n, spec, k, alpha, refine)?;
        s.measure(format!("constant[alpha={alpha},n={n}]"), c);
        values.push(c);
    }
    let hi = values.iter().copied().fold(0.0, f64::max);
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    s.checks.push(CheckRecord::compare(
        "stability",
        &format!("stability[alpha={alpha}]"),
        Direction::Le,
        hi / lo,
        max_factor,
        1.0,
        0.0,
    ));
    Ok(s)
}

/// The constant grows by at least `min_growth` from the first count to the last.
pub fn verify_growth(
    source: &MeasureSource,
    counts: &[usize],
    spec: &FamilySpec,
    k: usize,
    alpha: f64,
    refine: usize,
    min_growth: f64,
) -> Result<Section> {
    let mut s = Section::default();
    let first = constant_at(source, counts[0], spec, k, alpha, refine)?;
    let last = constant_at(source, counts[counts.len() - 1], spec, k, alpha, refine)?;
    s.measure(format!("constant[alpha={alpha},n={}]", counts[0]), first);
    s.measure(format!("constant[alpha={alpha},n={}]", counts[counts.len() - 1]), last);
    s.checks.push(CheckRecord::compare("growth", &format!("growth[alpha={alpha}]"), Direction::Ge, last / first, min_growth, 1.0, 0.0));
    Ok(s)
}

/// Growth of the curvature constant as the family floor shrinks from
/// `base_floor` by `2^{dj}`. Two rows per `dj`: the rate `2^{k alpha dj}`
/// and the transverse-only rate `2^{alpha dj}`, each scaled by `factor`.
#[allow(clippy::too_many_arguments)]
pub fn verify_necessity(
    mu: &WeightedPointMeasure,
    spec: &FamilySpec,
    k: usize,
    alpha: f64,
    refine: usize,
    base_floor: f64,
    delta_j: &[i32],
    factor: f64,
) -> Result<Section> {
    let mut s = Section::default();
    let at = |floor: f64| -> Result<f64> {
        let family = FamilySpec { floor: Some(floor), j_min: None, ..spec.clone() }.build(mu)?;
        Ok(estimate_curvature_constant(mu, k, alpha, &family, refine)?.constant)
    };
    let base = at(base_floor)?;
    s.measure("necessity_base", base);
    for &dj in delta_j {
        let c = at(base_floor * 2f64.powi(-dj))?;
        let growth = c / base;
        s.measure(format!("necessity_growth[dj={dj}]"), growth);
        let kad = k as f64 * alpha * dj as f64;
        s.checks.push(CheckRecord::compare("necessity", &format!("necessity[dj={dj}]"), Direction::Ge, growth, 2f64.powf(kad), factor, 0.0));
        s.checks.push(CheckRecord::compare(
            "necessity",
            &format!("necessity_transverse[dj={dj}]"),
            Direction::Ge,
            growth,
            2f64.powf(alpha * dj as f64),
            factor,
            0.0,
        ));
    }
    Ok(s)
}
