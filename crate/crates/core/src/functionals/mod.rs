//! Exact and sampled evaluation of the determinant functionals.
//!
//! `T^{-gamma}` integrates `prod f_j(y_j) det(y_1, ..., y_{k+1})^{-gamma}`
//! against `mu^{k+1}`; the tilde variant pins the last vertex at the origin.
//! Tuples whose determinant does not exceed `tau_det` are excluded and
//! counted, which is the discrete stand-in for almost-everywhere
//! nondegeneracy. A negative `gamma` gives the positive-power functional.
//!
//! Enumeration is split by the first index; each slice is reduced
//! sequentially with compensated sums and the slices are merged in index
//! order, so results are bit-identical for any thread count.

pub mod constants;
mod dyadic;
mod monte_carlo;
mod rwt;

pub use dyadic::{DyadicProfile, SeriesBound};
pub use monte_carlo::monte_carlo_t;
pub use rwt::{rwt_probe, t_tilde_on_sets, RwtProbe, SetSampler, SetShape};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{binomial, factorial, DetKernel};
use crate::measure::{WeightedPointMeasure, MASS_TOL};
use crate::par;
use crate::sum::Accumulator;

/// Exact-mode tuple budget.
pub const DEFAULT_BUDGET: u64 = 10_000_000;

/// `tau_det = TAU_REL * scale^k` with `scale` the largest atom norm.
pub const TAU_REL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalOptions {
    /// Degeneracy threshold; `None` uses `TAU_REL * scale^k`.
    pub tau: Option<f64>,
    pub budget: u64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self { tau: None, budget: DEFAULT_BUDGET }
    }
}

impl EvalOptions {
    pub(crate) fn tau_for(&self, scale: f64, k: usize) -> f64 {
        self.tau.unwrap_or_else(|| TAU_REL * scale.powi(k as i32))
    }
}

/// Value of a functional with its tuple bookkeeping.
///
/// `tuples_total` counts the tuples in the support of `prod f_j`; atoms
/// where some `f_j` vanishes are never visited.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionalResult {
    pub value: f64,
    pub tuples_total: u64,
    pub tuples_excluded: u64,
    /// `sum prod f_j w_j` over excluded tuples.
    pub excluded_mass: f64,
    /// Standard error, sampled mode only.
    pub stderr: Option<f64>,
}

/// Per-slot atoms with their effective weights `f(i) w_i`.
pub(crate) struct Slot<'a> {
    pub pts: Vec<&'a [f64]>,
    pub w: Vec<f64>,
}

impl<'a> Slot<'a> {
    pub fn new(mu: &'a WeightedPointMeasure, f: Option<&[f64]>) -> Self {
        let mut pts = Vec::with_capacity(mu.len());
        let mut w = Vec::with_capacity(mu.len());
        for i in 0..mu.len() {
            let wi = mu.weight(i) * f.map_or(1.0, |f| f[i]);
            if wi != 0.0 {
                pts.push(mu.point(i));
                w.push(wi);
            }
        }
        Self { pts, w }
    }

    pub fn from_indices(mu: &'a WeightedPointMeasure, indices: &[usize]) -> Self {
        let mut pts = Vec::with_capacity(indices.len());
        let mut w = Vec::with_capacity(indices.len());
        for &i in indices {
            if mu.weight(i) != 0.0 {
                pts.push(mu.point(i));
                w.push(mu.weight(i));
            }
        }
        Self { pts, w }
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    fn mass(&self) -> f64 {
        self.w.iter().copied().collect::<Accumulator>().value()
    }
}

/// Consumer of `(det, weight, multiplicity)` triples.
pub(crate) trait TupleSink: Send {
    fn push(&mut self, det: f64, weight: f64, count: u64);
    fn merge(&mut self, other: Self);
}

/// Visit every tuple of the product of `slots`. With `pinned` the
/// determinant is `det(0, y_1, ..., y_m)`, otherwise `det(y_1, ..., y_m)`.
pub(crate) fn for_each_tuple<S, F>(slots: &[Slot<'_>], dim: usize, pinned: bool, make: F) -> S
where
    S: TupleSink,
    F: Fn() -> S + Sync + Send,
{
    let m = slots.len();
    let k = if pinned { m } else { m - 1 };
    if slots.iter().any(|s| s.len() == 0) {
        return make();
    }
    let partials = par::map_range(slots[0].len(), |i0| {
        let mut sink = make();
        let mut kern = DetKernel::new(dim, k);
        let mut diffs = Vec::with_capacity(k * dim);
        let mut idx = vec![0usize; m];
        idx[0] = i0;
        let mut pts: Vec<&[f64]> = vec![slots[0].pts[i0]; m];
        loop {
            let mut w = slots[0].w[i0];
            for j in 1..m {
                pts[j] = slots[j].pts[idx[j]];
                w *= slots[j].w[idx[j]];
            }
            let det = if pinned {
                let p = &pts;
                kern.origin_det_with(m, |j| p[j])
            } else {
                kern.simplex_det(&pts, &mut diffs)
            };
            sink.push(det, w, 1);
            let mut j = m - 1;
            loop {
                if j == 0 {
                    return sink;
                }
                idx[j] += 1;
                if idx[j] < slots[j].len() {
                    break;
                }
                idx[j] = 0;
                j -= 1;
            }
        }
    });
    reduce(partials, make)
}

/// Visit strictly increasing index tuples of one slot taken `m` times, each
/// standing for its `m!` permutations. Tuples with a repeated index are
/// degenerate and skipped; callers account for them.
pub(crate) fn for_each_sorted_tuple<S, F>(slot: &Slot<'_>, m: usize, dim: usize, pinned: bool, make: F) -> S
where
    S: TupleSink,
    F: Fn() -> S + Sync + Send,
{
    let n = slot.len();
    let k = if pinned { m } else { m - 1 };
    let mult = factorial(m);
    let count = mult as u64;
    if n < m {
        return make();
    }
    let partials = par::map_range(n - m + 1, |i0| {
        let mut sink = make();
        let mut kern = DetKernel::new(dim, k);
        let mut diffs = Vec::with_capacity(k * dim);
        let mut idx: Vec<usize> = (0..m).map(|j| i0 + j).collect();
        let mut pts: Vec<&[f64]> = vec![slot.pts[i0]; m];
        loop {
            let mut w = mult * slot.w[i0];
            for j in 1..m {
                pts[j] = slot.pts[idx[j]];
                w *= slot.w[idx[j]];
            }
            let det = if pinned {
                let p = &pts;
                kern.origin_det_with(m, |j| p[j])
            } else {
                kern.simplex_det(&pts, &mut diffs)
            };
            sink.push(det, w, count);
            let mut j = m - 1;
            loop {
                if j == 0 {
                    return sink;
                }
                idx[j] += 1;
                if idx[j] <= n - m + j {
                    for t in j + 1..m {
                        idx[t] = idx[t - 1] + 1;
                    }
                    break;
                }
                j -= 1;
            }
        }
    });
    reduce(partials, make)
}

fn reduce<S: TupleSink>(partials: Vec<S>, make: impl Fn() -> S) -> S {
    let mut total = make();
    for p in partials {
        total.merge(p);
    }
    total
}

/// Sink for `sum w det^{-gamma}` over included tuples.
pub(crate) struct KernelSink {
    tau: f64,
    gamma: f64,
    value: Accumulator,
    included_mass: Accumulator,
    excluded_mass: Accumulator,
    total: u64,
    excluded: u64,
}

impl KernelSink {
    pub fn new(tau: f64, gamma: f64) -> Self {
        Self {
            tau,
            gamma,
            value: Accumulator::new(),
            included_mass: Accumulator::new(),
            excluded_mass: Accumulator::new(),
            total: 0,
            excluded: 0,
        }
    }
}

impl TupleSink for KernelSink {
    #[inline]
    fn push(&mut self, det: f64, weight: f64, count: u64) {
        self.total += count;
        if det > self.tau {
            let kernel = if self.gamma == 0.0 { 1.0 } else { det.powf(-self.gamma) };
            self.value.add(weight * kernel);
            self.included_mass.add(weight);
        } else {
            self.excluded += count;
            self.excluded_mass.add(weight);
        }
    }

    fn merge(&mut self, other: Self) {
        self.value.merge(&other.value);
        self.included_mass.merge(&other.included_mass);
        self.excluded_mass.merge(&other.excluded_mass);
        self.total += other.total;
        self.excluded += other.excluded;
    }
}

fn check_budget(tuples: u128, budget: u64) -> Result<()> {
    if tuples > budget as u128 {
        Err(Error::BudgetExceeded { tuples, budget })
    } else {
        Ok(())
    }
}

fn check_weight_vectors(mu: &WeightedPointMeasure, fs: &[&[f64]], expected: usize) -> Result<()> {
    if fs.len() != expected {
        return Err(invalid(format!("expected {expected} weight vectors, got {}", fs.len())));
    }
    for f in fs {
        if f.len() != mu.len() {
            return Err(Error::DimensionMismatch { expected: mu.len(), got: f.len() });
        }
        if f.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(invalid("weight vectors must be finite and nonnegative"));
        }
    }
    Ok(())
}

fn all_same(fs: &[&[f64]]) -> bool {
    fs.windows(2).all(|p| p[0] == p[1])
}

fn evaluate(
    mu: &WeightedPointMeasure,
    k: usize,
    gamma: f64,
    fs: &[&[f64]],
    pinned: bool,
    opts: &EvalOptions,
) -> Result<FunctionalResult> {
    if k == 0 {
        return Err(invalid("k must be >= 1"));
    }
    if !gamma.is_finite() {
        return Err(invalid("gamma must be finite"));
    }
    let m = if pinned { k } else { k + 1 };
    check_weight_vectors(mu, fs, m)?;
    let tau = opts.tau_for(mu.max_norm(), k);
    let slots: Vec<Slot<'_>> = fs.iter().map(|f| Slot::new(mu, Some(f))).collect();
    let tuples: u128 = slots.iter().map(|s| s.len() as u128).product();
    check_budget(tuples, opts.budget)?;

    let sink = if all_same(fs) && m > 1 {
        let slot = &slots[0];
        let mut sink = for_each_sorted_tuple(slot, m, mu.dim(), pinned, || KernelSink::new(tau, gamma));
        // Tuples with a repeated index: degenerate by construction.
        let n = slot.len();
        let full = (n as u128).pow(m as u32) as u64;
        let distinct = (factorial(m) * binomial(n, m)).round() as u64;
        sink.total += full - distinct;
        sink.excluded += full - distinct;
        let product_mass = slot.mass().powi(m as i32);
        sink.excluded_mass = Accumulator::new();
        sink.excluded_mass.add(product_mass - sink.included_mass.value());
        sink
    } else {
        for_each_tuple(&slots, mu.dim(), pinned, || KernelSink::new(tau, gamma))
    };
    Ok(FunctionalResult {
        value: sink.value.value(),
        tuples_total: sink.total,
        tuples_excluded: sink.excluded,
        excluded_mass: sink.excluded_mass.value().max(0.0),
        stderr: None,
    })
}

/// `T^{-gamma}_{mu,k}(f_1, ..., f_{k+1})` by exact enumeration.
pub fn evaluate_t(
    mu: &WeightedPointMeasure,
    k: usize,
    gamma: f64,
    fs: &[&[f64]],
    opts: &EvalOptions,
) -> Result<FunctionalResult> {
    evaluate(mu, k, gamma, fs, false, opts)
}

/// `T~^{-gamma}_{mu,k}(f_1, ..., f_k)`: the last vertex pinned at the origin.
pub fn evaluate_t_tilde(
    mu: &WeightedPointMeasure,
    k: usize,
    gamma: f64,
    fs: &[&[f64]],
    opts: &EvalOptions,
) -> Result<FunctionalResult> {
    evaluate(mu, k, gamma, fs, true, opts)
}

/// Characteristic function of an index set as a weight vector.
pub fn indicator(n: usize, indices: &[usize]) -> Vec<f64> {
    let mut f = vec![0.0; n];
    for &i in indices {
        f[i] = 1.0;
    }
    f
}

fn check_probability(mu: &WeightedPointMeasure) -> Result<()> {
    let m = mu.total_mass();
    if (m - 1.0).abs() > MASS_TOL {
        return Err(invalid(format!("expected a probability measure, mass is {m}")));
    }
    Ok(())
}

fn joint_scale(mus: &[&WeightedPointMeasure]) -> f64 {
    mus.iter().map(|m| m.max_norm()).fold(0.0, f64::max)
}

struct BandSink {
    tau: f64,
    delta: f64,
    mass: Accumulator,
}

impl TupleSink for BandSink {
    #[inline]
    fn push(&mut self, det: f64, weight: f64, _count: u64) {
        if det > self.tau && det < self.delta {
            self.mass.add(weight);
        }
    }

    fn merge(&mut self, other: Self) {
        self.mass.merge(&other.mass);
    }
}

fn sublevel_slots<'a>(mus: &[&'a WeightedPointMeasure], opts: &EvalOptions) -> Result<(Vec<Slot<'a>>, usize, f64)> {
    let first = mus.first().ok_or_else(|| invalid("sublevel_I needs k >= 1 measures"))?;
    let dim = first.dim();
    for mu in mus {
        if mu.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: mu.dim() });
        }
        check_probability(mu)?;
    }
    let slots: Vec<Slot<'_>> = mus.iter().map(|mu| Slot::new(mu, None)).collect();
    let tuples: u128 = slots.iter().map(|s| s.len() as u128).product();
    check_budget(tuples, opts.budget)?;
    let tau = opts.tau_for(joint_scale(mus), mus.len());
    Ok((slots, dim, tau))
}

/// `I_k^delta(mu_1, ..., mu_k)`: product mass of `{tau < det(0, y) < delta}`.
pub fn sublevel_i(mus: &[&WeightedPointMeasure], delta: f64, opts: &EvalOptions) -> Result<f64> {
    let (slots, dim, tau) = sublevel_slots(mus, opts)?;
    let sink = for_each_tuple(&slots, dim, true, || BandSink { tau, delta, mass: Accumulator::new() });
    Ok(sink.mass.value())
}

/// Sorted included determinants with cumulative mass, answering
/// `I_k^delta` for many `delta` after one enumeration.
#[derive(Clone, Debug)]
pub struct SublevelTable {
    dets: Vec<f64>,
    cumulative: Vec<f64>,
    excluded_mass: f64,
    tau: f64,
}

struct CollectSink {
    tau: f64,
    items: Vec<(f64, f64)>,
    excluded: Accumulator,
}

impl TupleSink for CollectSink {
    #[inline]
    fn push(&mut self, det: f64, weight: f64, _count: u64) {
        if det > self.tau {
            self.items.push((det, weight));
        } else {
            self.excluded.add(weight);
        }
    }

    fn merge(&mut self, mut other: Self) {
        self.items.append(&mut other.items);
        self.excluded.merge(&other.excluded);
    }
}

impl SublevelTable {
    pub fn build(mus: &[&WeightedPointMeasure], opts: &EvalOptions) -> Result<Self> {
        let (slots, dim, tau) = sublevel_slots(mus, opts)?;
        let sink = for_each_tuple(&slots, dim, true, || CollectSink { tau, items: Vec::new(), excluded: Accumulator::new() });
        let mut items = sink.items;
        items.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut acc = Accumulator::new();
        let mut cumulative = Vec::with_capacity(items.len());
        let mut dets = Vec::with_capacity(items.len());
        for (d, w) in items {
            acc.add(w);
            dets.push(d);
            cumulative.push(acc.value());
        }
        Ok(Self { dets, cumulative, excluded_mass: sink.excluded.value(), tau })
    }

    /// Mass of `{tau < det < delta}`.
    pub fn query(&self, delta: f64) -> f64 {
        let n = self.dets.partition_point(|&d| d < delta);
        if n == 0 {
            0.0
        } else {
            self.cumulative[n - 1]
        }
    }

    pub fn excluded_mass(&self) -> f64 {
        self.excluded_mass
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn max_det(&self) -> f64 {
        self.dets.last().copied().unwrap_or(0.0)
    }

    /// Included determinant values in increasing order.
    pub fn dets(&self) -> &[f64] {
        &self.dets
    }
}

/// Outcome of the Cauchy-Schwarz duality check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CauchySchwarz {
    /// Squared included product mass.
    pub lhs: f64,
    /// `(int det^gamma)(int det^{-gamma})` over included tuples.
    pub rhs: f64,
    pub ok: bool,
}

struct DualSink {
    tau: f64,
    gamma: f64,
    mass: Accumulator,
    pos: Accumulator,
    neg: Accumulator,
}

impl TupleSink for DualSink {
    #[inline]
    fn push(&mut self, det: f64, weight: f64, _count: u64) {
        if det > self.tau {
            let p = det.powf(self.gamma);
            self.mass.add(weight);
            self.pos.add(weight * p);
            self.neg.add(weight / p);
        }
    }

    fn merge(&mut self, other: Self) {
        self.mass.merge(&other.mass);
        self.pos.merge(&other.pos);
        self.neg.merge(&other.neg);
    }
}

/// `(prod mu(E_j))^2 <= (int det^gamma)(int det^{-gamma})` over
/// `E_1 x ... x E_k`, with the left side restricted to included tuples.
pub fn cauchy_schwarz_check(
    mu: &WeightedPointMeasure,
    k: usize,
    gamma: f64,
    sets: &[Vec<usize>],
    opts: &EvalOptions,
) -> Result<CauchySchwarz> {
    if sets.len() != k || k == 0 {
        return Err(invalid(format!("expected {k} sets")));
    }
    if sets.iter().any(|s| s.is_empty()) {
        return Err(invalid("sets must be nonempty"));
    }
    check_indices(mu, sets)?;
    let slots: Vec<Slot<'_>> = sets.iter().map(|s| Slot::from_indices(mu, s)).collect();
    let tuples: u128 = slots.iter().map(|s| s.len() as u128).product();
    check_budget(tuples, opts.budget)?;
    let tau = opts.tau_for(mu.max_norm(), k);
    let sink = for_each_tuple(&slots, mu.dim(), true, || DualSink {
        tau,
        gamma,
        mass: Accumulator::new(),
        pos: Accumulator::new(),
        neg: Accumulator::new(),
    });
    let mass = sink.mass.value();
    let lhs = mass * mass;
    let rhs = sink.pos.value() * sink.neg.value();
    Ok(CauchySchwarz { lhs, rhs, ok: lhs <= rhs * (1.0 + 1e-12) })
}

pub(crate) fn check_indices(mu: &WeightedPointMeasure, sets: &[Vec<usize>]) -> Result<()> {
    for s in sets {
        if let Some(&bad) = s.iter().find(|&&i| i >= mu.len()) {
            return Err(invalid(format!("atom index {bad} out of range (N = {})", mu.len())));
        }
    }
    Ok(())
}

/// `mu(E)` for an index set.
pub fn set_mass(mu: &WeightedPointMeasure, set: &[usize]) -> f64 {
    set.iter().map(|&i| mu.weight(i)).collect::<Accumulator>().value()
}
