use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::constants::{c_k, corollary_constant};
use super::{check_budget, check_indices, for_each_tuple, EvalOptions, Slot, TupleSink};
use crate::error::{invalid, Result};
use crate::measure::WeightedPointMeasure;
use crate::sum::Accumulator;

/// Product mass of `E_1 x ... x E_k` split into dyadic determinant layers
/// `2^l <= det(0, y) < 2^{l+1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DyadicProfile {
    pub gamma: f64,
    pub layers: BTreeMap<i32, f64>,
    pub excluded_mass: f64,
    /// Exact `T~^{-gamma}(chi_E)` accumulated alongside the layers.
    pub exact: f64,
}

/// Optimised split of the two-sided layer bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesBound {
    /// First layer bounded by its mass rather than the curvature estimate.
    pub l0: i32,
    pub bound: f64,
}

struct LayerSink {
    tau: f64,
    gamma: f64,
    layers: BTreeMap<i32, Accumulator>,
    excluded: Accumulator,
    exact: Accumulator,
}

impl TupleSink for LayerSink {
    fn push(&mut self, det: f64, weight: f64, _count: u64) {
        if det > self.tau {
            let l = det.log2().floor() as i32;
            self.layers.entry(l).or_default().add(weight);
            self.exact.add(weight * det.powf(-self.gamma));
        } else {
            self.excluded.add(weight);
        }
    }

    fn merge(&mut self, other: Self) {
        for (l, acc) in other.layers {
            self.layers.entry(l).or_default().merge(&acc);
        }
        self.excluded.merge(&other.excluded);
        self.exact.merge(&other.exact);
    }
}

impl DyadicProfile {
    pub fn compute(
        mu: &WeightedPointMeasure,
        k: usize,
        sets: &[Vec<usize>],
        gamma: f64,
        opts: &EvalOptions,
    ) -> Result<Self> {
        if k == 0 || sets.len() != k {
            return Err(invalid(format!("expected {k} sets")));
        }
        check_indices(mu, sets)?;
        let slots: Vec<Slot<'_>> = sets.iter().map(|s| Slot::from_indices(mu, s)).collect();
        let tuples: u128 = slots.iter().map(|s| s.len() as u128).product();
        check_budget(tuples, opts.budget)?;
        let tau = opts.tau_for(mu.max_norm(), k);
        let sink = for_each_tuple(&slots, mu.dim(), true, || LayerSink {
            tau,
            gamma,
            layers: BTreeMap::new(),
            excluded: Accumulator::new(),
            exact: Accumulator::new(),
        });
        Ok(Self {
            gamma,
            layers: sink.layers.into_iter().map(|(l, a)| (l, a.value())).collect(),
            excluded_mass: sink.excluded.value(),
            exact: sink.exact.value(),
        })
    }

    /// `sum_l 2^{-gamma l} mass_l`.
    pub fn reconstruct(&self) -> f64 {
        self.layers.iter().map(|(&l, &m)| 2f64.powf(-self.gamma * l as f64) * m).collect::<Accumulator>().value()
    }

    /// Interval guaranteed to contain `T~^{-gamma}(chi_E)`: the layer sum
    /// and its `2^{-gamma}` multiple, in increasing order.
    pub fn bracket(&self) -> (f64, f64) {
        let s = self.reconstruct();
        let t = 2f64.powf(-self.gamma) * s;
        (s.min(t), s.max(t))
    }

    pub fn included_mass(&self) -> f64 {
        self.layers.values().copied().collect::<Accumulator>().value()
    }

    /// Minimise over `l0` the bound that uses the curvature estimate
    /// `mass_l <= A 2^{alpha(l+1)} P` below `l0` and `mass_l <= P` from `l0` on.
    /// Requires `0 < gamma < alpha`.
    pub fn series_bound(&self, k: usize, alpha: f64, curvature_norm: f64, set_masses: &[f64]) -> Result<SeriesBound> {
        let gamma = self.gamma;
        if !(gamma > 0.0 && gamma < alpha) {
            return Err(invalid("series bound needs 0 < gamma < alpha"));
        }
        if set_masses.len() != k || set_masses.iter().any(|&m| m <= 0.0) {
            return Err(invalid("set masses must be k positive numbers"));
        }
        let p: f64 = set_masses.iter().product();
        let a = corollary_constant(k) * c_k(k).powf(-alpha) * curvature_norm * p.powf(-1.0 / k as f64);
        let head = |l0: f64| a * 2f64.powf(alpha) * 2f64.powf((alpha - gamma) * l0) / (2f64.powf(alpha - gamma) - 1.0);
        let tail = |l0: f64| 2f64.powf(-gamma * l0) / (1.0 - 2f64.powf(-gamma));
        let f = |l0: i32| p * (head(l0 as f64) + tail(l0 as f64));
        if a == 0.0 {
            return Ok(SeriesBound { l0: i32::MIN, bound: 0.0 });
        }
        // f is convex in l0; minimise the continuous relaxation and round.
        let ratio = gamma * (2f64.powf(alpha - gamma) - 1.0)
            / ((alpha - gamma) * a * 2f64.powf(alpha) * (1.0 - 2f64.powf(-gamma)));
        let star = ratio.log2() / alpha;
        let lo = star.floor().clamp(-1e6, 1e6) as i32;
        let best = [lo - 1, lo, lo + 1, lo + 2]
            .into_iter()
            .map(|l| SeriesBound { l0: l, bound: f(l) })
            .min_by(|x, y| x.bound.total_cmp(&y.bound))
            .expect("nonempty");
        Ok(best)
    }
}
