use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{check_budget, for_each_tuple, set_mass, EvalOptions, KernelSink, Slot};
use crate::error::{invalid, Result};
use crate::geometry::{dot, norm, random_rotation, Ellipsoid};
use crate::measure::WeightedPointMeasure;

/// Shape of a randomly drawn test set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum SetShape {
    FullSupport,
    /// Each atom kept independently with probability `p`.
    RandomSubset { p: f64 },
    /// Ball around a random atom, radius log-uniform below the cloud radius.
    Ball,
    /// `{<y, u> >= t}` for a random direction and a random atom quantile.
    HalfSpace,
    /// Centered ellipsoid minus a concentric scaled copy.
    EllipsoidShell,
    /// Atoms within a random angle of a random direction or its opposite.
    Cone,
}

/// Cycle of shapes; trial `t` draws all `k` sets from `shapes[t % len]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SetSampler {
    pub shapes: Vec<SetShape>,
}

impl Default for SetSampler {
    fn default() -> Self {
        Self {
            shapes: vec![
                SetShape::FullSupport,
                SetShape::RandomSubset { p: 0.3 },
                SetShape::Ball,
                SetShape::HalfSpace,
                SetShape::EllipsoidShell,
                SetShape::Cone,
            ],
        }
    }
}

impl SetSampler {
    /// The `k` sets of trial `t`, drawn from ChaCha stream `t` of `seed`.
    /// Empty draws are retried a few times; a set may still come back empty.
    pub fn draw_family(&self, mu: &WeightedPointMeasure, k: usize, trial: usize, seed: u64) -> (&SetShape, Vec<Vec<usize>>) {
        let shape = &self.shapes[trial % self.shapes.len()];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial as u64);
        let mut sets = Vec::with_capacity(k);
        for _ in 0..k {
            let mut set = Vec::new();
            for _ in 0..MAX_REDRAWS {
                set = draw_set(mu, shape, &mut rng);
                if set_mass(mu, &set) > 0.0 {
                    break;
                }
            }
            sets.push(set);
        }
        (shape, sets)
    }
}

/// Empirical supremum of the restricted weak-type ratio.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RwtProbe {
    pub sup_ratio: f64,
    pub witness_trial: usize,
    pub witness_shape: SetShape,
    pub witness_masses: Vec<f64>,
    pub ratios: Vec<f64>,
}

const MAX_REDRAWS: usize = 16;

fn draw_set(mu: &WeightedPointMeasure, shape: &SetShape, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = mu.len();
    let d = mu.dim();
    let r_max = mu.max_norm().max(f64::MIN_POSITIVE);
    let unit = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        loop {
            let g: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
            let r = norm(&g);
            if r > 1e-8 {
                return g.into_iter().map(|x| x / r).collect();
            }
        }
    };
    match shape {
        SetShape::FullSupport => (0..n).collect(),
        SetShape::RandomSubset { p } => (0..n).filter(|_| rng.random::<f64>() < *p).collect(),
        SetShape::Ball => {
            let c = mu.point(rng.random_range(0..n)).to_vec();
            let r = 2.0 * r_max * 2f64.powf(-6.0 * rng.random::<f64>());
            (0..n)
                .filter(|&i| {
                    let p = mu.point(i);
                    p.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() <= r * r
                })
                .collect()
        }
        SetShape::HalfSpace => {
            let u = unit(rng);
            let proj: Vec<f64> = mu.points().map(|p| dot(p, &u)).collect();
            let t = {
                let mut sorted = proj.clone();
                sorted.sort_by(f64::total_cmp);
                sorted[rng.random_range(0..n)]
            };
            proj.iter().enumerate().filter(|(_, v)| **v >= t).map(|(i, _)| i).collect()
        }
        SetShape::EllipsoidShell => {
            let frame = random_rotation(d, rng);
            let lengths: Vec<f64> = (0..d).map(|_| r_max * 2f64.powf(1.0 - 5.0 * rng.random::<f64>())).collect();
            let b = Ellipsoid::from_semi_lengths(vec![0.0; d], frame, &lengths).expect("valid ellipsoid");
            let s = 0.2 + 0.7 * rng.random::<f64>();
            (0..n)
                .filter(|&i| {
                    let q = b.quadratic_form(mu.point(i));
                    q <= 1.0 && q > s * s
                })
                .collect()
        }
        SetShape::Cone => {
            let u = unit(rng);
            let cos = (0.1 + 0.9 * rng.random::<f64>()).cos();
            (0..n)
                .filter(|&i| {
                    let p = mu.point(i);
                    let r = norm(p);
                    r > 0.0 && dot(p, &u).abs() >= cos * r
                })
                .collect()
        }
    }
}

/// `T~^{-gamma}(chi_{E_1}, ..., chi_{E_k})` for index sets.
pub fn t_tilde_on_sets(
    mu: &WeightedPointMeasure,
    k: usize,
    gamma: f64,
    sets: &[Vec<usize>],
    opts: &EvalOptions,
) -> Result<f64> {
    if sets.len() != k || k == 0 {
        return Err(invalid(format!("expected {k} sets")));
    }
    super::check_indices(mu, sets)?;
    let slots: Vec<Slot<'_>> = sets.iter().map(|s| Slot::from_indices(mu, s)).collect();
    let tuples: u128 = slots.iter().map(|s| s.len() as u128).product();
    check_budget(tuples, opts.budget)?;
    let tau = opts.tau_for(mu.max_norm(), k);
    Ok(for_each_tuple(&slots, mu.dim(), true, || KernelSink::new(tau, gamma)).value.value())
}

/// Probe `T~^{-gamma}(chi_E) / prod mu(E_j)^{1 - gamma/(k alpha)}` over
/// randomly drawn sets. Requires `0 < gamma < alpha`.
#[allow(clippy::too_many_arguments)]
pub fn rwt_probe(
    mu: &WeightedPointMeasure,
    k: usize,
    gamma: f64,
    alpha: f64,
    sampler: &SetSampler,
    trials: usize,
    seed: u64,
    opts: &EvalOptions,
) -> Result<RwtProbe> {
    if !(gamma > 0.0 && gamma < alpha) {
        return Err(invalid("rwt_probe needs 0 < gamma < alpha"));
    }
    if sampler.shapes.is_empty() || trials == 0 {
        return Err(invalid("rwt_probe needs at least one shape and one trial"));
    }
    let exponent = 1.0 - gamma / (k as f64 * alpha);
    let mut best = RwtProbe {
        sup_ratio: 0.0,
        witness_trial: 0,
        witness_shape: sampler.shapes[0].clone(),
        witness_masses: Vec::new(),
        ratios: Vec::with_capacity(trials),
    };
    for t in 0..trials {
        let (shape, sets) = sampler.draw_family(mu, k, t, seed);
        let masses: Vec<f64> = sets.iter().map(|s| set_mass(mu, s)).collect();
        if masses.iter().any(|&m| m <= 0.0) {
            continue;
        }
        let value = t_tilde_on_sets(mu, k, gamma, &sets, opts)?;
        let ratio = value / masses.iter().map(|m| m.powf(exponent)).product::<f64>();
        best.ratios.push(ratio);
        if ratio > best.sup_ratio {
            best.sup_ratio = ratio;
            best.witness_trial = t;
            best.witness_shape = shape.clone();
            best.witness_masses = masses;
        }
    }
    Ok(best)
}
