use serde::{Deserialize, Serialize};

use super::{length_combos, ratio_of, EllipsoidFamily, FamilyMode};
use crate::error::{invalid, Error, Result};
use crate::geometry::{dot, MEMBERSHIP_TOL};
use crate::measure::WeightedPointMeasure;
use crate::par;

fn check(mu: &WeightedPointMeasure, k: usize, family: &EllipsoidFamily) -> Result<()> {
    if family.mode() != FamilyMode::DoublingDyadic {
        return Err(invalid("the maximal function needs a doubling_dyadic family"));
    }
    if family.dim() != mu.dim() {
        return Err(Error::DimensionMismatch { expected: mu.dim(), got: family.dim() });
    }
    if k == 0 || k > mu.dim() {
        return Err(Error::KExceedsDimension { k, dim: mu.dim() });
    }
    Ok(())
}

/// For each evaluation point `y`: `sup_B mu(y + B) / |B|_k^alpha` over the
/// whole family, and `sup_B mu(y + B) / |B|_k^beta` over the members whose
/// double is still in the family.
fn sups<P: AsRef<[f64]> + Sync>(
    mu: &WeightedPointMeasure,
    k: usize,
    alpha: f64,
    beta: f64,
    family: &EllipsoidFamily,
    points: &[P],
) -> Vec<(f64, f64)> {
    let d = mu.dim();
    let grid = family.lengths();
    let combos = length_combos(grid.len(), d);
    let projected: Vec<Vec<f64>> = family
        .frames()
        .iter()
        .map(|f| {
            let mut z = Vec::with_capacity(mu.len() * d);
            for p in mu.points() {
                for j in 0..d {
                    z.push(dot(p, f.column(j).as_slice()));
                }
            }
            z
        })
        .collect();
    let w = mu.weights();
    par::map_slice(points, |y| {
        let y = y.as_ref();
        let mut full: f64 = 0.0;
        let mut sub: f64 = 0.0;
        let mut diff = vec![0.0; mu.len() * d];
        for (frame, z) in family.frames().iter().zip(&projected) {
            let zy: Vec<f64> = (0..d).map(|j| dot(y, frame.column(j).as_slice())).collect();
            for (slot, (zi, c)) in diff.iter_mut().zip(z.iter().zip(zy.iter().cycle())) {
                *slot = zi - c;
            }
            for combo in &combos {
                let inv: Vec<f64> = combo.iter().map(|&i| 1.0 / grid[i]).collect();
                let mut mass = 0.0;
                for (i, &wi) in w.iter().enumerate() {
                    let q: f64 = diff[i * d..(i + 1) * d].iter().zip(&inv).map(|(c, v)| (c * v) * (c * v)).sum();
                    if q <= 1.0 + MEMBERSHIP_TOL {
                        mass += wi;
                    }
                }
                let mut lengths: Vec<f64> = combo.iter().map(|&i| grid[i]).collect();
                lengths.sort_by(|a, b| b.total_cmp(a));
                let content: f64 = lengths[..k].iter().product();
                full = full.max(ratio_of(mass, content, alpha));
                if combo.iter().all(|&i| i + 1 < grid.len()) {
                    sub = sub.max(ratio_of(mass, content, beta));
                }
            }
        }
        (full, sub)
    })
}

/// `F_{k,alpha}(y) = sup_B mu(y + B) / |B|_k^alpha` over a doubling-closed
/// family of centered ellipsoids, at each evaluation point.
pub fn maximal_function<P: AsRef<[f64]> + Sync>(
    mu: &WeightedPointMeasure,
    k: usize,
    alpha: f64,
    family: &EllipsoidFamily,
    eval_points: &[P],
) -> Result<Vec<f64>> {
    check(mu, k, family)?;
    if eval_points.iter().any(|p| p.as_ref().len() != mu.dim()) {
        return Err(invalid("evaluation points must match the measure dimension"));
    }
    Ok(sups(mu, k, alpha, alpha, family, eval_points).into_iter().map(|(f, _)| f).collect())
}

/// `(sup_lambda lambda^p mu(|f| > lambda))^{1/p}`, exact for finitely many
/// values: the supremum is approached just below each distinct `|f|`.
pub fn weak_lp_norm(values: &[f64], weights: &[f64], p: f64) -> Result<f64> {
    if values.len() != weights.len() {
        return Err(Error::DimensionMismatch { expected: values.len(), got: weights.len() });
    }
    if !(p > 0.0) {
        return Err(invalid("p must be positive"));
    }
    let mut pairs: Vec<(f64, f64)> = values.iter().map(|v| v.abs()).zip(weights.iter().copied()).filter(|&(_, w)| w > 0.0).collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best: f64 = 0.0;
    let mut cum = 0.0;
    let mut i = 0;
    while i < pairs.len() {
        let v = pairs[i].0;
        while i < pairs.len() && pairs[i].0 == v {
            cum += pairs[i].1;
            i += 1;
        }
        if v == f64::INFINITY {
            return Ok(f64::INFINITY);
        }
        best = best.max(v.powf(p) * cum);
    }
    Ok(best.powf(1.0 / p))
}

/// Both sides of `||F_{k, alpha p/(p+1)}||_inf <= 2^{alpha k} ||F_{k,alpha}||_{p,inf}^{p/(p+1)}`
/// over the support of `mu`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaximalInequality {
    /// Sup over atoms of the maximal function at the lowered exponent,
    /// taken over members whose double lies in the family.
    pub lhs: f64,
    pub rhs: f64,
    pub weak_norm: f64,
    pub ok: bool,
}

pub fn maximal_inequality(mu: &WeightedPointMeasure, k: usize, alpha: f64, p: f64, family: &EllipsoidFamily) -> Result<MaximalInequality> {
    check(mu, k, family)?;
    if !(p > 0.0 && alpha > 0.0) {
        return Err(invalid("alpha and p must be positive"));
    }
    let beta = alpha * p / (p + 1.0);
    let support: Vec<usize> = (0..mu.len()).filter(|&i| mu.weight(i) > 0.0).collect();
    let points: Vec<&[f64]> = support.iter().map(|&i| mu.point(i)).collect();
    let values = sups(mu, k, alpha, beta, family, &points);
    let f_alpha: Vec<f64> = values.iter().map(|v| v.0).collect();
    let weights: Vec<f64> = support.iter().map(|&i| mu.weight(i)).collect();
    let weak_norm = weak_lp_norm(&f_alpha, &weights, p)?;
    let lhs = values.iter().map(|v| v.1).fold(0.0, f64::max);
    let rhs = 2f64.powf(alpha * k as f64) * weak_norm.powf(p / (p + 1.0));
    Ok(MaximalInequality { lhs, rhs, weak_norm, ok: lhs <= rhs * (1.0 + 1e-12) })
}
