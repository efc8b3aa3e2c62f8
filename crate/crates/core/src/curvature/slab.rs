use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::{AffineSubspace, Ellipsoid};
use crate::measure::WeightedPointMeasure;
use crate::par;

/// Measured `sup mu({dist(y, H0) <= delta}) / delta^{alpha k}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlabConstant {
    pub value: f64,
    /// Index of the maximising subspace.
    pub witness: usize,
    pub delta: f64,
}

fn slab_sup(mu: &WeightedPointMeasure, h0: &AffineSubspace, ak: f64) -> (f64, f64) {
    let mut dist: Vec<(f64, f64)> = mu.points().map(|p| h0.distance(p)).zip(mu.weights().iter().copied()).collect();
    dist.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = (0.0, 0.0);
    let mut cum = 0.0;
    let mut i = 0;
    while i < dist.len() {
        let delta = dist[i].0;
        while i < dist.len() && dist[i].0 == delta {
            cum += dist[i].1;
            i += 1;
        }
        let r = if cum == 0.0 {
            0.0
        } else if delta == 0.0 {
            f64::INFINITY
        } else {
            cum / delta.powf(ak)
        };
        if r > best.0 {
            best = (r, delta);
        }
    }
    best
}

/// Supremum over the given `(k-1)`-flats and over the atom distances
/// `delta` (the only places the slab mass jumps).
pub fn slab_constant(mu: &WeightedPointMeasure, k: usize, alpha: f64, subspaces: &[AffineSubspace]) -> Result<SlabConstant> {
    if k == 0 {
        return Err(invalid("k must be >= 1"));
    }
    for h in subspaces {
        if h.dim() != k - 1 || h.ambient_dim() != mu.dim() {
            return Err(invalid(format!("slab subspaces must be {}-dimensional in R^{}", k - 1, mu.dim())));
        }
    }
    let ak = alpha * k as f64;
    let sups = par::map_slice(subspaces, |h| slab_sup(mu, h, ak));
    let mut best = SlabConstant { value: 0.0, witness: 0, delta: 0.0 };
    for (i, (v, delta)) in sups.into_iter().enumerate() {
        if v > best.value {
            best = SlabConstant { value: v, witness: i, delta };
        }
    }
    Ok(best)
}

/// The slab-to-ellipsoid implication over a set of centered ellipsoids.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlabImplication {
    pub c_slab: f64,
    pub checked: usize,
    pub violations: usize,
    /// `max mu(B) / (C_slab l_k(B)^{alpha k})`.
    pub worst: f64,
    /// Whether `l_k^k <= |B|_k` held for every ellipsoid.
    pub content_ok: bool,
}

/// Measure the slab constant over the spans of the `k-1` longest axes of
/// each ellipsoid, then check `mu(B) <= C_slab l_k(B)^{alpha k}` for each.
/// A relative slack of `1e-9` absorbs the membership tolerance.
pub fn slab_implication(mu: &WeightedPointMeasure, k: usize, alpha: f64, members: &[Ellipsoid]) -> Result<SlabImplication> {
    let spans = members.iter().map(|b| b.top_axes_span(k - 1)).collect::<Result<Vec<_>>>()?;
    let c_slab = slab_constant(mu, k, alpha, &spans)?.value;
    let ak = alpha * k as f64;
    let rows = par::map_slice(members, |b| -> Result<(f64, bool, bool)> {
        let mass = mu.eval_ellipsoid(b);
        let lk = b.kth_length(k)?;
        let rhs = c_slab * lk.powf(ak);
        let ratio = if mass == 0.0 { 0.0 } else { mass / rhs };
        let content_ok = lk.powi(k as i32) <= b.k_content(k)? * (1.0 + 1e-12);
        Ok((ratio, ratio <= 1.0 + 1e-9, content_ok))
    });
    let mut out = SlabImplication { c_slab, checked: members.len(), violations: 0, worst: 0.0, content_ok: true };
    for row in rows {
        let (ratio, ok, content_ok) = row?;
        out.worst = out.worst.max(ratio);
        out.violations += usize::from(!ok);
        out.content_ok &= content_ok;
    }
    Ok(out)
}
