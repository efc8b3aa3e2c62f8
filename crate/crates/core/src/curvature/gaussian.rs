use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{norm, q_content};
use crate::measure::WeightedPointMeasure;
use crate::sum::Accumulator;

fn check_shapes(mu: &WeightedPointMeasure, q: &DMatrix<f64>) -> Result<()> {
    if q.ncols() != mu.dim() {
        return Err(Error::DimensionMismatch { expected: mu.dim(), got: q.ncols() });
    }
    Ok(())
}

fn images(mu: &WeightedPointMeasure, q: &DMatrix<f64>) -> Vec<DVector<f64>> {
    mu.points().map(|p| q * DVector::from_column_slice(p)).collect()
}

/// `sum_i w_i exp(-|Q p_i - x0|^2)`.
pub fn gaussian_integral(mu: &WeightedPointMeasure, q: &DMatrix<f64>, x0: &[f64]) -> Result<f64> {
    check_shapes(mu, q)?;
    if x0.len() != q.nrows() {
        return Err(Error::DimensionMismatch { expected: q.nrows(), got: x0.len() });
    }
    let x0 = DVector::from_column_slice(x0);
    Ok(images(mu, q)
        .iter()
        .zip(mu.weights())
        .map(|(y, w)| w * (-(y - &x0).norm_squared()).exp())
        .collect::<Accumulator>()
        .value())
}

/// Both sides of the layer-cake identity for the Gaussian integral.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerCake {
    /// `int exp(-|Qx|^2) dmu`.
    pub lhs: f64,
    /// `int_0^inf 2t exp(-t^2) mu(|Qx| <= t) dt`, integrated piecewise.
    pub rhs: f64,
    pub rel_err: f64,
    /// The same integral with the set `{|Qx|^2 <= t}`, which evaluates to
    /// `int exp(-|Qx|^4) dmu` and does not match `lhs` in general.
    pub squared_set_rhs: f64,
}

/// The distribution function `t -> mu(|Qx| <= t)` is a step function with
/// jumps at the atom radii; on each step the integrand has the primitive
/// `-exp(-t^2)`.
pub fn layer_cake_check(mu: &WeightedPointMeasure, q: &DMatrix<f64>) -> Result<LayerCake> {
    check_shapes(mu, q)?;
    let mut radii: Vec<(f64, f64)> = images(mu, q).iter().map(|y| y.norm()).zip(mu.weights().iter().copied()).collect();
    radii.sort_by(|a, b| a.0.total_cmp(&b.0));
    let lhs = gaussian_integral(mu, q, &vec![0.0; q.nrows()])?;
    let piecewise = |tail: &dyn Fn(f64) -> f64| -> f64 {
        let mut acc = Accumulator::new();
        let mut cum = 0.0;
        let mut i = 0;
        while i < radii.len() {
            let r = radii[i].0;
            while i < radii.len() && radii[i].0 == r {
                cum += radii[i].1;
                i += 1;
            }
            let next = radii.get(i).map_or(0.0, |&(s, _)| tail(s));
            acc.add(cum * (tail(r) - next));
        }
        acc.value()
    };
    let rhs = piecewise(&|t: f64| (-t * t).exp());
    let squared_set_rhs = piecewise(&|t: f64| (-t * t * t * t).exp());
    let rel_err = if lhs > 0.0 { (lhs - rhs).abs() / lhs } else { (lhs - rhs).abs() };
    Ok(LayerCake { lhs, rhs, rel_err, squared_set_rhs })
}

/// `sum_m 2^{(m+1) k alpha} (exp(-4^m) - exp(-4^{m+1}))`: bounds
/// `int 2t exp(-t^2) (2t)^{k alpha} dt` by dyadic steps.
pub fn dyadic_layer_constant(k: usize, alpha: f64) -> f64 {
    let ka = k as f64 * alpha;
    (-80..12)
        .map(|m| {
            let m = m as f64;
            let lo = 4f64.powf(m);
            2f64.powf((m + 1.0) * ka) * ((-lo).exp() - (-4.0 * lo).exp())
        })
        .collect::<Accumulator>()
        .value()
}

/// Gaussian integral against the content of its sublevel ellipsoid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianContent {
    pub lhs: f64,
    /// `sup_m mu(2^m B_Q) / |2^m B_Q|_k^alpha` over all dyadic dilates.
    pub dilate_constant: f64,
    pub q_content: f64,
    /// `dyadic_layer_constant * dilate_constant * |Q|_k^alpha`.
    pub bound: f64,
    pub ok: bool,
}

/// Check `int exp(-|Qx|^2) dmu <= C(k, alpha) K |Q|_k^alpha` where `K` is
/// the curvature constant measured on the dyadic dilates of `{|Qx| <= 1}`.
pub fn gaussian_content_check(mu: &WeightedPointMeasure, q: &DMatrix<f64>, k: usize, alpha: f64) -> Result<GaussianContent> {
    check_shapes(mu, q)?;
    let lhs = gaussian_integral(mu, q, &vec![0.0; q.nrows()])?;
    let content = q_content(q, k)?;
    let mut radii: Vec<(f64, f64)> = images(mu, q).iter().map(|y| norm(y.as_slice())).zip(mu.weights().iter().copied()).collect();
    radii.sort_by(|a, b| a.0.total_cmp(&b.0));
    let ka = k as f64 * alpha;
    let at_origin: f64 = radii.iter().filter(|r| r.0 == 0.0).map(|r| r.1).sum();
    let dilate_constant = if at_origin > 0.0 || content == 0.0 {
        f64::INFINITY
    } else if content.is_infinite() {
        0.0
    } else {
        let r_min = radii[0].0;
        let r_max = radii[radii.len() - 1].0;
        let (m_lo, m_hi) = (r_min.log2().ceil() as i32 - 1, r_max.log2().ceil() as i32 + 1);
        (m_lo..=m_hi)
            .map(|m| {
                let scale = 2f64.powi(m);
                let n = radii.partition_point(|r| r.0 <= scale);
                let mass: f64 = radii[..n].iter().map(|r| r.1).sum();
                mass / (scale.powf(ka) * content.powf(alpha))
            })
            .fold(0.0, f64::max)
    };
    let bound = if content.is_infinite() {
        f64::INFINITY
    } else {
        dyadic_layer_constant(k, alpha) * dilate_constant * content.powf(alpha)
    };
    let ok = lhs <= bound * (1.0 + 1e-12) || bound.is_infinite();
    Ok(GaussianContent { lhs, dilate_constant, q_content: content, bound, ok })
}
