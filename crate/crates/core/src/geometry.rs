//! Linear-algebraic primitives: Gram-matrix simplex determinants, ellipsoids
//! and their k-contents, projections and distances to affine flats.

use std::ops::Deref;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Frame columns must be orthonormal to this tolerance.
pub const ORTHONORMAL_TOL: f64 = 1e-12;

/// A Gram-Schmidt residual with squared norm below `GRAM_CLAMP * trace` is
/// treated as zero. This is roundoff scale: residuals are accurate to a few
/// ulps of the vector norms.
pub const GRAM_CLAMP: f64 = 1e-26;

/// Relative slack on the ellipsoid quadratic form, so that an ellipsoid
/// fitted exactly through an atom also contains it after rounding.
pub const MEMBERSHIP_TOL: f64 = 1e-12;

/// A point of `R^d` with finite coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(invalid("vector must have dimension >= 1"));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(invalid("vector entries must be finite"));
        }
        Ok(Self(coords))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    /// The `i`-th standard basis vector of `R^dim`.
    pub fn basis(dim: usize, i: usize) -> Self {
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Vector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for Vector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Vector::new(v)
    }
}

impl From<Vector> for Vec<f64> {
    fn from(v: Vector) -> Vec<f64> {
        v.0
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

/// `k!` times the k-volume of the simplex on `k + 1` vertices.
///
/// This is the square root of the Gram determinant of the differences
/// `y_i - y_{k+1}`, computed as the product of Gram-Schmidt residual norms.
/// A residual at roundoff scale (see [`GRAM_CLAMP`]) makes the result
/// exactly 0.
pub fn simplex_det<P: AsRef<[f64]>>(points: &[P]) -> Result<f64> {
    if points.len() < 2 {
        return Err(invalid("simplex_det needs at least two points"));
    }
    let dim = points[0].as_ref().len();
    for p in points {
        check_dim(dim, p.as_ref().len())?;
    }
    let k = points.len() - 1;
    let last = points[k].as_ref();
    let diffs: Vec<Vec<f64>> = points[..k]
        .iter()
        .map(|p| p.as_ref().iter().zip(last).map(|(a, b)| a - b).collect())
        .collect();
    Ok(gram_det_sqrt(&diffs))
}

/// `det(0, y_1, ..., y_k)`: the simplex determinant with the last vertex
/// pinned at the origin.
pub fn origin_det<P: AsRef<[f64]>>(points: &[P]) -> Result<f64> {
    if points.is_empty() {
        return Err(invalid("origin_det needs at least one point"));
    }
    let dim = points[0].as_ref().len();
    for p in points {
        check_dim(dim, p.as_ref().len())?;
    }
    let vs: Vec<Vec<f64>> = points.iter().map(|p| p.as_ref().to_vec()).collect();
    Ok(gram_det_sqrt(&vs))
}

fn gram_det_sqrt(vs: &[Vec<f64>]) -> f64 {
    let Some(first) = vs.first() else { return 1.0 };
    DetKernel::new(first.len(), vs.len()).origin_det_with(vs.len(), |j| &vs[j])
}

/// Allocation-free determinant kernel for the enumeration hot loops.
///
/// Uses classical Gram-Schmidt with reorthogonalisation: the Gram determinant
/// is the product of the squared residual norms. A residual with squared
/// norm below `GRAM_CLAMP * trace` makes the result 0.
#[derive(Clone, Debug)]
pub struct DetKernel {
    dim: usize,
    basis: Vec<f64>,
    resid: Vec<f64>,
}

impl DetKernel {
    pub fn new(dim: usize, k: usize) -> Self {
        Self { dim, basis: vec![0.0; dim * k.max(1)], resid: vec![0.0; dim] }
    }

    /// `det(0, v_1, ..., v_k)` for vectors given by the closure `vec(j)`.
    #[inline]
    pub fn origin_det_with<'a>(&mut self, k: usize, vec: impl Fn(usize) -> &'a [f64]) -> f64 {
        let d = self.dim;
        let trace: f64 = (0..k).map(|j| dot(vec(j), vec(j))).sum();
        if trace <= 0.0 {
            return 0.0;
        }
        let cut = GRAM_CLAMP * trace;
        let mut prod = 1.0;
        for j in 0..k {
            self.resid.copy_from_slice(vec(j));
            for _pass in 0..2 {
                for i in 0..j {
                    let q = &self.basis[i * d..(i + 1) * d];
                    let c = dot(&self.resid, q);
                    for (r, qi) in self.resid.iter_mut().zip(q) {
                        *r -= c * qi;
                    }
                }
            }
            let rr = dot(&self.resid, &self.resid);
            if rr <= cut {
                return 0.0;
            }
            let r = rr.sqrt();
            prod *= r;
            let q = &mut self.basis[j * d..(j + 1) * d];
            for (qi, ri) in q.iter_mut().zip(&self.resid) {
                *qi = ri / r;
            }
        }
        prod
    }

    /// `det(y_1, ..., y_{k+1})` for `points.len() == k + 1`.
    pub fn simplex_det(&mut self, points: &[&[f64]], diffs: &mut Vec<f64>) -> f64 {
        let k = points.len() - 1;
        let d = self.dim;
        let last = points[k];
        diffs.clear();
        for p in &points[..k] {
            diffs.extend(p.iter().zip(last).map(|(a, b)| a - b));
        }
        let diffs: &[f64] = diffs;
        self.origin_det_with(k, |j| &diffs[j * d..(j + 1) * d])
    }
}

/// `k!`.
pub fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Binomial coefficient as a float.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Constant in `det(0, y_1, ..., y_k) <= C |B|_k` for `y_j` in a centered
/// ellipsoid `B` of `R^d`: `k! * sqrt(binomial(d, k))`.
pub fn content_bound_constant(dim: usize, k: usize) -> f64 {
    factorial(k) * binomial(dim, k).sqrt()
}

/// An ellipsoid `{x : sum_i <x - x0, w_i>^2 / l_i^2 <= 1}`.
///
/// Semi-lengths are stored as inverse lengths `1 / l_i`: 0 encodes an
/// infinite axis and `+inf` encodes a zero-length axis.
#[derive(Clone, Debug, PartialEq)]
pub struct Ellipsoid {
    center: Vec<f64>,
    /// Columns are the axis directions.
    frame: DMatrix<f64>,
    inv_lengths: Vec<f64>,
}

impl Ellipsoid {
    pub fn new(center: Vec<f64>, frame: DMatrix<f64>, inv_lengths: Vec<f64>) -> Result<Self> {
        let d = center.len();
        if d == 0 {
            return Err(invalid("ellipsoid dimension must be >= 1"));
        }
        if frame.nrows() != d || frame.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, got: frame.nrows() });
        }
        check_dim(d, inv_lengths.len())?;
        if center.iter().any(|c| !c.is_finite()) {
            return Err(invalid("ellipsoid center must be finite"));
        }
        if inv_lengths.iter().any(|&v| v.is_nan() || v < 0.0) {
            return Err(invalid("inverse semi-lengths must be nonnegative"));
        }
        if orthonormality_defect(&frame) > ORTHONORMAL_TOL {
            return Err(invalid("ellipsoid frame is not orthonormal"));
        }
        Ok(Self { center, frame, inv_lengths })
    }

    /// Build from semi-lengths in `[0, inf]`.
    pub fn from_semi_lengths(center: Vec<f64>, frame: DMatrix<f64>, lengths: &[f64]) -> Result<Self> {
        if lengths.iter().any(|&l| l.is_nan() || l < 0.0) {
            return Err(invalid("semi-lengths must lie in [0, inf]"));
        }
        let inv = lengths.iter().map(|&l| length_to_inv(l)).collect();
        Self::new(center, frame, inv)
    }

    pub(crate) fn from_parts_unchecked(center: Vec<f64>, frame: DMatrix<f64>, inv_lengths: Vec<f64>) -> Self {
        Self { center, frame, inv_lengths }
    }

    /// Centered, axis-aligned ellipsoid with the given semi-lengths.
    pub fn axis_aligned(lengths: &[f64]) -> Result<Self> {
        let d = lengths.len();
        Self::from_semi_lengths(vec![0.0; d], DMatrix::identity(d, d), lengths)
    }

    pub fn centered_ball(dim: usize, radius: f64) -> Result<Self> {
        Self::axis_aligned(&vec![radius; dim])
    }

    /// The sublevel set `{x : |Qx|^2 <= 1}`: the frame is the right singular
    /// basis of `Q` and the inverse semi-lengths are its singular values.
    pub fn from_gaussian_form(q: &DMatrix<f64>) -> Result<Self> {
        let d = q.nrows();
        if q.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, got: q.ncols() });
        }
        let svd = q.clone().svd(false, true);
        let v_t = svd.v_t.ok_or_else(|| invalid("SVD did not converge"))?;
        let frame = v_t.transpose();
        let inv = svd.singular_values.iter().copied().collect();
        Ok(Self::from_parts_unchecked(vec![0.0; d], frame, inv))
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn frame(&self) -> &DMatrix<f64> {
        &self.frame
    }

    pub fn inv_lengths(&self) -> &[f64] {
        &self.inv_lengths
    }

    pub fn semi_lengths(&self) -> Vec<f64> {
        self.inv_lengths.iter().map(|&v| inv_to_length(v)).collect()
    }

    pub fn is_centered(&self) -> bool {
        self.center.iter().all(|&c| c == 0.0)
    }

    /// Quadratic form `sum_i (<y - x0, w_i> / l_i)^2`, `+inf` when `y` leaves
    /// a zero-length axis.
    pub fn quadratic_form(&self, y: &[f64]) -> f64 {
        let d = self.dim();
        let diff: Vec<f64> = y.iter().zip(&self.center).map(|(a, b)| a - b).collect();
        let scale = norm(&diff).max(1.0);
        let mut s = 0.0;
        for i in 0..d {
            let c = dot(&diff, self.frame.column(i).as_slice());
            let inv = self.inv_lengths[i];
            if inv.is_infinite() {
                if c.abs() > 1e-12 * scale {
                    return f64::INFINITY;
                }
            } else {
                let t = c * inv;
                s += t * t;
            }
        }
        s
    }

    pub fn contains(&self, y: &[f64]) -> bool {
        self.quadratic_form(y) <= 1.0 + MEMBERSHIP_TOL
    }

    /// Axis indices ordered by decreasing semi-length (stable on ties).
    pub fn axes_by_length(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.dim()).collect();
        idx.sort_by(|&a, &b| self.inv_lengths[a].total_cmp(&self.inv_lengths[b]));
        idx
    }

    /// `|B|_k`: the product of the `k` largest semi-lengths; zero as soon as
    /// one of them is zero, even if another is infinite.
    pub fn k_content(&self, k: usize) -> Result<f64> {
        content_of_inv(&self.inv_lengths, k)
    }

    /// The `k`-th largest semi-length.
    pub fn kth_length(&self, k: usize) -> Result<f64> {
        if k == 0 || k > self.dim() {
            return Err(Error::KExceedsDimension { k, dim: self.dim() });
        }
        let axes = self.axes_by_length();
        Ok(inv_to_length(self.inv_lengths[axes[k - 1]]))
    }

    /// `a B` about the same center.
    pub fn scaled(&self, factor: f64) -> Self {
        let inv = self.inv_lengths.iter().map(|&v| v / factor).collect();
        Self::from_parts_unchecked(self.center.clone(), self.frame.clone(), inv)
    }

    pub fn translated(&self, offset: &[f64]) -> Self {
        let center = self.center.iter().zip(offset).map(|(a, b)| a + b).collect();
        Self::from_parts_unchecked(center, self.frame.clone(), self.inv_lengths.clone())
    }

    /// Affine span of the `m` longest axes through the center.
    pub fn top_axes_span(&self, m: usize) -> Result<AffineSubspace> {
        let axes = self.axes_by_length();
        let basis = axes[..m.min(self.dim())]
            .iter()
            .map(|&i| self.frame.column(i).iter().copied().collect())
            .collect();
        AffineSubspace::new(self.center.clone(), basis)
    }
}

pub(crate) fn length_to_inv(l: f64) -> f64 {
    if l == 0.0 {
        f64::INFINITY
    } else {
        1.0 / l
    }
}

pub(crate) fn inv_to_length(v: f64) -> f64 {
    if v == 0.0 {
        f64::INFINITY
    } else if v.is_infinite() {
        0.0
    } else {
        1.0 / v
    }
}

/// k-content from inverse semi-lengths.
pub(crate) fn content_of_inv(inv: &[f64], k: usize) -> Result<f64> {
    if k == 0 || k > inv.len() {
        return Err(Error::KExceedsDimension { k, dim: inv.len() });
    }
    let mut sorted = inv.to_vec();
    sorted.sort_by(f64::total_cmp);
    let top = &sorted[..k];
    if top.iter().any(|v| v.is_infinite()) {
        return Ok(0.0);
    }
    if top.contains(&0.0) {
        return Ok(f64::INFINITY);
    }
    Ok(top.iter().map(|v| 1.0 / v).product())
}

/// `max |F^T F - I|` entrywise.
pub fn orthonormality_defect(frame: &DMatrix<f64>) -> f64 {
    let n = frame.ncols();
    let g = frame.transpose() * frame;
    (g - DMatrix::<f64>::identity(n, n)).amax()
}

/// `|Q|_k`: the reciprocal of the product of the `k` smallest singular
/// values of `Q`; `+inf` when that product vanishes.
pub fn q_content(q: &DMatrix<f64>, k: usize) -> Result<f64> {
    let d = q.nrows();
    if q.ncols() != d {
        return Err(Error::DimensionMismatch { expected: d, got: q.ncols() });
    }
    if k == 0 || k > d {
        return Err(Error::KExceedsDimension { k, dim: d });
    }
    let mut sv: Vec<f64> = q.singular_values().iter().copied().collect();
    sv.sort_by(f64::total_cmp);
    let prod: f64 = sv[..k].iter().product();
    Ok(if prod == 0.0 { f64::INFINITY } else { 1.0 / prod })
}

/// `P y = y - <y, x^> x^`, the projection onto the complement of `x`.
pub fn project_complement(x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    check_dim(x.len(), y.len())?;
    let n = norm(x);
    if n == 0.0 || !n.is_finite() {
        return Err(invalid("project_complement: x must be nonzero"));
    }
    let c = dot(y, x) / (n * n);
    Ok(y.iter().zip(x).map(|(yi, xi)| yi - c * xi).collect())
}

/// Matrix of `P_x^` acting on column vectors.
pub fn complement_projector(x: &[f64]) -> Result<DMatrix<f64>> {
    let n = norm(x);
    if n == 0.0 || !n.is_finite() {
        return Err(invalid("complement_projector: x must be nonzero"));
    }
    let u = DVector::from_iterator(x.len(), x.iter().map(|v| v / n));
    Ok(DMatrix::identity(x.len(), x.len()) - &u * u.transpose())
}

/// An affine flat `base + span(basis)` with orthonormal basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineSubspace {
    base: Vec<f64>,
    basis: Vec<Vec<f64>>,
}

impl AffineSubspace {
    pub fn new(base: Vec<f64>, basis: Vec<Vec<f64>>) -> Result<Self> {
        let d = base.len();
        if basis.len() >= d && d > 0 && !basis.is_empty() {
            return Err(invalid("affine subspace must have dimension < ambient dimension"));
        }
        for b in &basis {
            check_dim(d, b.len())?;
        }
        for i in 0..basis.len() {
            for j in 0..=i {
                let target = if i == j { 1.0 } else { 0.0 };
                if (dot(&basis[i], &basis[j]) - target).abs() > ORTHONORMAL_TOL {
                    return Err(invalid("affine subspace basis is not orthonormal"));
                }
            }
        }
        Ok(Self { base, basis })
    }

    /// Affine hull of the given points. Directions that are numerically
    /// dependent (residual below `tol` times the largest spread) are dropped,
    /// so the result may have lower dimension than `points.len() - 1`.
    pub fn through_points<P: AsRef<[f64]>>(points: &[P], tol: f64) -> Result<Self> {
        let first = points.first().ok_or_else(|| invalid("no points"))?.as_ref();
        let d = first.len();
        let mut basis: Vec<Vec<f64>> = Vec::new();
        let diffs: Vec<Vec<f64>> = points[1..]
            .iter()
            .map(|p| p.as_ref().iter().zip(first).map(|(a, b)| a - b).collect())
            .collect();
        let spread = diffs.iter().map(|v| norm(v)).fold(0.0, f64::max);
        for v in diffs {
            let mut r = v.clone();
            for _ in 0..2 {
                for b in &basis {
                    let c = dot(&r, b);
                    for (ri, bi) in r.iter_mut().zip(b) {
                        *ri -= c * bi;
                    }
                }
            }
            let n = norm(&r);
            if n > tol * spread.max(1.0) && basis.len() + 1 < d {
                basis.push(r.iter().map(|x| x / n).collect());
            }
        }
        Ok(Self { base: first.to_vec(), basis })
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.base.len()
    }

    pub fn base(&self) -> &[f64] {
        &self.base
    }

    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    pub fn distance(&self, y: &[f64]) -> f64 {
        let mut r: Vec<f64> = y.iter().zip(&self.base).map(|(a, b)| a - b).collect();
        for b in &self.basis {
            let c = dot(&r, b);
            for (ri, bi) in r.iter_mut().zip(b) {
                *ri -= c * bi;
            }
        }
        norm(&r)
    }
}

/// Euclidean distance from `y` to the flat `h0`.
pub fn dist_affine(y: &[f64], h0: &AffineSubspace) -> Result<f64> {
    check_dim(h0.ambient_dim(), y.len())?;
    Ok(h0.distance(y))
}

/// Haar-distributed rotation from the QR factorisation of a Gaussian matrix.
pub fn random_rotation<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(dim, dim, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Rotate columns `i` and `j` of `frame` by angle `theta` in their plane.
pub fn givens(frame: &DMatrix<f64>, i: usize, j: usize, theta: f64) -> DMatrix<f64> {
    let (s, c) = theta.sin_cos();
    let mut out = frame.clone();
    for r in 0..frame.nrows() {
        let a = frame[(r, i)];
        let b = frame[(r, j)];
        out[(r, i)] = c * a - s * b;
        out[(r, j)] = s * a + c * b;
    }
    out
}

/// Re-orthonormalise a frame that drifted after repeated rotations.
pub fn reorthonormalize(frame: &DMatrix<f64>) -> DMatrix<f64> {
    let d = frame.ncols();
    let mut out = frame.clone();
    for j in 0..d {
        for _ in 0..2 {
            for i in 0..j {
                let c = out.column(i).dot(&out.column(j));
                let ci = out.column(i).clone_owned();
                out.column_mut(j).axpy(-c, &ci, 1.0);
            }
        }
        let n = out.column(j).norm();
        out.column_mut(j).scale_mut(1.0 / n);
    }
    out
}
