//! Finite weighted point measures and the exact transformations applied to
//! them: restriction, normalisation, isotropic dilation, push-forward,
//! mixtures and the mass-exact radial split.

mod generate;
pub mod io;

pub use generate::{CubeSampler, Family, GeneratorSpec};

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::geometry::{norm, AffineSubspace, Ellipsoid};
use crate::par;
use crate::sum::Accumulator;

/// Relative tolerance on "mass exactly 1" preconditions.
pub const MASS_TOL: f64 = 1e-9;

/// Atoms within this distance of a flat count as lying on it.
pub const FLAT_TOL: f64 = 1e-9;

/// A nonnegative weighted point cloud in `R^d`.
///
/// Points are stored row-major in one flat buffer. Measures derived by
/// splitting or restriction may be empty; measures built from user input
/// always carry at least one atom.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedPointMeasure {
    dim: usize,
    coords: Vec<f64>,
    weights: Vec<f64>,
}

impl WeightedPointMeasure {
    pub fn new(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        let dim = points.first().map(Vec::len).ok_or_else(|| invalid("measure needs at least one atom"))?;
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in &points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: p.len() });
            }
            coords.extend_from_slice(p);
        }
        Self::from_flat(dim, coords, weights)
    }

    pub fn from_flat(dim: usize, coords: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("measure dimension must be >= 1"));
        }
        if weights.is_empty() {
            return Err(invalid("measure needs at least one atom"));
        }
        if coords.len() != dim * weights.len() {
            return Err(invalid(format!(
                "{} coordinates do not match {} atoms of dimension {dim}",
                coords.len(),
                weights.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(invalid("atom coordinates must be finite"));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(invalid("weights must be finite and nonnegative"));
        }
        Ok(Self { dim, coords, weights })
    }

    /// Equal weights summing to one.
    pub fn uniform(points: Vec<Vec<f64>>) -> Result<Self> {
        let n = points.len();
        Self::new(points, vec![1.0 / n.max(1) as f64; n])
    }

    pub fn dirac(point: Vec<f64>, mass: f64) -> Result<Self> {
        Self::new(vec![point], vec![mass])
    }

    pub(crate) fn empty(dim: usize) -> Self {
        Self { dim, coords: Vec::new(), weights: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().copied().collect::<Accumulator>().value()
    }

    /// Largest atom norm; 0 for an empty measure.
    pub fn max_norm(&self) -> f64 {
        self.points().map(norm).fold(0.0, f64::max)
    }

    /// `mu(region)`: total weight of atoms satisfying the predicate.
    pub fn eval(&self, region: impl Fn(&[f64]) -> bool) -> f64 {
        let mut acc = Accumulator::new();
        for (p, &w) in self.points().zip(&self.weights) {
            if region(p) {
                acc.add(w);
            }
        }
        acc.value()
    }

    pub fn eval_ellipsoid(&self, b: &Ellipsoid) -> f64 {
        self.eval(|p| b.contains(p))
    }

    /// Atoms satisfying the predicate, weights untouched. May be empty.
    pub fn restrict(&self, region: impl Fn(&[f64]) -> bool) -> Self {
        let keep: Vec<usize> = (0..self.len()).filter(|&i| region(self.point(i))).collect();
        self.subset(&keep)
    }

    /// Restriction to the region renormalised to mass one.
    pub fn restrict_normalize(&self, region: impl Fn(&[f64]) -> bool) -> Result<Self> {
        self.restrict(region).normalized()
    }

    /// The measure divided by its mass.
    pub fn normalized(&self) -> Result<Self> {
        let mass = self.total_mass();
        if mass <= 0.0 {
            return Err(Error::ZeroMassRegion);
        }
        let mut out = self.clone();
        for w in &mut out.weights {
            *w /= mass;
        }
        Ok(out)
    }

    /// Atoms at the given indices, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        let mut coords = Vec::with_capacity(indices.len() * self.dim);
        let mut weights = Vec::with_capacity(indices.len());
        for &i in indices {
            coords.extend_from_slice(self.point(i));
            weights.push(self.weights[i]);
        }
        Self { dim: self.dim, coords, weights }
    }

    /// `mu^a`: atoms moved to `a x`, weights unchanged.
    pub fn dilate(&self, a: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(invalid("dilation factor must be positive and finite"));
        }
        let mut out = self.clone();
        for c in &mut out.coords {
            *c *= a;
        }
        Ok(out)
    }

    pub fn translate(&self, offset: &[f64]) -> Result<Self> {
        if offset.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: offset.len() });
        }
        let mut out = self.clone();
        for p in out.coords.chunks_exact_mut(self.dim) {
            for (c, o) in p.iter_mut().zip(offset) {
                *c += o;
            }
        }
        Ok(out)
    }

    /// Image under the linear map `L` (columns = source dimension).
    pub fn pushforward(&self, map: &DMatrix<f64>) -> Result<Self> {
        if map.ncols() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: map.ncols() });
        }
        let target = map.nrows();
        if target == 0 {
            return Err(invalid("push-forward target dimension must be >= 1"));
        }
        let mut coords = Vec::with_capacity(self.len() * target);
        for p in self.points() {
            let y = map * DVector::from_column_slice(p);
            coords.extend(y.iter());
        }
        Ok(Self { dim: target, coords, weights: self.weights.clone() })
    }

    /// Split a probability measure into the outermost mass `eps` and the rest.
    ///
    /// `r0` is the largest radius with `mu(|x| >= r0) >= eps`. Atoms strictly
    /// outside `r0` go to `mu0` entirely; atoms at radius `r0` are shared
    /// between `mu0` and `mu1` with a common fraction so that `mu0` carries
    /// exactly `eps`.
    pub fn radial_split(&self, eps: f64) -> Result<RadialSplit> {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(invalid("eps must lie in (0, 1]"));
        }
        let mass = self.total_mass();
        if (mass - 1.0).abs() > MASS_TOL {
            return Err(invalid(format!("radial_split needs a probability measure, mass is {mass}")));
        }
        let radii: Vec<f64> = self.points().map(norm).collect();
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| radii[b].total_cmp(&radii[a]));

        let mut mu0 = Self::empty(self.dim);
        let mut mu1 = Self::empty(self.dim);
        let mut before = Accumulator::new();
        let mut pos = 0;
        let mut r0 = 0.0;
        let mut split_done = false;
        while pos < order.len() {
            let r = radii[order[pos]];
            let mut end = pos;
            let mut group = Accumulator::new();
            while end < order.len() && (radii[order[end]] - r).abs() <= 1e-12 * r.max(1.0) {
                group.add(self.weights[order[end]]);
                end += 1;
            }
            let members = &order[pos..end];
            if split_done {
                for &i in members {
                    mu1.push(self.point(i), self.weights[i]);
                }
            } else {
                let mut after = before;
                after.merge(&group);
                if after.value() >= eps * (1.0 - 1e-12) || end == order.len() {
                    r0 = r;
                    let g = group.value();
                    let theta = if g > 0.0 { ((eps - before.value()) / g).clamp(0.0, 1.0) } else { 0.0 };
                    for &i in members {
                        let w = self.weights[i];
                        if theta > 0.0 {
                            mu0.push(self.point(i), theta * w);
                        }
                        if theta < 1.0 {
                            mu1.push(self.point(i), (1.0 - theta) * w);
                        }
                    }
                    split_done = true;
                } else {
                    for &i in members {
                        mu0.push(self.point(i), self.weights[i]);
                    }
                    before = after;
                }
            }
            pos = end;
        }
        Ok(RadialSplit { mu0, mu1, r0 })
    }

    fn push(&mut self, p: &[f64], w: f64) {
        self.coords.extend_from_slice(p);
        self.weights.push(w);
    }

    /// Median distance from an atom to its nearest distinct atom.
    pub fn median_nn_distance(&self) -> f64 {
        let n = self.len();
        if n < 2 {
            return 0.0;
        }
        let mut nn: Vec<f64> = par::map_range(n, |i| {
            let p = self.point(i);
            let mut best = f64::INFINITY;
            for j in 0..n {
                if j == i {
                    continue;
                }
                let d2: f64 = p.iter().zip(self.point(j)).map(|(a, b)| (a - b) * (a - b)).sum();
                if d2 > 0.0 && d2 < best {
                    best = d2;
                }
            }
            best.sqrt()
        });
        nn.retain(|d| d.is_finite());
        if nn.is_empty() {
            return 0.0;
        }
        nn.sort_by(f64::total_cmp);
        let m = nn.len();
        if m % 2 == 1 {
            nn[m / 2]
        } else {
            0.5 * (nn[m / 2 - 1] + nn[m / 2])
        }
    }

    /// Largest mass found on a `(k-1)`-flat through `k` atoms.
    ///
    /// All `k`-subsets are enumerated when there are at most `trials` of
    /// them, otherwise `trials` subsets are drawn with the given seed. This is
    /// an admissibility score for an atomic approximation, not a proof.
    pub fn flat_mass_diagnostic(&self, k: usize, trials: usize, seed: u64) -> Result<f64> {
        let n = self.len();
        if k == 0 || n < k {
            return Err(invalid(format!("flat diagnostic needs 1 <= k <= N, got k={k}, N={n}")));
        }
        let subsets: Vec<Vec<usize>> = if crate::geometry::binomial(n, k) <= trials as f64 {
            combinations(n, k)
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..trials).map(|_| sample(&mut rng, n, k).into_vec()).collect()
        };
        let masses = par::map_slice(&subsets, |idx| {
            let pts: Vec<&[f64]> = idx.iter().map(|&i| self.point(i)).collect();
            match AffineSubspace::through_points(&pts, FLAT_TOL) {
                Ok(flat) => self.eval(|p| flat.distance(p) <= FLAT_TOL),
                Err(_) => 0.0,
            }
        });
        Ok(masses.into_iter().fold(0.0, f64::max))
    }
}

/// Lexicographic `k`-subsets of `0..n`.
pub(crate) fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut i = k;
        while i > 0 && idx[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Result of [`WeightedPointMeasure::radial_split`].
#[derive(Clone, Debug)]
pub struct RadialSplit {
    /// Outer part, mass exactly `eps`.
    pub mu0: WeightedPointMeasure,
    /// Remainder, mass `1 - eps`.
    pub mu1: WeightedPointMeasure,
    pub r0: f64,
}

/// `sum_i c_i mu_i`.
pub fn mixture(measures: &[WeightedPointMeasure], coeffs: &[f64]) -> Result<WeightedPointMeasure> {
    let first = measures.first().ok_or_else(|| invalid("mixture needs at least one measure"))?;
    if measures.len() != coeffs.len() {
        return Err(invalid("one coefficient per measure"));
    }
    if coeffs.iter().any(|c| !c.is_finite() || *c < 0.0) {
        return Err(invalid("mixture coefficients must be nonnegative"));
    }
    let mut out = WeightedPointMeasure::empty(first.dim);
    for (m, &c) in measures.iter().zip(coeffs) {
        if m.dim != first.dim {
            return Err(Error::DimensionMismatch { expected: first.dim, got: m.dim });
        }
        for (p, &w) in m.points().zip(&m.weights) {
            out.push(p, c * w);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn three_atoms() -> WeightedPointMeasure {
        WeightedPointMeasure::new(vec![vec![0.2, 0.0], vec![0.0, 0.9], vec![2.0, 0.0]], vec![0.5, 0.25, 1.0]).unwrap()
    }

    #[test]
    fn eval_examples() {
        let mu = three_atoms();
        assert_relative_eq!(mu.eval(|_| true), 1.75);
        assert_eq!(mu.eval(|_| false), 0.0);
        let ball = Ellipsoid::centered_ball(2, 1.0).unwrap();
        assert_relative_eq!(mu.eval_ellipsoid(&ball), 0.75);
    }

    #[test]
    fn constructor_rejects_bad_input() {
        assert!(WeightedPointMeasure::new(vec![], vec![]).is_err());
        assert!(WeightedPointMeasure::new(vec![vec![0.0]], vec![-1.0]).is_err());
        assert!(WeightedPointMeasure::new(vec![vec![0.0], vec![0.0, 1.0]], vec![1.0, 1.0]).is_err());
        assert!(WeightedPointMeasure::new(vec![vec![f64::NAN]], vec![1.0]).is_err());
    }

    #[test]
    fn restrict_normalize_examples() {
        let mu = WeightedPointMeasure::new(vec![vec![0.0], vec![1.0]], vec![1.0, 1.0]).unwrap();
        let whole = mu.restrict_normalize(|_| true).unwrap();
        assert_eq!(whole.weights(), &[0.5, 0.5]);
        let one = mu.restrict_normalize(|p| p[0] > 0.5).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one.weights(), &[1.0]);
        assert!(matches!(mu.restrict_normalize(|p| p[0] > 5.0), Err(Error::ZeroMassRegion)));

        let cube = GeneratorSpec::cube(2, 256, 0).generate().unwrap();
        let half = cube.restrict_normalize(|p| p[0] + p[1] <= 1.0).unwrap();
        assert_relative_eq!(half.total_mass(), 1.0, epsilon = 1e-12);
        assert!(half.points().all(|p| p[0] + p[1] <= 1.0));
    }

    #[test]
    fn dilate_examples() {
        let mu = three_atoms();
        assert_eq!(mu.dilate(1.0).unwrap(), mu);
        let d = WeightedPointMeasure::dirac(vec![1.0, 0.0], 0.3).unwrap().dilate(2.0).unwrap();
        assert_eq!(d.point(0), &[2.0, 0.0]);
        assert_eq!(d.weight(0), 0.3);
        assert!(mu.dilate(0.0).is_err());
        assert!(mu.dilate(-1.0).is_err());
    }

    #[test]
    fn pushforward_examples() {
        let mu = three_atoms();
        assert_eq!(mu.pushforward(&DMatrix::identity(2, 2)).unwrap(), mu);
        let atoms = WeightedPointMeasure::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![1.0, 1.0]).unwrap();
        let p = crate::geometry::complement_projector(&[1.0, 0.0]).unwrap();
        let img = atoms.pushforward(&p).unwrap();
        assert_eq!(img.point(0), &[0.0, 0.0]);
        assert_eq!(img.point(1), &[0.0, 1.0]);
        assert!(atoms.pushforward(&DMatrix::identity(3, 3)).is_err());
    }

    #[test]
    fn radial_split_examples() {
        let mu = WeightedPointMeasure::new(vec![vec![0.0, 0.0], vec![1.0, 0.0]], vec![0.5, 0.5]).unwrap();
        let s = mu.radial_split(1.0).unwrap();
        assert_relative_eq!(s.mu0.total_mass(), 1.0);
        assert!(s.mu1.is_empty());
        assert_eq!(s.r0, 0.0);

        let two = WeightedPointMeasure::new(vec![vec![1.0], vec![2.0]], vec![0.5, 0.5]).unwrap();
        let s = two.radial_split(0.5).unwrap();
        assert_eq!(s.mu0.len(), 1);
        assert_eq!(s.mu0.point(0), &[2.0]);
        assert_eq!(s.r0, 2.0);

        let three = WeightedPointMeasure::new(vec![vec![1.0], vec![2.0], vec![3.0]], vec![1.0 / 3.0; 3])
            .unwrap();
        let s = three.radial_split(0.5).unwrap();
        assert_eq!(s.r0, 2.0);
        assert_relative_eq!(s.mu0.total_mass(), 0.5, epsilon = 1e-15);
        assert_eq!(s.mu0.point(0), &[3.0]);
        assert_relative_eq!(s.mu0.weight(0), 1.0 / 3.0);
        assert_eq!(s.mu0.point(1), &[2.0]);
        assert_relative_eq!(s.mu0.weight(1), 1.0 / 6.0, epsilon = 1e-15);
        assert_relative_eq!(s.mu1.total_mass(), 0.5, epsilon = 1e-15);

        assert!(three.radial_split(0.0).is_err());
        assert!(three.radial_split(1.5).is_err());
        assert!(three.dilate(2.0).unwrap().normalized().unwrap().radial_split(0.5).is_ok());
        let heavy = WeightedPointMeasure::dirac(vec![1.0], 2.0).unwrap();
        assert!(heavy.radial_split(0.5).is_err());
    }

    /// Independent route: sort by radius, take the prefix of mass eps.
    fn prefix_oracle(mu: &WeightedPointMeasure, eps: f64) -> (f64, f64) {
        let mut atoms: Vec<(f64, f64)> = mu.points().map(norm).zip(mu.weights().iter().copied()).collect();
        atoms.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut taken = 0.0;
        for (r, w) in atoms {
            if taken + w >= eps * (1.0 - 1e-12) {
                return (r, eps);
            }
            taken += w;
        }
        unreachable!()
    }

    proptest! {
        #[test]
        fn radial_split_invariants(seed in any::<u64>(), n in 1usize..40, eps in 0.01f64..=1.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pts: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
            let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
            let mu = WeightedPointMeasure::new(pts, w).unwrap().normalized().unwrap();
            let s = mu.radial_split(eps).unwrap();
            prop_assert!((s.mu0.total_mass() - eps).abs() < 1e-12);
            prop_assert!((s.mu1.total_mass() - (1.0 - eps)).abs() < 1e-12);
            prop_assert!(s.mu1.weights().iter().all(|&w| w >= 0.0));
            let min_r = s.mu0.points().map(norm).fold(f64::INFINITY, f64::min);
            prop_assert!((min_r - s.r0).abs() <= 1e-12 * s.r0.max(1.0));
            prop_assert!(s.mu1.points().all(|p| norm(p) <= s.r0 * (1.0 + 1e-12)));
            let (r_oracle, _) = prefix_oracle(&mu, eps);
            prop_assert!((r_oracle - s.r0).abs() <= 1e-12);
        }

        #[test]
        fn mass_is_conserved(seed in any::<u64>(), a in 0.1f64..10.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mu = WeightedPointMeasure::new(
                (0..20).map(|_| vec![rng.random_range(-1.0..1.0); 3]).collect(),
                (0..20).map(|_| rng.random_range(0.0..1.0)).collect(),
            ).unwrap();
            let l = DMatrix::from_fn(2, 3, |_, _| rng.random_range(-1.0..1.0));
            let m = mu.total_mass();
            prop_assert!((mu.pushforward(&l).unwrap().total_mass() - m).abs() <= 1e-12 * m.max(1.0));
            prop_assert!((mu.dilate(a).unwrap().total_mass() - m).abs() <= 1e-12 * m.max(1.0));
        }
    }

    #[test]
    fn mixture_examples() {
        let a = three_atoms();
        assert_eq!(mixture(std::slice::from_ref(&a), &[1.0]).unwrap(), a);
        let p = a.normalized().unwrap();
        let q = GeneratorSpec::cube(2, 16, 1).generate().unwrap();
        let m = mixture(&[p.clone(), q.clone()], &[0.5, 0.5]).unwrap();
        assert_relative_eq!(m.total_mass(), 1.0, epsilon = 1e-14);
        let region = |x: &[f64]| x[0] < 0.3;
        assert_relative_eq!(m.eval(region), 0.5 * (p.eval(region) + q.eval(region)), epsilon = 1e-14);
        assert!(mixture(std::slice::from_ref(&p), &[-1.0]).is_err());
        let other = WeightedPointMeasure::dirac(vec![0.0; 3], 1.0).unwrap();
        assert!(mixture(&[p, other], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn combinations_enumerates_all_subsets() {
        let c = combinations(5, 3);
        assert_eq!(c.len(), 10);
        assert_eq!(c[0], vec![0, 1, 2]);
        assert_eq!(c[9], vec![2, 3, 4]);
        assert_eq!(combinations(3, 3), vec![vec![0, 1, 2]]);
        assert_eq!(combinations(4, 1).len(), 4);
    }

    #[test]
    fn flat_diagnostic_on_subspace_measure_is_total_mass() {
        let spec = GeneratorSpec {
            family: Family::SubspaceLebesgue { m: 1, centered: true },
            dim: 2,
            count: 16,
            seed: 0,
        };
        let mu = spec.generate().unwrap();
        assert_relative_eq!(mu.flat_mass_diagnostic(2, 1000, 0).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn flat_diagnostic_generic_position_matches_brute_force() {
        // Oracle: every k-subset spans a (k-1)-flat; count atoms on it
        // directly through a determinant test.
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for k in 1..=3 {
            let n = 10;
            let pts: Vec<Vec<f64>> = (0..n).map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
            let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
            let mu = WeightedPointMeasure::new(pts.clone(), w.clone()).unwrap();
            let mut best: f64 = 0.0;
            for sub in combinations(n, k) {
                let mut m = 0.0;
                for j in 0..n {
                    let mut verts: Vec<Vec<f64>> = sub.iter().map(|&i| pts[i].clone()).collect();
                    verts.push(pts[j].clone());
                    let on = sub.contains(&j) || crate::geometry::simplex_det(&verts).unwrap() < 1e-9;
                    if on {
                        m += w[j];
                    }
                }
                best = best.max(m);
            }
            let mut sorted = w.clone();
            sorted.sort_by(|a, b| b.total_cmp(a));
            let heaviest_k: f64 = sorted[..k].iter().sum();
            assert_relative_eq!(best, heaviest_k, epsilon = 1e-12);
            assert_relative_eq!(mu.flat_mass_diagnostic(k, 10_000, 0).unwrap(), best, epsilon = 1e-12);
        }
    }

    #[test]
    fn flat_diagnostic_on_grid_finds_a_grid_line() {
        let mu = GeneratorSpec::cube(2, 256, 0).generate().unwrap();
        let exhaustive = mu.flat_mass_diagnostic(2, 1_000_000, 0).unwrap();
        assert_relative_eq!(exhaustive, 1.0 / 16.0, epsilon = 1e-12);
        let sampled = mu.flat_mass_diagnostic(2, 2000, 9).unwrap();
        assert_relative_eq!(sampled, 1.0 / 16.0, epsilon = 1e-12);
    }

    #[test]
    fn median_nn_distance_of_grid_is_spacing() {
        let mu = GeneratorSpec::cube(2, 256, 0).generate().unwrap();
        assert_relative_eq!(mu.median_nn_distance(), 1.0 / 16.0, epsilon = 1e-12);
    }
}
