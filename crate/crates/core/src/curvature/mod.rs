//! Curvature constants over finite ellipsoid families, Gaussian testing,
//! the slab criterion and the family-restricted maximal function.
//!
//! All families are centered. A family fixes a finite set of frames and a
//! dyadic semi-length grid above a floor `h`; the default floor is the
//! median nearest-neighbour distance of the cloud, below which an atomic
//! measure has unbounded curvature ratios.

mod gaussian;
mod maximal;
mod search;
mod slab;

pub use gaussian::{dyadic_layer_constant, gaussian_content_check, gaussian_integral, layer_cake_check, GaussianContent, LayerCake};
pub use maximal::{maximal_function, maximal_inequality, weak_lp_norm, MaximalInequality};
pub use slab::{slab_constant, slab_implication, SlabConstant, SlabImplication};

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{random_rotation, reorthonormalize, Ellipsoid, ORTHONORMAL_TOL};
use crate::measure::WeightedPointMeasure;
use crate::par;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyMode {
    /// Continuous semi-lengths in `[floor, 2^j_max]`, searched by exact
    /// one-axis sweeps from the dyadic grid plus local refinement.
    #[default]
    ScaleFlooredSearch,
    /// Exactly the dyadic members `2^j`, closed under `B -> 2B` up to `j_max`.
    DoublingDyadic,
}

/// Finite family of centered ellipsoids.
#[derive(Clone, Debug, PartialEq)]
pub struct EllipsoidFamily {
    mode: FamilyMode,
    frames: Vec<DMatrix<f64>>,
    j_min: i32,
    j_max: i32,
    floor: f64,
}

impl EllipsoidFamily {
    pub fn new(mode: FamilyMode, frames: Vec<DMatrix<f64>>, j_min: i32, j_max: i32, floor: f64) -> Result<Self> {
        let first = frames.first().ok_or_else(|| invalid("family needs at least one frame"))?;
        let d = first.nrows();
        for f in &frames {
            if f.nrows() != d || f.ncols() != d {
                return Err(Error::DimensionMismatch { expected: d, got: f.nrows() });
            }
            if crate::geometry::orthonormality_defect(f) > ORTHONORMAL_TOL {
                return Err(invalid("family frames must be orthonormal"));
            }
        }
        if !(floor >= 0.0 && floor.is_finite()) {
            return Err(invalid("floor must be finite and >= 0"));
        }
        let family = Self { mode, frames, j_min, j_max, floor };
        if family.lengths().is_empty() {
            return Err(invalid("empty length grid"));
        }
        Ok(family)
    }

    pub fn mode(&self) -> FamilyMode {
        self.mode
    }

    pub fn frames(&self) -> &[DMatrix<f64>] {
        &self.frames
    }

    pub fn dim(&self) -> usize {
        self.frames[0].nrows()
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn j_range(&self) -> (i32, i32) {
        (self.j_min, self.j_max)
    }

    /// Largest admissible semi-length.
    pub fn max_length(&self) -> f64 {
        2f64.powi(self.j_max)
    }

    /// Grid semi-lengths in increasing order: `2^j >= floor`, with the
    /// floor itself prepended in scale-floored mode.
    pub fn lengths(&self) -> Vec<f64> {
        let mut out = Vec::new();
        if self.mode == FamilyMode::ScaleFlooredSearch && self.floor > 0.0 && self.floor <= self.max_length() {
            out.push(self.floor);
        }
        for j in self.j_min..=self.j_max {
            let l = 2f64.powi(j);
            if l >= self.floor && out.last() != Some(&l) {
                out.push(l);
            }
        }
        out
    }

    /// Number of grid members.
    pub fn size(&self) -> usize {
        self.frames.len() * self.lengths().len().pow(self.dim() as u32)
    }

    /// Every grid member, frame-major, last axis fastest.
    pub fn members(&self) -> Vec<Ellipsoid> {
        let grid = self.lengths();
        let d = self.dim();
        let mut out = Vec::with_capacity(self.size());
        for frame in &self.frames {
            for combo in length_combos(grid.len(), d) {
                let inv = combo.iter().map(|&i| 1.0 / grid[i]).collect();
                out.push(Ellipsoid::from_parts_unchecked(vec![0.0; d], frame.clone(), inv));
            }
        }
        out
    }

    /// Same frames and floor with a different length range.
    pub fn with_j_range(&self, j_min: i32, j_max: i32) -> Result<Self> {
        Self::new(self.mode, self.frames.clone(), j_min, j_max, self.floor)
    }

    pub fn with_floor(&self, floor: f64) -> Result<Self> {
        Self::new(self.mode, self.frames.clone(), self.j_min, self.j_max, floor)
    }

    pub fn with_mode(&self, mode: FamilyMode) -> Self {
        Self { mode, ..self.clone() }
    }
}

/// All index tuples of `[0, n)^d`, last axis fastest.
pub(crate) fn length_combos(n: usize, d: usize) -> Vec<Vec<usize>> {
    let total = n.pow(d as u32);
    (0..total)
        .map(|mut idx| {
            let mut c = vec![0; d];
            for slot in c.iter_mut().rev() {
                *slot = idx % n;
                idx /= n;
            }
            c
        })
        .collect()
}

fn default_random_frames() -> usize {
    64
}

fn default_pca_frames() -> usize {
    8
}

/// Data-adapted family construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    #[serde(default)]
    pub mode: FamilyMode,
    #[serde(default = "default_random_frames")]
    pub random_frames: usize,
    #[serde(default = "default_pca_frames")]
    pub pca_frames: usize,
    #[serde(default)]
    pub seed: u64,
    /// Minimal semi-length; defaults to the median nearest-neighbour distance.
    #[serde(default)]
    pub floor: Option<f64>,
    /// Smallest grid exponent; defaults to `ceil(log2 floor)`.
    #[serde(default)]
    pub j_min: Option<i32>,
    /// Largest grid exponent; defaults to `ceil(log2 max_norm) + 1`.
    #[serde(default)]
    pub j_max: Option<i32>,
}

impl Default for FamilySpec {
    fn default() -> Self {
        Self {
            mode: FamilyMode::default(),
            random_frames: default_random_frames(),
            pca_frames: default_pca_frames(),
            seed: 0,
            floor: None,
            j_min: None,
            j_max: None,
        }
    }
}

impl FamilySpec {
    pub fn build(&self, mu: &WeightedPointMeasure) -> Result<EllipsoidFamily> {
        let d = mu.dim();
        let floor = match self.floor {
            Some(h) => h,
            None => mu.median_nn_distance(),
        };
        if !(floor >= 0.0 && floor.is_finite()) {
            return Err(invalid("floor must be finite and >= 0"));
        }
        let r = mu.max_norm();
        let j_max = self.j_max.unwrap_or_else(|| if r > 0.0 { r.log2().ceil() as i32 + 1 } else { 0 });
        let j_min = self.j_min.unwrap_or_else(|| if floor > 0.0 { floor.log2().ceil() as i32 } else { j_max - 20 });
        if j_min > j_max {
            return Err(invalid(format!("empty exponent range [{j_min}, {j_max}]")));
        }
        let mut frames = vec![DMatrix::identity(d, d)];
        if d > 1 {
            frames.extend(pca_frames(mu, self.pca_frames, self.seed));
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            rng.set_stream(1);
            frames.extend((0..self.random_frames).map(|_| random_rotation(d, &mut rng)));
        }
        EllipsoidFamily::new(self.mode, frames, j_min, j_max, floor)
    }
}

/// Principal frames of the second moments about the origin of random atom
/// subsets, columns ordered by decreasing eigenvalue.
fn pca_frames(mu: &WeightedPointMeasure, count: usize, seed: u64) -> Vec<DMatrix<f64>> {
    let d = mu.dim();
    let n = mu.len();
    let size = (n / 4).max(d + 1).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2);
    (0..count)
        .filter_map(|_| {
            let idx = sample(&mut rng, n, size);
            let mut m = DMatrix::<f64>::zeros(d, d);
            for i in idx.iter() {
                let p = mu.point(i);
                let w = mu.weight(i);
                for r in 0..d {
                    for c in 0..d {
                        m[(r, c)] += w * p[r] * p[c];
                    }
                }
            }
            let eig = m.symmetric_eigen();
            let mut order: Vec<usize> = (0..d).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
            let frame = DMatrix::from_fn(d, d, |r, c| eig.eigenvectors[(r, order[c])]);
            let frame = reorthonormalize(&frame);
            (crate::geometry::orthonormality_defect(&frame) <= ORTHONORMAL_TOL).then_some(frame)
        })
        .collect()
}

/// `mu(B) / |B|_k^alpha`, with `0/0 = 0` and `m/0 = inf` for `m > 0`.
pub fn curvature_ratio(mu: &WeightedPointMeasure, b: &Ellipsoid, k: usize, alpha: f64) -> Result<f64> {
    if b.dim() != mu.dim() {
        return Err(Error::DimensionMismatch { expected: mu.dim(), got: b.dim() });
    }
    if !(alpha > 0.0) {
        return Err(invalid("alpha must be positive"));
    }
    let content = b.k_content(k)?;
    let mass = mu.eval_ellipsoid(b);
    Ok(ratio_of(mass, content, alpha))
}

pub(crate) fn ratio_of(mass: f64, content: f64, alpha: f64) -> f64 {
    if mass == 0.0 || content == f64::INFINITY {
        0.0
    } else if content == 0.0 {
        f64::INFINITY
    } else {
        mass / content.powf(alpha)
    }
}

/// Certified lower bound for `||mu||_0` with its witness.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureEstimate {
    pub k: usize,
    pub alpha: f64,
    /// Curvature ratio of `witness`.
    pub constant: f64,
    pub witness: Ellipsoid,
    pub family_size: usize,
}

/// Upper bound for the least `k`-content of a centered ellipsoid of mass
/// at least `eps`, with its witness.
#[derive(Clone, Debug, PartialEq)]
pub struct ContentWitness {
    pub delta_hat: f64,
    pub witness: Ellipsoid,
    pub mass: f64,
}

fn check_k(mu: &WeightedPointMeasure, k: usize) -> Result<()> {
    if k == 0 || k > mu.dim() {
        return Err(Error::KExceedsDimension { k, dim: mu.dim() });
    }
    Ok(())
}

fn check_family(mu: &WeightedPointMeasure, family: &EllipsoidFamily) -> Result<()> {
    if family.dim() != mu.dim() {
        return Err(Error::DimensionMismatch { expected: mu.dim(), got: family.dim() });
    }
    Ok(())
}

/// Maximise `mu(B) / |B|_k^alpha` over the family, then refine with up to
/// `refine` local-search steps from the best few frames. With
/// `refine = 0` the result is monotone under enlarging the family.
pub fn estimate_curvature_constant(
    mu: &WeightedPointMeasure,
    k: usize,
    alpha: f64,
    family: &EllipsoidFamily,
    refine: usize,
) -> Result<CurvatureEstimate> {
    check_k(mu, k)?;
    check_family(mu, family)?;
    if !(alpha > 0.0) {
        return Err(invalid("alpha must be positive"));
    }
    let objective = search::Objective::Ratio { k, alpha };
    let (witness, value) = search::optimise(mu, family, objective, refine);
    Ok(CurvatureEstimate { k, alpha, constant: value, witness, family_size: family.size() })
}

/// Minimise `|B|_k` over family members with `mu(B) >= eps`.
pub fn min_content_at_mass(
    mu: &WeightedPointMeasure,
    k: usize,
    eps: f64,
    family: &EllipsoidFamily,
    refine: usize,
) -> Result<ContentWitness> {
    check_k(mu, k)?;
    check_family(mu, family)?;
    let total = mu.total_mass();
    if !(eps > 0.0) {
        return Err(invalid("eps must be positive"));
    }
    if eps > total * (1.0 + 1e-12) {
        return Err(Error::MassExceedsTotal { requested: eps, total });
    }
    let objective = search::Objective::MinContent { k, eps };
    let (witness, delta_hat) = search::optimise(mu, family, objective, refine);
    if !delta_hat.is_finite() {
        return Err(invalid(format!("no family member reaches mass {eps}")));
    }
    let mass = mu.eval_ellipsoid(&witness);
    Ok(ContentWitness { delta_hat, witness, mass })
}

/// Curvature constant per ellipsoid family member, in member order.
pub fn family_ratios(mu: &WeightedPointMeasure, k: usize, alpha: f64, members: &[Ellipsoid]) -> Result<Vec<f64>> {
    check_k(mu, k)?;
    let out = par::map_slice(members, |b| curvature_ratio(mu, b, k, alpha));
    out.into_iter().collect()
}
