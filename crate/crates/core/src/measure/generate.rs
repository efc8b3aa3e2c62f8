use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::WeightedPointMeasure;
use crate::error::{Error, Result};
use crate::geometry::norm;

/// Point placement for the cube family.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CubeSampler {
    /// Cell centers of a regular `n^d` grid.
    #[default]
    Grid,
    /// First `count` points of the Halton sequence.
    Halton,
}

/// Measure families used as scenario inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    /// Lebesgue measure on `[0,1]^d` (or `[-1/2,1/2]^d` when centered).
    CubeLebesgue {
        #[serde(default)]
        sampler: CubeSampler,
        #[serde(default)]
        centered: bool,
    },
    /// Uniform measure on the unit sphere `S^{d-1}`.
    SphereUniform,
    /// Lebesgue measure on the first `m` coordinate axes, grid on `[0,1]^m`
    /// (or `[-1/2,1/2]^m` when centered).
    SubspaceLebesgue {
        m: usize,
        #[serde(default)]
        centered: bool,
    },
    /// `t -> (t, t^2, ..., t^d)` on a midpoint grid of `[t_min, t_max]`,
    /// weights proportional to `|t|^density_power`.
    MomentCurve {
        #[serde(default = "default_t_min")]
        t_min: f64,
        #[serde(default = "default_t_max")]
        t_max: f64,
        #[serde(default)]
        density_power: f64,
    },
}

fn default_t_min() -> f64 {
    -1.0
}

fn default_t_max() -> f64 {
    1.0
}

/// Seeded description of a generated measure. Every family produces a
/// probability measure, bit-identical across runs for a given spec.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    #[serde(flatten)]
    pub family: Family,
    pub dim: usize,
    /// Total number of atoms. Grid families require a perfect power.
    pub count: usize,
    #[serde(default)]
    pub seed: u64,
}

impl GeneratorSpec {
    /// Regular grid on the unit cube.
    pub fn cube(dim: usize, count: usize, seed: u64) -> Self {
        Self { family: Family::CubeLebesgue { sampler: CubeSampler::Grid, centered: false }, dim, count, seed }
    }

    pub fn sphere(dim: usize, count: usize, seed: u64) -> Self {
        Self { family: Family::SphereUniform, dim, count, seed }
    }

    pub fn generate(&self) -> Result<WeightedPointMeasure> {
        if self.dim == 0 {
            return Err(Error::InvalidGenerator("dim must be >= 1".into()));
        }
        if self.count == 0 {
            return Err(Error::InvalidGenerator("count must be >= 1".into()));
        }
        let d = self.dim;
        let n = self.count;
        let points: Vec<Vec<f64>> = match &self.family {
            Family::CubeLebesgue { sampler, centered } => {
                let shift = if *centered { 0.5 } else { 0.0 };
                match sampler {
                    CubeSampler::Grid => grid(d, per_axis(n, d)?)
                        .into_iter()
                        .map(|p| p.into_iter().map(|c| c - shift).collect())
                        .collect(),
                    CubeSampler::Halton => {
                        (1..=n).map(|i| halton(i, d).into_iter().map(|c| c - shift).collect()).collect()
                    }
                }
            }
            Family::SphereUniform => {
                if d < 2 {
                    return Err(Error::InvalidGenerator("sphere needs dim >= 2".into()));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                (0..n)
                    .map(|_| loop {
                        let g: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
                        let r = norm(&g);
                        if r > 1e-8 {
                            break g.into_iter().map(|x| x / r).collect();
                        }
                    })
                    .collect()
            }
            Family::SubspaceLebesgue { m, centered } => {
                if *m == 0 || *m > d {
                    return Err(Error::InvalidGenerator(format!("subspace dimension {m} must lie in 1..={d}")));
                }
                let shift = if *centered { 0.5 } else { 0.0 };
                grid(*m, per_axis(n, *m)?)
                    .into_iter()
                    .map(|p| {
                        let mut full = vec![0.0; d];
                        for (f, c) in full.iter_mut().zip(p) {
                            *f = c - shift;
                        }
                        full
                    })
                    .collect()
            }
            Family::MomentCurve { t_min, t_max, density_power } => {
                if !(t_min < t_max) || !t_min.is_finite() || !t_max.is_finite() {
                    return Err(Error::InvalidGenerator("moment curve needs t_min < t_max".into()));
                }
                let weights: Vec<f64> = (0..n)
                    .map(|i| {
                        let t = t_min + (i as f64 + 0.5) / n as f64 * (t_max - t_min);
                        t.abs().powf(*density_power)
                    })
                    .collect();
                let pts = (0..n)
                    .map(|i| {
                        let t = t_min + (i as f64 + 0.5) / n as f64 * (t_max - t_min);
                        (1..=d).map(|p| t.powi(p as i32)).collect()
                    })
                    .collect();
                return WeightedPointMeasure::new(pts, weights)?.normalized();
            }
        };
        WeightedPointMeasure::uniform(points)
    }
}

fn per_axis(count: usize, dim: usize) -> Result<usize> {
    let side = (count as f64).powf(1.0 / dim as f64).round() as usize;
    if side.checked_pow(dim as u32) != Some(count) {
        return Err(Error::InvalidGenerator(format!("grid count {count} is not a perfect {dim}-th power")));
    }
    Ok(side)
}

/// Cell centers `(i + 1/2) / n` of the `n^d` grid, last axis fastest.
fn grid(dim: usize, n: usize) -> Vec<Vec<f64>> {
    let total = n.pow(dim as u32);
    (0..total)
        .map(|mut idx| {
            let mut p = vec![0.0; dim];
            for c in p.iter_mut().rev() {
                *c = ((idx % n) as f64 + 0.5) / n as f64;
                idx /= n;
            }
            p
        })
        .collect()
}

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn halton(index: usize, dim: usize) -> Vec<f64> {
    (0..dim)
        .map(|j| {
            let base = PRIMES[j % PRIMES.len()];
            let mut f = 1.0;
            let mut r = 0.0;
            let mut i = index as u64;
            while i > 0 {
                f /= base as f64;
                r += f * (i % base) as f64;
                i /= base;
            }
            r
        })
        .collect()
}
