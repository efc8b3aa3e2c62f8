use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_weight_vectors, EvalOptions, FunctionalResult};
use crate::error::{invalid, Result};
use crate::geometry::DetKernel;
use crate::measure::WeightedPointMeasure;
use crate::par;

const CHUNK: usize = 4096;

/// Running mean and centred second moment, merged in chunk order.
#[derive(Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
    excluded: u64,
    excluded_weight: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
    }

    fn merge(&mut self, o: &Moments) {
        if o.n == 0.0 {
            return;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        self.mean += d * o.n / n;
        self.m2 += o.m2 + d * d * self.n * o.n / n;
        self.n = n;
        self.excluded += o.excluded;
        self.excluded_weight += o.excluded_weight;
    }
}

/// Unbiased estimate of `T^{-gamma}(f_1, ..., f_{k+1})` from uniformly
/// drawn index tuples. Sample chunks use independent ChaCha streams, so the
/// estimate depends only on `(seed, samples)`.
pub fn monte_carlo_t(
    mu: &WeightedPointMeasure,
    k: usize,
    gamma: f64,
    fs: &[&[f64]],
    samples: usize,
    seed: u64,
    opts: &EvalOptions,
) -> Result<FunctionalResult> {
    if k == 0 {
        return Err(invalid("k must be >= 1"));
    }
    if samples < 2 {
        return Err(invalid("need at least two samples"));
    }
    check_weight_vectors(mu, fs, k + 1)?;
    let n = mu.len();
    let tau = opts.tau_for(mu.max_norm(), k);
    let scale = (n as f64).powi(k as i32 + 1);
    let chunks = samples.div_ceil(CHUNK);
    let partials = par::map_range(chunks, |c| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(c as u64);
        let mut kern = DetKernel::new(mu.dim(), k);
        let mut diffs = Vec::with_capacity(k * mu.dim());
        let mut pts: Vec<&[f64]> = Vec::with_capacity(k + 1);
        let mut m = Moments::default();
        let len = CHUNK.min(samples - c * CHUNK);
        for _ in 0..len {
            pts.clear();
            let mut w = scale;
            for f in fs {
                let i = rng.random_range(0..n);
                w *= f[i] * mu.weight(i);
                pts.push(mu.point(i));
            }
            let det = kern.simplex_det(&pts, &mut diffs);
            if det > tau {
                m.push(if gamma == 0.0 { w } else { w * det.powf(-gamma) });
            } else {
                m.excluded += 1;
                m.excluded_weight += w;
                m.push(0.0);
            }
        }
        m
    });
    let mut total = Moments::default();
    for p in &partials {
        total.merge(p);
    }
    let var = total.m2 / (total.n - 1.0);
    Ok(FunctionalResult {
        value: total.mean,
        tuples_total: samples as u64,
        tuples_excluded: total.excluded,
        excluded_mass: total.excluded_weight / total.n,
        stderr: Some((var / total.n).sqrt()),
    })
}
