//! Search over centered ellipsoids.
//!
//! For a fixed frame and fixed lengths on all axes but one, the best length
//! of the remaining axis is found exactly: every atom has a least length
//! that admits it, so sorting those lengths and sweeping the cumulative
//! mass visits every distinct candidate.

use nalgebra::DMatrix;

use super::{length_combos, ratio_of, EllipsoidFamily, FamilyMode};
use crate::geometry::{dot, givens, reorthonormalize, Ellipsoid, MEMBERSHIP_TOL};
use crate::measure::WeightedPointMeasure;
use crate::par;

const STARTS: usize = 4;
const LENGTH_STEP: f64 = 1.189_207_115_002_721; // 2^{1/4}
const ROTATION_STEP: f64 = std::f64::consts::PI / 32.0;
const MIN_ROTATION_STEP: f64 = std::f64::consts::PI / 1024.0;
const MASS_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug)]
pub(crate) enum Objective {
    /// Maximise `mu(B) / |B|_k^alpha`.
    Ratio { k: usize, alpha: f64 },
    /// Minimise `|B|_k` subject to `mu(B) >= eps`.
    MinContent { k: usize, eps: f64 },
}

impl Objective {
    fn worst(self) -> f64 {
        match self {
            Objective::Ratio { .. } => f64::NEG_INFINITY,
            Objective::MinContent { .. } => f64::INFINITY,
        }
    }

    fn better(self, a: f64, b: f64) -> bool {
        match self {
            Objective::Ratio { .. } => a > b,
            Objective::MinContent { .. } => a < b,
        }
    }

    fn k(self) -> usize {
        match self {
            Objective::Ratio { k, .. } | Objective::MinContent { k, .. } => k,
        }
    }

    fn value(self, mass: f64, content: f64) -> f64 {
        match self {
            Objective::Ratio { alpha, .. } => ratio_of(mass, content, alpha),
            Objective::MinContent { eps, .. } => {
                if mass >= eps * (1.0 - MASS_SLACK) {
                    content
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// Exact value through the public membership test.
    fn exact(self, mu: &WeightedPointMeasure, b: &Ellipsoid) -> f64 {
        let content = b.k_content(self.k()).expect("k checked by caller");
        self.value(mu.eval_ellipsoid(b), content)
    }
}

struct Bounds {
    floor: f64,
    lmax: f64,
}

fn project(mu: &WeightedPointMeasure, frame: &DMatrix<f64>) -> Vec<f64> {
    let d = mu.dim();
    let mut z = Vec::with_capacity(mu.len() * d);
    for p in mu.points() {
        for j in 0..d {
            z.push(dot(p, frame.column(j).as_slice()));
        }
    }
    z
}

fn content_of_lengths(lengths: &[f64], k: usize) -> f64 {
    let mut sorted = lengths.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    sorted[..k].iter().product()
}

/// Best length for axis `a` with the other lengths fixed.
fn sweep(z: &[f64], w: &[f64], lengths: &[f64], a: usize, bounds: &Bounds, obj: Objective) -> Option<(f64, f64)> {
    let d = lengths.len();
    let k = obj.k();
    let mut needs: Vec<(f64, f64)> = Vec::with_capacity(w.len());
    for (i, &wi) in w.iter().enumerate() {
        if wi == 0.0 {
            continue;
        }
        let zi = &z[i * d..(i + 1) * d];
        let mut others = 0.0;
        for j in 0..d {
            if j != a {
                let t = zi[j] / lengths[j];
                others += t * t;
            }
        }
        let rem = 1.0 + MEMBERSHIP_TOL - others;
        if rem <= 0.0 {
            continue;
        }
        let need = zi[a].abs() / rem.sqrt();
        if need <= bounds.lmax {
            needs.push((need.max(bounds.floor), wi));
        }
    }
    needs.sort_by(|x, y| x.0.total_cmp(&y.0));

    let mut others: Vec<f64> = (0..d).filter(|&j| j != a).map(|j| lengths[j]).collect();
    others.sort_by(|x, y| y.total_cmp(x));
    let content = |l: f64| -> f64 {
        if k == d {
            l * others.iter().product::<f64>()
        } else if l >= others[k - 1] {
            l * others[..k - 1].iter().product::<f64>()
        } else {
            others[..k].iter().product()
        }
    };

    let mut best: Option<(f64, f64)> = match obj {
        Objective::Ratio { .. } => Some((0.0, bounds.floor.max(f64::MIN_POSITIVE))),
        Objective::MinContent { .. } => None,
    };
    let mut cum = 0.0;
    let mut i = 0;
    while i < needs.len() {
        let l = needs[i].0;
        while i < needs.len() && needs[i].0 == l {
            cum += needs[i].1;
            i += 1;
        }
        let value = obj.value(cum, content(l));
        match obj {
            Objective::Ratio { .. } => {
                if best.is_none_or(|(v, _)| value > v) {
                    best = Some((value, l));
                }
            }
            Objective::MinContent { .. } => {
                if value.is_finite() {
                    return Some((value, l));
                }
            }
        }
    }
    best
}

/// Best one-axis sweep over all axes, other lengths fixed.
fn sweep_all_axes(z: &[f64], w: &[f64], lengths: &[f64], bounds: &Bounds, obj: Objective) -> (f64, Vec<f64>) {
    let mut best = (obj.worst(), lengths.to_vec());
    for a in 0..lengths.len() {
        if let Some((v, l)) = sweep(z, w, lengths, a, bounds, obj) {
            if obj.better(v, best.0) {
                let mut ls = lengths.to_vec();
                ls[a] = l;
                best = (v, ls);
            }
        }
    }
    best
}

fn grid_members(z: &[f64], w: &[f64], d: usize, grid: &[f64], obj: Objective) -> (f64, Vec<f64>) {
    let mut best = (obj.worst(), vec![grid[grid.len() - 1]; d]);
    for combo in length_combos(grid.len(), d) {
        let lengths: Vec<f64> = combo.iter().map(|&i| grid[i]).collect();
        let inv: Vec<f64> = lengths.iter().map(|l| 1.0 / l).collect();
        let mut mass = 0.0;
        for (i, &wi) in w.iter().enumerate() {
            let zi = &z[i * d..(i + 1) * d];
            let q: f64 = zi.iter().zip(&inv).map(|(c, v)| (c * v) * (c * v)).sum();
            if q <= 1.0 + MEMBERSHIP_TOL {
                mass += wi;
            }
        }
        let v = obj.value(mass, content_of_lengths(&lengths, obj.k()));
        if obj.better(v, best.0) {
            best = (v, lengths);
        }
    }
    best
}

fn frame_best(
    mu: &WeightedPointMeasure,
    frame: &DMatrix<f64>,
    family: &EllipsoidFamily,
    bounds: &Bounds,
    obj: Objective,
) -> (f64, Vec<f64>) {
    let d = mu.dim();
    let z = project(mu, frame);
    let w = mu.weights();
    let grid = family.lengths();
    if family.mode() == FamilyMode::DoublingDyadic {
        return grid_members(&z, w, d, &grid, obj);
    }
    let mut best = (obj.worst(), vec![grid[grid.len() - 1]; d]);
    for a in 0..d {
        for combo in length_combos(grid.len(), d - 1) {
            let mut lengths = Vec::with_capacity(d);
            let mut it = combo.iter();
            for j in 0..d {
                lengths.push(if j == a { grid[0] } else { grid[*it.next().expect("d - 1 entries")] });
            }
            if let Some((v, l)) = sweep(&z, w, &lengths, a, bounds, obj) {
                if obj.better(v, best.0) {
                    lengths[a] = l;
                    best = (v, lengths);
                }
            }
        }
    }
    best
}

fn ellipsoid(frame: &DMatrix<f64>, lengths: &[f64]) -> Ellipsoid {
    let d = lengths.len();
    Ellipsoid::from_parts_unchecked(vec![0.0; d], frame.clone(), lengths.iter().map(|l| 1.0 / l).collect())
}

struct Candidate {
    frame: DMatrix<f64>,
    lengths: Vec<f64>,
    exact: f64,
}

fn local_search(
    mu: &WeightedPointMeasure,
    start: &Candidate,
    bounds: &Bounds,
    obj: Objective,
    budget: usize,
) -> Candidate {
    let d = mu.dim();
    let w = mu.weights();
    let mut frame = start.frame.clone();
    let mut lengths = start.lengths.clone();
    let mut z = project(mu, &frame);
    let mut value = sweep_all_axes(&z, w, &lengths, bounds, obj).0;
    if obj.better(start.exact, value) || !value.is_finite() {
        value = start.exact;
    }
    let mut theta = ROTATION_STEP;
    let mut steps = 0;
    while steps < budget {
        steps += 1;
        // (value, frame, lengths, projected atoms when the frame rotated)
        #[allow(clippy::type_complexity)]
        let mut best: Option<(f64, DMatrix<f64>, Vec<f64>, Option<Vec<f64>>)> = None;
        for b in 0..d {
            for f in [LENGTH_STEP, 1.0 / LENGTH_STEP] {
                let mut ls = lengths.clone();
                ls[b] = (ls[b] * f).clamp(bounds.floor.max(f64::MIN_POSITIVE), bounds.lmax);
                let (v, ls) = sweep_all_axes(&z, w, &ls, bounds, obj);
                if obj.better(v, best.as_ref().map_or(value, |c| c.0)) {
                    best = Some((v, frame.clone(), ls, None));
                }
            }
        }
        for i in 0..d {
            for j in i + 1..d {
                for t in [theta, -theta] {
                    let f2 = givens(&frame, i, j, t);
                    let z2 = project(mu, &f2);
                    let (v, ls) = sweep_all_axes(&z2, w, &lengths, bounds, obj);
                    if obj.better(v, best.as_ref().map_or(value, |c| c.0)) {
                        best = Some((v, f2, ls, Some(z2)));
                    }
                }
            }
        }
        match best {
            Some((v, f2, ls, z2)) if improves(obj, v, value) => {
                value = v;
                lengths = ls;
                if let Some(z2) = z2 {
                    frame = reorthonormalize(&f2);
                    z = if frame == f2 { z2 } else { project(mu, &frame) };
                }
            }
            _ => {
                if theta / 2.0 < MIN_ROTATION_STEP || d < 2 {
                    break;
                }
                theta /= 2.0;
            }
        }
    }
    let exact = obj.exact(mu, &ellipsoid(&frame, &lengths));
    Candidate { frame, lengths, exact }
}

fn improves(obj: Objective, new: f64, old: f64) -> bool {
    if !old.is_finite() {
        return obj.better(new, old);
    }
    match obj {
        Objective::Ratio { .. } => new > old * (1.0 + 1e-12),
        Objective::MinContent { .. } => new < old * (1.0 - 1e-12),
    }
}

/// Best family member (exact value) after optional refinement.
pub(crate) fn optimise(mu: &WeightedPointMeasure, family: &EllipsoidFamily, obj: Objective, refine: usize) -> (Ellipsoid, f64) {
    let bounds = Bounds { floor: family.floor(), lmax: family.max_length() };
    let per_frame: Vec<Candidate> = par::map_slice(family.frames(), |frame| {
        let (_, lengths) = frame_best(mu, frame, family, &bounds, obj);
        let exact = obj.exact(mu, &ellipsoid(frame, &lengths));
        Candidate { frame: frame.clone(), lengths, exact }
    });
    let mut best = pick(&per_frame, obj, None).expect("family has frames");
    if refine > 0 && family.mode() == FamilyMode::ScaleFlooredSearch {
        let mut order: Vec<usize> = (0..per_frame.len()).collect();
        order.sort_by(|&a, &b| {
            let (x, y) = (per_frame[a].exact, per_frame[b].exact);
            let ord = match obj {
                Objective::Ratio { .. } => y.total_cmp(&x),
                Objective::MinContent { .. } => x.total_cmp(&y),
            };
            ord.then(a.cmp(&b))
        });
        let starts: Vec<&Candidate> = order.iter().take(STARTS).map(|&i| &per_frame[i]).collect();
        let refined: Vec<Candidate> = par::map_slice(&starts, |c| local_search(mu, c, &bounds, obj, refine));
        if let Some(r) = pick(&refined, obj, Some(best.exact)) {
            best = r;
        }
    }
    let witness = ellipsoid(&best.frame, &best.lengths);
    (witness, best.exact)
}

/// First candidate with the best exact value, strictly better than `floor_value` if given.
fn pick(cands: &[Candidate], obj: Objective, floor_value: Option<f64>) -> Option<Candidate> {
    let mut best: Option<&Candidate> = None;
    for c in cands {
        let reference = best.map(|b| b.exact).or(floor_value);
        if reference.is_none_or(|r| obj.better(c.exact, r)) {
            best = Some(c);
        }
    }
    best.map(|c| Candidate { frame: c.frame.clone(), lengths: c.lengths.clone(), exact: c.exact })
}
