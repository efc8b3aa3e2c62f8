//! Explicit constants of the main estimates.

use crate::geometry::{binomial, factorial};

/// `c_k = 2^{-(k-1)(k+2)/2}`: the content-ratio constant of the curvature
/// condition associated with determinant sublevel sets.
pub fn c_k(k: usize) -> f64 {
    let k = k as f64;
    2f64.powf(-(k - 1.0) * (k + 2.0) / 2.0)
}

/// `C_k = 4^{k-1} k!`: constant of `I^delta <= C_k eps` in the main theorem.
pub fn big_c_k(k: usize) -> f64 {
    4f64.powi(k as i32 - 1) * factorial(k)
}

/// `k^k / k!`: loss from passing to normalised restrictions in the corollary.
pub fn corollary_factor(k: usize) -> f64 {
    (k as f64).powi(k as i32) / factorial(k)
}

/// Sublevel-set constant of the corollary, `(k^k / k!) C_k`.
pub fn corollary_constant(k: usize) -> f64 {
    corollary_factor(k) * big_c_k(k)
}

/// `C_{k,alpha,gamma}` in
/// `T~^{-gamma}(chi_E) <= C ||mu||_0^{gamma/alpha} prod mu(E_j)^{1 - gamma/(k alpha)}`.
///
/// Per dyadic layer `2^l <= det < 2^{l+1}` the mass is at most
/// `P min(1, A 2^{alpha(l+1)})` with `P = prod mu(E_j)` and
/// `A = kappa ||mu||_0 prod mu(E_j)^{-1/k}`, `kappa = corollary_constant / c_k^alpha`.
/// The supremum of the summed series over `A^{gamma/alpha}` is attained at
/// a breakpoint of the minimum, which gives the closed form below.
pub fn rwt_constant(k: usize, alpha: f64, gamma: f64) -> f64 {
    let kappa = corollary_constant(k) * c_k(k).powf(-alpha);
    rwt_series_constant(alpha, gamma) * kappa.powf(gamma / alpha)
}

/// `2^gamma (1/(2^{alpha-gamma} - 1) + 1/(1 - 2^{-gamma}))`.
pub fn rwt_series_constant(alpha: f64, gamma: f64) -> f64 {
    2f64.powf(gamma) * (1.0 / (2f64.powf(alpha - gamma) - 1.0) + 1.0 / (1.0 - 2f64.powf(-gamma)))
}

/// `k! sqrt(C(d,k))`, re-exported for the scenario reports.
pub fn content_constant(dim: usize, k: usize) -> f64 {
    factorial(k) * binomial(dim, k).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn small_k_values() {
        assert_eq!(c_k(1), 1.0);
        assert_eq!(c_k(2), 0.25);
        assert_eq!(c_k(3), 2f64.powi(-5));
        assert_eq!(big_c_k(1), 1.0);
        assert_eq!(big_c_k(2), 8.0);
        assert_eq!(big_c_k(3), 96.0);
        assert_eq!(corollary_constant(2), 16.0);
    }

    #[test]
    fn rwt_constant_k2() {
        // kappa = 16 * 4 = 64, series part 2^{1/2} (1/(2^{1/2}-1) + 1/(1-2^{-1/2}))
        let series = 2f64.sqrt() * (1.0 / (2f64.sqrt() - 1.0) + 1.0 / (1.0 - 1.0 / 2f64.sqrt()));
        assert_relative_eq!(rwt_constant(2, 1.0, 0.5), series * 8.0, max_relative = 1e-14);
    }

    #[test]
    fn series_constant_is_the_supremum_over_a() {
        // brute-force sup_A S(A) / A^{gamma/alpha}
        let (alpha, gamma) = (1.3, 0.4);
        let s = |a: f64| -> f64 {
            (-200..200)
                .map(|l| {
                    let l = l as f64;
                    2f64.powf(-gamma * l) * (a * 2f64.powf(alpha * (l + 1.0))).min(1.0)
                })
                .sum()
        };
        let mut sup = 0.0f64;
        for i in -400..400 {
            let a = 2f64.powf(i as f64 / 37.0);
            sup = sup.max(s(a) / a.powf(gamma / alpha));
        }
        let c = rwt_series_constant(alpha, gamma);
        assert!(sup <= c * (1.0 + 1e-12));
        assert!(sup >= c * 0.999);
    }
}
