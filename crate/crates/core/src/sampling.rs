//! Deterministic low-discrepancy point sets used by the hypothesis checkers.
//!
//! Everything here is reproducible: the same arguments always give the same
//! points in the same order, so checker reductions are deterministic.

use crate::base::{norm, scale};
use crate::scalar::Scalar;

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Radical inverse of `index` in `base`.
pub fn van_der_corput(mut index: u64, base: u64) -> f64 {
    let mut result = 0.0;
    let mut f = 1.0 / base as f64;
    while index > 0 {
        result += f * (index % base) as f64;
        index /= base;
        f /= base as f64;
    }
    result
}

/// Halton point in `[0,1)^dim`. Dimensions beyond the prime table reuse bases
/// with a scrambled index so the sequence stays deterministic.
pub fn halton(index: u64, dim: usize) -> Vec<f64> {
    (0..dim)
        .map(|k| {
            let base = PRIMES[k % PRIMES.len()];
            let idx = index + (k / PRIMES.len()) as u64 * 7919;
            van_der_corput(idx, base)
        })
        .collect()
}

/// Halton points in the box `[-radius, radius]^dim`, skipping index 0 (the corner).
pub fn halton_box<S: Scalar>(count: usize, dim: usize, radius: S, seed: u64) -> Vec<Vec<S>> {
    (0..count as u64)
        .map(|k| {
            halton(seed + k + 1, dim)
                .into_iter()
                .map(|u| radius * S::lit(2.0 * u - 1.0))
                .collect()
        })
        .collect()
}

/// Points on the sphere of the given radius in R^dim.
///
/// The set always starts with the `2 dim` signed coordinate directions, then
/// appends `count` spiral points: equally spaced angles for `dim = 2`, the
/// generalized (Fibonacci) spiral for `dim = 3`, and radially normalized Halton
/// points otherwise.
pub fn sphere_points<S: Scalar>(dim: usize, radius: S, count: usize, seed: u64) -> Vec<Vec<S>> {
    let mut pts = Vec::with_capacity(2 * dim + count);
    for k in 0..dim {
        for sign in [1.0, -1.0] {
            let mut v = vec![S::zero(); dim];
            v[k] = radius * S::lit(sign);
            pts.push(v);
        }
    }
    match dim {
        0 | 1 => {}
        2 => {
            let offset = van_der_corput(seed, 2);
            for k in 0..count {
                let theta = 2.0 * std::f64::consts::PI * ((k as f64 + offset) / count as f64);
                pts.push(vec![radius * S::lit(theta.cos()), radius * S::lit(theta.sin())]);
            }
        }
        3 => {
            let golden = std::f64::consts::PI * (3.0 - 5.0f64.sqrt());
            let offset = van_der_corput(seed, 3);
            for k in 0..count {
                let z = 1.0 - 2.0 * (k as f64 + 0.5) / count as f64;
                let r = (1.0 - z * z).max(0.0).sqrt();
                let phi = golden * k as f64 + 2.0 * std::f64::consts::PI * offset;
                pts.push(vec![
                    radius * S::lit(r * phi.cos()),
                    radius * S::lit(r * phi.sin()),
                    radius * S::lit(z),
                ]);
            }
        }
        _ => {
            let mut index = seed + 1;
            while pts.len() < 2 * dim + count {
                let raw: Vec<S> = halton(index, dim)
                    .into_iter()
                    .map(|u| S::lit(2.0 * u - 1.0))
                    .collect();
                index += 1;
                let r = norm(&raw);
                if r > S::lit(1e-3) {
                    pts.push(scale(radius / r, &raw));
                }
            }
        }
    }
    pts
}

/// Uniform sample times `t_j = j T / (count - 1)` (just `0` when `count == 1`).
pub fn time_samples<S: Scalar>(horizon: S, count: usize) -> Vec<S> {
    if count <= 1 {
        return vec![S::zero()];
    }
    let last = count - 1;
    (0..count)
        .map(|j| {
            if j == last {
                horizon
            } else {
                S::from_usize_lossy(j) * horizon / S::from_usize_lossy(last)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn van_der_corput_base_two() {
        assert_eq!(van_der_corput(1, 2), 0.5);
        assert_eq!(van_der_corput(2, 2), 0.25);
        assert_eq!(van_der_corput(3, 2), 0.75);
    }

    #[test]
    fn sphere_points_have_requested_radius() {
        for dim in 1..6 {
            let pts = sphere_points::<f64>(dim, 2.5, 20, 0);
            assert!(pts.len() >= 2 * dim);
            for p in &pts {
                assert!((norm(p) - 2.5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        assert_eq!(sphere_points::<f64>(4, 1.0, 30, 3), sphere_points::<f64>(4, 1.0, 30, 3));
        assert_eq!(halton_box::<f64>(10, 3, 1.0, 0), halton_box::<f64>(10, 3, 1.0, 0));
    }

    #[test]
    fn time_samples_cover_interval() {
        let ts = time_samples(2.0, 5);
        assert_eq!(ts, vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        assert_eq!(time_samples(2.0, 1), vec![0.0]);
    }
}
