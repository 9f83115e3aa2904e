//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use plbvp_core::{make_normal_cone, ConvexSet, MonotoneMap};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn random_vec(rng: &mut StdRng, dim: usize, radius: f64) -> Vec<f64> {
    (0..dim).map(|_| rng.gen_range(-radius..=radius)).collect()
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Every catalog map in dimension 2.
pub fn catalog_maps() -> Vec<(&'static str, MonotoneMap<f64>)> {
    vec![
        ("zero", MonotoneMap::zero(2)),
        ("identity", MonotoneMap::identity(2)),
        ("scaled(3)", MonotoneMap::scaled(2, 3.0).unwrap()),
        ("weighted-l1", MonotoneMap::weighted_l1(2, 0.7).unwrap()),
        ("orthant", make_normal_cone(ConvexSet::Orthant { dim: 2 }).unwrap()),
        ("whole", make_normal_cone(ConvexSet::Whole { dim: 2 }).unwrap()),
        (
            "box",
            make_normal_cone(ConvexSet::Box { lower: vec![-1.0, -0.5], upper: vec![1.0, 2.0] }).unwrap(),
        ),
        ("point", make_normal_cone(ConvexSet::Point(vec![0.0, 0.0])).unwrap()),
        (
            "ball",
            make_normal_cone(ConvexSet::Ball { center: vec![0.3, -0.2], radius: 1.0 }).unwrap(),
        ),
        (
            "half-space",
            make_normal_cone(ConvexSet::HalfSpace { normal: vec![1.0, 2.0], offset: 0.5 }).unwrap(),
        ),
        (
            "polyhedron",
            make_normal_cone(ConvexSet::Polyhedron {
                normals: vec![vec![1.0, 1.0], vec![-1.0, 0.0], vec![0.0, -1.0]],
                offsets: vec![1.0, 0.0, 0.0],
            })
            .unwrap(),
        ),
    ]
}

/// Projected SOR for the discrete obstacle problem on `[0, T]` with zero Dirichlet ends:
/// find `x >= 0` with `w = K x + g >= 0` and `x_i w_i = 0`, where
/// `(K x)_i = (2 x_i - x_{i-1} - x_{i+1}) / h^2`.
pub fn psor_obstacle(g: &[f64], h: f64, omega: f64, tol: f64, max_sweeps: usize) -> Vec<f64> {
    let n = g.len() - 1;
    let mut x = vec![0.0; n + 1];
    let diag = 2.0 / (h * h);
    for _ in 0..max_sweeps {
        let mut change: f64 = 0.0;
        for i in 1..n {
            let kx = (2.0 * x[i] - x[i - 1] - x[i + 1]) / (h * h);
            let w = kx + g[i];
            let next = (x[i] - omega * w / diag).max(0.0);
            change = change.max((next - x[i]).abs());
            x[i] = next;
        }
        if change < tol {
            return x;
        }
    }
    panic!("projected SOR did not converge in {max_sweeps} sweeps");
}

/// `phi(z) = |z|^{p-2} z`.
pub fn phi(p: f64, z: &[f64]) -> Vec<f64> {
    let r = norm(z);
    if r == 0.0 {
        return vec![0.0; z.len()];
    }
    let c = r.powf(p - 2.0);
    z.iter().map(|v| c * v).collect()
}
