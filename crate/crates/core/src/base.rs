//! Shared vocabulary: vectors in R^N, the exponent pair (p, p'), uniform grids,
//! trajectories sampled on them, the homeomorphism phi and discrete norms.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub fn norm<S: Scalar>(a: &[S]) -> S {
    dot(a, a).sqrt()
}

pub fn norm_inf<S: Scalar>(a: &[S]) -> S {
    a.iter().fold(S::zero(), |m, &x| m.max(x.abs()))
}

pub fn sub<S: Scalar>(a: &[S], b: &[S]) -> Vec<S> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

pub fn add<S: Scalar>(a: &[S], b: &[S]) -> Vec<S> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x + y).collect()
}

pub fn scale<S: Scalar>(alpha: S, a: &[S]) -> Vec<S> {
    a.iter().map(|&x| alpha * x).collect()
}

/// `a + alpha * b`
pub fn axpy<S: Scalar>(a: &[S], alpha: S, b: &[S]) -> Vec<S> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x + alpha * y).collect()
}

pub fn distance<S: Scalar>(a: &[S], b: &[S]) -> S {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum::<S>()
        .sqrt()
}

/// The exponent `p >= 2` of the p-Laplacian together with its conjugate `p' = p / (p - 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponent<S> {
    p: S,
    p_conj: S,
}

impl<S: Scalar> Exponent<S> {
    pub fn new(p: S) -> Result<Self> {
        if !p.is_finite() || p < S::lit(2.0) {
            return Err(Error::invalid(format!("p must be >= 2, got {p}")));
        }
        Ok(Self {
            p,
            p_conj: p / (p - S::one()),
        })
    }

    pub fn p(&self) -> S {
        self.p
    }

    pub fn conjugate(&self) -> S {
        self.p_conj
    }

    /// `phi(zeta) = |zeta|^{p-2} zeta`, with `phi(0) = 0`.
    pub fn phi(&self, zeta: &[S]) -> Vec<S> {
        power_map(self.p - S::lit(2.0), zeta)
    }

    /// `phi^{-1}(eta) = |eta|^{p'-2} eta`.
    pub fn phi_inverse(&self, eta: &[S]) -> Vec<S> {
        power_map(self.p_conj - S::lit(2.0), eta)
    }

    /// Smoothed flux `(|zeta|^2 + eps^2)^{(p-2)/2} zeta`. Used only for linearization.
    pub fn phi_smoothed(&self, zeta: &[S], eps: S) -> Vec<S> {
        let factor = self.smoothed_factor(zeta, eps);
        scale(factor, zeta)
    }

    /// Jacobian of [`Exponent::phi_smoothed`], row-major `N x N`.
    ///
    /// `D = s^q I + 2 q s^{q-1} zeta zeta^T` with `s = |zeta|^2 + eps^2`, `q = (p-2)/2`.
    pub fn phi_smoothed_jacobian(&self, zeta: &[S], eps: S) -> Vec<S> {
        let n = zeta.len();
        let two = S::lit(2.0);
        let q = (self.p - two) / two;
        let s = dot(zeta, zeta) + eps * eps;
        let mut jac = vec![S::zero(); n * n];
        if q == S::zero() {
            for i in 0..n {
                jac[i * n + i] = S::one();
            }
            return jac;
        }
        if s == S::zero() {
            // p > 2 and eps = 0 at the origin: the derivative vanishes.
            return jac;
        }
        let base = s.powf(q);
        let rank_one = two * q * s.powf(q - S::one());
        for i in 0..n {
            for j in 0..n {
                jac[i * n + j] = rank_one * zeta[i] * zeta[j];
            }
            jac[i * n + i] = jac[i * n + i] + base;
        }
        jac
    }

    fn smoothed_factor(&self, zeta: &[S], eps: S) -> S {
        let two = S::lit(2.0);
        let q = (self.p - two) / two;
        if q == S::zero() {
            return S::one();
        }
        let s = dot(zeta, zeta) + eps * eps;
        if s == S::zero() {
            S::zero()
        } else {
            s.powf(q)
        }
    }
}

fn power_map<S: Scalar>(power: S, v: &[S]) -> Vec<S> {
    if power == S::zero() {
        return v.to_vec();
    }
    let r = norm(v);
    if r == S::zero() {
        return vec![S::zero(); v.len()];
    }
    scale(r.powf(power), v)
}

/// Uniform grid `t_i = i T / n` on `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid<S> {
    horizon: S,
    intervals: usize,
    h: S,
}

impl<S: Scalar> Grid<S> {
    pub fn new(horizon: S, intervals: usize) -> Result<Self> {
        if !(horizon > S::zero()) || !horizon.is_finite() {
            return Err(Error::invalid(format!("horizon must be positive, got {horizon}")));
        }
        if intervals < 2 {
            return Err(Error::invalid(format!(
                "grid needs at least 2 intervals, got {intervals}"
            )));
        }
        Ok(Self {
            horizon,
            intervals,
            h: horizon / S::from_usize_lossy(intervals),
        })
    }

    pub fn horizon(&self) -> S {
        self.horizon
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn step(&self) -> S {
        self.h
    }

    pub fn node(&self, i: usize) -> S {
        if i == self.intervals {
            return self.horizon;
        }
        S::from_usize_lossy(i) * self.horizon / S::from_usize_lossy(self.intervals)
    }

    pub fn nodes(&self) -> impl Iterator<Item = S> + '_ {
        (0..=self.intervals).map(move |i| self.node(i))
    }

    /// Trapezoidal weight of node `i` (without the factor `h`).
    pub fn trapezoid_weight(&self, i: usize) -> S {
        if i == 0 || i == self.intervals {
            S::lit(0.5)
        } else {
            S::one()
        }
    }
}

/// Nodal values `x_0 .. x_n` in R^N on a [`Grid`], stored node-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<S> {
    grid: Grid<S>,
    dim: usize,
    values: Vec<S>,
}

impl<S: Scalar> Trajectory<S> {
    pub fn zeros(grid: Grid<S>, dim: usize) -> Self {
        Self {
            grid,
            dim,
            values: vec![S::zero(); dim * (grid.intervals() + 1)],
        }
    }

    pub fn from_flat(grid: Grid<S>, dim: usize, values: Vec<S>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        Error::check_dim(dim * (grid.intervals() + 1), values.len())?;
        Ok(Self { grid, dim, values })
    }

    pub fn from_nodes(grid: Grid<S>, nodes: &[Vec<S>]) -> Result<Self> {
        Error::check_dim(grid.intervals() + 1, nodes.len())?;
        let dim = nodes.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(dim * nodes.len());
        for v in nodes {
            Error::check_dim(dim, v.len())?;
            values.extend_from_slice(v);
        }
        Self::from_flat(grid, dim, values)
    }

    /// Samples `f(t_i)` at every node.
    pub fn from_fn(grid: Grid<S>, dim: usize, f: impl Fn(S) -> Vec<S>) -> Result<Self> {
        let nodes: Vec<Vec<S>> = grid.nodes().map(f).collect();
        for v in &nodes {
            Error::check_dim(dim, v.len())?;
        }
        Self::from_nodes(grid, &nodes)
    }

    pub fn grid(&self) -> &Grid<S> {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.grid.intervals() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn node(&self, i: usize) -> &[S] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn node_mut(&mut self, i: usize) -> &mut [S] {
        &mut self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_flat(&self) -> &[S] {
        &self.values
    }

    pub fn as_flat_mut(&mut self) -> &mut [S] {
        &mut self.values
    }

    pub fn into_flat(self) -> Vec<S> {
        self.values
    }

    /// Difference quotient `d_{i+1/2} = (x_{i+1} - x_i) / h`, `i = 0 .. n-1`.
    pub fn difference(&self, i: usize) -> Vec<S> {
        let h = self.grid.step();
        self.node(i + 1)
            .iter()
            .zip(self.node(i))
            .map(|(&b, &a)| (b - a) / h)
            .collect()
    }

    pub fn max_norm(&self) -> (usize, S) {
        (0..self.len())
            .map(|i| (i, norm(self.node(i))))
            .fold((0, S::zero()), |best, cur| if cur.1 > best.1 { cur } else { best })
    }

    /// Largest nodal distance `max_i |x_i - y_i|` to another trajectory on the same grid.
    pub fn max_distance(&self, other: &Self) -> S {
        (0..self.len())
            .map(|i| distance(self.node(i), other.node(i)))
            .fold(S::zero(), S::max)
    }
}

/// `(sum_i w_i h |x_i|^p)^{1/p}` with trapezoidal weights.
pub fn discrete_lp_norm<S: Scalar>(p: S, traj: &Trajectory<S>) -> Result<S> {
    if !(p >= S::one()) {
        return Err(Error::invalid(format!("norm exponent must be >= 1, got {p}")));
    }
    let grid = traj.grid();
    let h = grid.step();
    let sum: S = (0..traj.len())
        .map(|i| grid.trapezoid_weight(i) * h * norm(traj.node(i)).powf(p))
        .sum();
    Ok(sum.powf(S::one() / p))
}
