//! Maximal monotone maps on R^d presented through their resolvents.
//!
//! A [`MonotoneMap`] is never evaluated as a set. Everything the solver needs is
//! reached through the resolvent `J_lambda = (I + lambda A)^{-1}`:
//!
//! * the Yosida approximation `A_lambda = (I - J_lambda) / lambda`,
//! * the minimal section `A^0`, in closed form for catalog maps,
//! * graph membership `v in A(x)`, equivalently `x = J_lambda(x + lambda v)`.

use std::fmt;
use std::sync::Arc;

use crate::base::{axpy, distance, dot, norm, norm_inf, scale, sub};
use crate::error::{Error, Result};
use crate::linalg::DenseLu;
use crate::scalar::Scalar;

/// Maximum number of half-spaces in a [`ConvexSet::Polyhedron`]; the exact
/// projection enumerates active sets.
pub const MAX_POLYHEDRON_CONSTRAINTS: usize = 10;

/// Step used to approximate the minimal section of custom maps by `A_lambda`.
pub const MINIMAL_SECTION_LAMBDA: f64 = 1e-8;

/// Closed convex sets with an exact metric projection.
#[derive(Debug, Clone, PartialEq)]
pub enum ConvexSet<S> {
    /// The nonnegative orthant `R^N_+`.
    Orthant { dim: usize },
    /// All of `R^N`.
    Whole { dim: usize },
    Box { lower: Vec<S>, upper: Vec<S> },
    Point(Vec<S>),
    Ball { center: Vec<S>, radius: S },
    /// `{ x : (normal, x) <= offset }`
    HalfSpace { normal: Vec<S>, offset: S },
    /// Intersection of half-spaces `(normals[j], x) <= offsets[j]`.
    Polyhedron { normals: Vec<Vec<S>>, offsets: Vec<S> },
}

impl<S: Scalar> ConvexSet<S> {
    pub fn dim(&self) -> usize {
        match self {
            ConvexSet::Orthant { dim } | ConvexSet::Whole { dim } => *dim,
            ConvexSet::Box { lower, .. } => lower.len(),
            ConvexSet::Point(c) => c.len(),
            ConvexSet::Ball { center, .. } => center.len(),
            ConvexSet::HalfSpace { normal, .. } => normal.len(),
            ConvexSet::Polyhedron { normals, .. } => normals.first().map_or(0, Vec::len),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim() == 0 {
            return Err(Error::UnsupportedSet("zero-dimensional set".into()));
        }
        match self {
            ConvexSet::Box { lower, upper } => {
                Error::check_dim(lower.len(), upper.len())?;
                if lower.iter().zip(upper).any(|(l, u)| !(l <= u)) {
                    return Err(Error::UnsupportedSet("box needs lower <= upper".into()));
                }
            }
            ConvexSet::Ball { radius, .. } => {
                if !(*radius > S::zero()) {
                    return Err(Error::UnsupportedSet("ball radius must be positive".into()));
                }
            }
            ConvexSet::HalfSpace { normal, .. } => {
                if norm(normal) == S::zero() {
                    return Err(Error::UnsupportedSet("half-space normal is zero".into()));
                }
            }
            ConvexSet::Polyhedron { normals, offsets } => {
                Error::check_dim(normals.len(), offsets.len())?;
                if normals.is_empty() || normals.len() > MAX_POLYHEDRON_CONSTRAINTS {
                    return Err(Error::UnsupportedSet(format!(
                        "polyhedron needs 1..={MAX_POLYHEDRON_CONSTRAINTS} half-spaces, got {}",
                        normals.len()
                    )));
                }
                let d = self.dim();
                for a in normals {
                    Error::check_dim(d, a.len())?;
                    if norm(a) == S::zero() {
                        return Err(Error::UnsupportedSet("polyhedron has a zero normal".into()));
                    }
                }
                let probe = vec![S::zero(); d];
                let (z, _) = self.polyhedron_projection(&probe);
                if !self.contains(&z, S::lit(1e-9)) {
                    return Err(Error::UnsupportedSet("polyhedron appears to be empty".into()));
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn is_bounded(&self) -> bool {
        matches!(self, ConvexSet::Box { .. } | ConvexSet::Point(_) | ConvexSet::Ball { .. })
    }

    pub fn contains(&self, x: &[S], tol: S) -> bool {
        match self {
            ConvexSet::Orthant { .. } => x.iter().all(|&v| v >= -tol),
            ConvexSet::Whole { .. } => true,
            ConvexSet::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(&v, (&l, &u))| v >= l - tol && v <= u + tol),
            ConvexSet::Point(c) => distance(x, c) <= tol,
            ConvexSet::Ball { center, radius } => distance(x, center) <= *radius + tol,
            ConvexSet::HalfSpace { normal, offset } => dot(normal, x) <= *offset + tol * norm(normal),
            ConvexSet::Polyhedron { normals, offsets } => normals
                .iter()
                .zip(offsets)
                .all(|(a, &b)| dot(a, x) <= b + tol * norm(a)),
        }
    }

    /// Metric projection onto the set.
    pub fn project(&self, x: &[S]) -> Vec<S> {
        match self {
            ConvexSet::Orthant { .. } => x.iter().map(|&v| v.max(S::zero())).collect(),
            ConvexSet::Whole { .. } => x.to_vec(),
            ConvexSet::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(&v, (&l, &u))| v.max(l).min(u))
                .collect(),
            ConvexSet::Point(c) => c.clone(),
            ConvexSet::Ball { center, radius } => {
                let r = distance(x, center);
                if r <= *radius {
                    x.to_vec()
                } else {
                    let dir = sub(x, center);
                    axpy(center, *radius / r, &dir)
                }
            }
            ConvexSet::HalfSpace { normal, offset } => {
                let excess = dot(normal, x) - *offset;
                if excess <= S::zero() {
                    x.to_vec()
                } else {
                    axpy(x, -excess / dot(normal, normal), normal)
                }
            }
            ConvexSet::Polyhedron { .. } => self.polyhedron_projection(x).0,
        }
    }

    /// Jacobian (row-major) of the projection at `x`, using the one-sided
    /// derivative on kinks that keeps the active constraints active.
    pub fn projection_jacobian(&self, x: &[S]) -> Vec<S> {
        let d = x.len();
        let mut jac = vec![S::zero(); d * d];
        let set_diag = |jac: &mut Vec<S>, k: usize, v: S| jac[k * d + k] = v;
        match self {
            ConvexSet::Orthant { .. } => {
                for (k, &v) in x.iter().enumerate() {
                    set_diag(&mut jac, k, if v > S::zero() { S::one() } else { S::zero() });
                }
            }
            ConvexSet::Whole { .. } => {
                for k in 0..d {
                    set_diag(&mut jac, k, S::one());
                }
            }
            ConvexSet::Box { lower, upper } => {
                for k in 0..d {
                    let inside = x[k] > lower[k] && x[k] < upper[k];
                    set_diag(&mut jac, k, if inside { S::one() } else { S::zero() });
                }
            }
            ConvexSet::Point(_) => {}
            ConvexSet::Ball { center, radius } => {
                let dir = sub(x, center);
                let r = norm(&dir);
                if r < *radius {
                    for k in 0..d {
                        set_diag(&mut jac, k, S::one());
                    }
                } else {
                    let f = *radius / r;
                    for i in 0..d {
                        for j in 0..d {
                            let id = if i == j { S::one() } else { S::zero() };
                            jac[i * d + j] = f * (id - dir[i] * dir[j] / (r * r));
                        }
                    }
                }
            }
            ConvexSet::HalfSpace { normal, offset } => {
                let active = dot(normal, x) >= *offset;
                let nn = dot(normal, normal);
                for i in 0..d {
                    for j in 0..d {
                        let id = if i == j { S::one() } else { S::zero() };
                        jac[i * d + j] = if active { id - normal[i] * normal[j] / nn } else { id };
                    }
                }
            }
            ConvexSet::Polyhedron { normals, .. } => {
                let (_, active) = self.polyhedron_projection(x);
                let rows: Vec<&Vec<S>> = active.iter().map(|&j| &normals[j]).collect();
                let k = rows.len();
                for i in 0..d {
                    jac[i * d + i] = S::one();
                }
                if k > 0 {
                    let gram: Vec<S> = (0..k * k).map(|e| dot(rows[e / k], rows[e % k])).collect();
                    if let Ok(lu) = DenseLu::factor(k, gram) {
                        // J = I - A^T G^{-1} A
                        for j in 0..d {
                            let col: Vec<S> = rows.iter().map(|a| a[j]).collect();
                            let y = lu.solve(&col);
                            for i in 0..d {
                                let corr: S = rows.iter().zip(&y).map(|(a, &yy)| a[i] * yy).sum();
                                jac[i * d + j] = jac[i * d + j] - corr;
                            }
                        }
                    }
                }
            }
        }
        jac
    }

    /// Exact test of `v in N_C(x)`.
    pub fn normal_cone_contains(&self, x: &[S], v: &[S], tol: S) -> bool {
        if !self.contains(x, tol) {
            return false;
        }
        let parallel_to = |dir: &[S]| -> bool {
            // v = alpha * dir with alpha >= 0
            let dn = norm(dir);
            if dn == S::zero() {
                return norm(v) <= tol;
            }
            let alpha = dot(v, dir) / (dn * dn);
            let perp = axpy(v, -alpha, dir);
            alpha >= -tol && norm(&perp) <= tol * (S::one() + norm(v))
        };
        match self {
            ConvexSet::Orthant { .. } => x
                .iter()
                .zip(v)
                .all(|(&xi, &vi)| vi <= tol && xi.min(-vi).abs() <= tol),
            ConvexSet::Whole { .. } => norm(v) <= tol,
            ConvexSet::Point(_) => true,
            ConvexSet::Box { lower, upper } => (0..x.len()).all(|k| {
                let at_lower = x[k] - lower[k] <= tol;
                let at_upper = upper[k] - x[k] <= tol;
                match (at_lower, at_upper) {
                    (true, true) => true,
                    (true, false) => v[k] <= tol,
                    (false, true) => v[k] >= -tol,
                    (false, false) => v[k].abs() <= tol,
                }
            }),
            ConvexSet::Ball { center, radius } => {
                let dir = sub(x, center);
                if norm(&dir) < *radius - tol {
                    norm(v) <= tol
                } else {
                    parallel_to(&dir)
                }
            }
            ConvexSet::HalfSpace { normal, offset } => {
                if dot(normal, x) < *offset - tol * norm(normal) {
                    norm(v) <= tol
                } else {
                    parallel_to(normal)
                }
            }
            ConvexSet::Polyhedron { .. } => {
                // v in N_C(x)  <=>  x = P_C(x + v)
                let z = self.project(&axpy(x, S::one(), v));
                distance(&z, x) <= tol * (S::one() + norm(v))
            }
        }
    }

    /// Exact projection onto a polyhedron by active-set enumeration: the first
    /// linearly independent active set whose KKT point is feasible with
    /// nonnegative multipliers is the projection. Returns the point and the
    /// active constraint indices.
    fn polyhedron_projection(&self, x: &[S]) -> (Vec<S>, Vec<usize>) {
        let ConvexSet::Polyhedron { normals, offsets } = self else {
            return (self.project(x), Vec::new());
        };
        let m = normals.len();
        let d = x.len();
        let scale_tol = S::lit(1e-12) * (S::one() + norm(x) + norm_inf(offsets));
        let violation = |z: &[S]| -> S {
            normals
                .iter()
                .zip(offsets)
                .map(|(a, &b)| (dot(a, z) - b) / norm(a))
                .fold(S::zero(), S::max)
        };
        if violation(x) <= S::zero() {
            return (x.to_vec(), Vec::new());
        }
        let mut best: Option<(S, Vec<S>, Vec<usize>)> = None;
        for size in 1..=m.min(d) {
            for subset in subsets(m, size) {
                let k = subset.len();
                let gram: Vec<S> = (0..k * k)
                    .map(|e| dot(&normals[subset[e / k]], &normals[subset[e % k]]))
                    .collect();
                let Ok(lu) = DenseLu::factor(k, gram) else {
                    continue;
                };
                let rhs: Vec<S> = subset.iter().map(|&j| dot(&normals[j], x) - offsets[j]).collect();
                let mu = lu.solve(&rhs);
                let mut z = x.to_vec();
                for (&j, &mj) in subset.iter().zip(&mu) {
                    z = axpy(&z, -mj, &normals[j]);
                }
                let neg = mu.iter().fold(S::zero(), |acc, &v| acc.max(-v));
                let bad = violation(&z).max(neg);
                if bad <= scale_tol {
                    return (z, subset);
                }
                if best.as_ref().is_none_or(|b| bad < b.0) {
                    best = Some((bad, z, subset));
                }
            }
        }
        let (_, z, active) = best.expect("polyhedron has at least one constraint");
        (z, active)
    }
}

fn subsets(m: usize, size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(size);
    fn rec(start: usize, m: usize, size: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for j in start..m {
            cur.push(j);
            rec(j + 1, m, size, cur, out);
            cur.pop();
        }
    }
    rec(0, m, size, &mut cur, &mut out);
    out
}

pub type ResolventFn<S> = Arc<dyn Fn(S, &[S]) -> Vec<S> + Send + Sync>;
pub type VectorFn<S> = Arc<dyn Fn(&[S]) -> Vec<S> + Send + Sync>;

/// User-supplied maximal monotone maps.
#[derive(Clone)]
pub enum CustomMap<S> {
    /// The caller provides `J_lambda` directly, and optionally the projection onto `cl D(A)`
    /// (identity when omitted).
    Resolvent {
        name: String,
        resolvent: ResolventFn<S>,
        domain_projection: Option<VectorFn<S>>,
    },
    /// A continuous monotone single-valued map `g` on all of R^N. The resolvent
    /// solves `z + lambda g(z) = x` by damped Newton.
    SingleValued {
        name: String,
        eval: VectorFn<S>,
        tol: S,
        max_iters: usize,
    },
}

impl<S> fmt::Debug for CustomMap<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CustomMap::Resolvent { name, .. } => write!(f, "CustomMap::Resolvent({name})"),
            CustomMap::SingleValued { name, .. } => write!(f, "CustomMap::SingleValued({name})"),
        }
    }
}

#[derive(Debug, Clone)]
pub enum MapKind<S> {
    Zero,
    /// `A(x) = {c x}` with `c >= 0`.
    Scaled(S),
    NormalCone(ConvexSet<S>),
    /// Subdifferential of `w |x|_1`; its resolvent is soft thresholding.
    WeightedL1(S),
    Custom(CustomMap<S>),
}

/// Reporting tag for a [`MonotoneMap`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapTag {
    Zero,
    IdentityScaled,
    OrthantCone,
    BoxCone,
    PointCone,
    BallCone,
    ConvexSetCone,
    ProxOfConvex,
    Custom,
}

impl MapTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            MapTag::Zero => "zero",
            MapTag::IdentityScaled => "identity-scaled",
            MapTag::OrthantCone => "orthant-cone",
            MapTag::BoxCone => "box-cone",
            MapTag::PointCone => "point-cone",
            MapTag::BallCone => "ball-cone",
            MapTag::ConvexSetCone => "convex-set-cone",
            MapTag::ProxOfConvex => "prox-of-convex",
            MapTag::Custom => "custom",
        }
    }
}

/// A pair `(point, value)` with `value in A(point)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSample<S> {
    pub point: Vec<S>,
    pub value: Vec<S>,
}

#[derive(Debug, Clone)]
pub struct MonotoneMap<S> {
    dim: usize,
    kind: MapKind<S>,
}

impl<S: Scalar> MonotoneMap<S> {
    pub fn zero(dim: usize) -> Self {
        Self { dim, kind: MapKind::Zero }
    }

    pub fn identity(dim: usize) -> Self {
        Self::scaled(dim, S::one()).expect("unit scaling is valid")
    }

    pub fn scaled(dim: usize, c: S) -> Result<Self> {
        if !(c >= S::zero()) || !c.is_finite() {
            return Err(Error::invalid(format!("scaling must be >= 0, got {c}")));
        }
        Ok(Self { dim, kind: MapKind::Scaled(c) })
    }

    pub fn weighted_l1(dim: usize, weight: S) -> Result<Self> {
        if !(weight >= S::zero()) || !weight.is_finite() {
            return Err(Error::invalid(format!("l1 weight must be >= 0, got {weight}")));
        }
        Ok(Self { dim, kind: MapKind::WeightedL1(weight) })
    }

    pub fn custom(dim: usize, map: CustomMap<S>) -> Self {
        Self { dim, kind: MapKind::Custom(map) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &MapKind<S> {
        &self.kind
    }

    pub fn tag(&self) -> MapTag {
        match &self.kind {
            MapKind::Zero => MapTag::Zero,
            MapKind::Scaled(_) => MapTag::IdentityScaled,
            MapKind::NormalCone(set) => match set {
                ConvexSet::Orthant { .. } => MapTag::OrthantCone,
                ConvexSet::Box { .. } => MapTag::BoxCone,
                ConvexSet::Point(_) => MapTag::PointCone,
                ConvexSet::Ball { .. } => MapTag::BallCone,
                _ => MapTag::ConvexSetCone,
            },
            MapKind::WeightedL1(_) => MapTag::ProxOfConvex,
            MapKind::Custom(_) => MapTag::Custom,
        }
    }

    fn check_lambda(lambda: S) -> Result<()> {
        if lambda > S::zero() && lambda.is_finite() {
            Ok(())
        } else {
            Err(Error::invalid(format!("lambda must be positive, got {lambda}")))
        }
    }

    /// `J_lambda(x)`: the unique `z` with `x in z + lambda A(z)`.
    pub fn resolvent(&self, lambda: S, x: &[S]) -> Result<Vec<S>> {
        Self::check_lambda(lambda)?;
        Error::check_dim(self.dim, x.len())?;
        Ok(match &self.kind {
            MapKind::Zero => x.to_vec(),
            MapKind::Scaled(c) => scale(S::one() / (S::one() + lambda * *c), x),
            MapKind::NormalCone(set) => set.project(x),
            MapKind::WeightedL1(w) => {
                let thr = lambda * *w;
                x.iter()
                    .map(|&v| v.signum() * (v.abs() - thr).max(S::zero()))
                    .map(|v| if v == S::zero() { S::zero() } else { v })
                    .collect()
            }
            MapKind::Custom(CustomMap::Resolvent { resolvent, .. }) => {
                let z = resolvent(lambda, x);
                Error::check_dim(self.dim, z.len())?;
                z
            }
            MapKind::Custom(CustomMap::SingleValued {
                eval, tol, max_iters, ..
            }) => solve_single_valued_resolvent(eval.as_ref(), lambda, x, *tol, *max_iters)?,
        })
    }

    /// Yosida approximation `A_lambda(x) = (x - J_lambda(x)) / lambda`, in closed
    /// form where one exists (avoids the `eps |x| / lambda` cancellation error).
    pub fn yosida(&self, lambda: S, x: &[S]) -> Result<Vec<S>> {
        Self::check_lambda(lambda)?;
        Error::check_dim(self.dim, x.len())?;
        match &self.kind {
            MapKind::Zero => Ok(vec![S::zero(); self.dim]),
            MapKind::Scaled(c) => Ok(scale(*c / (S::one() + lambda * *c), x)),
            MapKind::WeightedL1(w) => Ok(x.iter().map(|&v| (v / lambda).max(-*w).min(*w)).collect()),
            MapKind::NormalCone(set) => {
                // A displacement at the rounding level of the projection means x is in C.
                let p = set.project(x);
                let floor = S::epsilon() * S::from_f64(4.0).unwrap() * (S::one() + norm(x));
                if x.iter().zip(&p).all(|(&a, &b)| (a - b).abs() <= floor) {
                    return Ok(vec![S::zero(); self.dim]);
                }
                Ok(x.iter().zip(&p).map(|(&a, &b)| (a - b) / lambda).collect())
            }
            _ => {
                let j = self.resolvent(lambda, x)?;
                Ok(x.iter().zip(&j).map(|(&a, &b)| (a - b) / lambda).collect())
            }
        }
    }

    /// Row-major Jacobian of `J_lambda` at `x` (generalized derivative on kinks).
    pub fn resolvent_jacobian(&self, lambda: S, x: &[S]) -> Result<Vec<S>> {
        Self::check_lambda(lambda)?;
        let d = self.dim;
        let mut jac = vec![S::zero(); d * d];
        match &self.kind {
            MapKind::Zero => {
                for k in 0..d {
                    jac[k * d + k] = S::one();
                }
            }
            MapKind::Scaled(c) => {
                let f = S::one() / (S::one() + lambda * *c);
                for k in 0..d {
                    jac[k * d + k] = f;
                }
            }
            MapKind::NormalCone(set) => jac = set.projection_jacobian(x),
            MapKind::WeightedL1(w) => {
                for k in 0..d {
                    jac[k * d + k] = if x[k].abs() > lambda * *w { S::one() } else { S::zero() };
                }
            }
            MapKind::Custom(_) => {
                jac = finite_difference_jacobian(d, x, |z| self.resolvent(lambda, z))?;
            }
        }
        Ok(jac)
    }

    /// Projection onto the closure of the domain.
    pub fn domain_projection(&self, x: &[S]) -> Vec<S> {
        match &self.kind {
            MapKind::NormalCone(set) => set.project(x),
            MapKind::Custom(CustomMap::Resolvent {
                domain_projection: Some(p),
                ..
            }) => p(x),
            _ => x.to_vec(),
        }
    }

    /// Minimal-norm element `A^0(x)` of `A(x)`.
    pub fn minimal_section(&self, x: &[S]) -> Result<Vec<S>> {
        Error::check_dim(self.dim, x.len())?;
        let proj = self.domain_projection(x);
        let dist = distance(&proj, x);
        if dist > S::lit(1e-9) * (S::one() + norm(x)) {
            return Err(Error::OutOfDomain { distance: dist.to_f64_lossy() });
        }
        Ok(match &self.kind {
            MapKind::Zero | MapKind::NormalCone(_) => vec![S::zero(); self.dim],
            MapKind::Scaled(c) => scale(*c, x),
            MapKind::WeightedL1(w) => x
                .iter()
                .map(|&v| if v == S::zero() { S::zero() } else { *w * v.signum() })
                .collect(),
            MapKind::Custom(CustomMap::SingleValued { eval, .. }) => eval(x),
            MapKind::Custom(CustomMap::Resolvent { .. }) => {
                self.yosida(S::lit(MINIMAL_SECTION_LAMBDA), x)?
            }
        })
    }

    /// Tests `v in A(x)` within `tol`.
    pub fn graph_contains(&self, x: &[S], v: &[S], tol: S) -> Result<bool> {
        Error::check_dim(self.dim, x.len())?;
        Error::check_dim(self.dim, v.len())?;
        Ok(match &self.kind {
            MapKind::Zero => norm(v) <= tol,
            MapKind::Scaled(c) => distance(v, &scale(*c, x)) <= tol * (S::one() + norm(v)),
            MapKind::NormalCone(set) => set.normal_cone_contains(x, v, tol),
            MapKind::WeightedL1(w) => x.iter().zip(v).all(|(&xk, &vk)| {
                if xk.abs() <= tol {
                    vk.abs() <= *w + tol
                } else {
                    (vk - *w * xk.signum()).abs() <= tol
                }
            }),
            MapKind::Custom(CustomMap::SingleValued { eval, .. }) => {
                distance(&eval(x), v) <= tol * (S::one() + norm(v))
            }
            MapKind::Custom(CustomMap::Resolvent { .. }) => {
                let z = self.resolvent(S::one(), &axpy(x, S::one(), v))?;
                distance(&z, x) <= tol * (S::one() + norm(v))
            }
        })
    }

    /// `0 in A(0)`.
    pub fn contains_origin(&self) -> Result<bool> {
        let zero = vec![S::zero(); self.dim];
        self.graph_contains(&zero, &zero, S::lit(1e-12))
    }
}

/// Builds the normal cone `N_C` of a closed convex set; its resolvent is the
/// metric projection for every `lambda`.
pub fn make_normal_cone<S: Scalar>(set: ConvexSet<S>) -> Result<MonotoneMap<S>> {
    set.validate()?;
    Ok(MonotoneMap {
        dim: set.dim(),
        kind: MapKind::NormalCone(set),
    })
}

fn finite_difference_jacobian<S: Scalar>(
    d: usize,
    x: &[S],
    f: impl Fn(&[S]) -> Result<Vec<S>>,
) -> Result<Vec<S>> {
    let mut jac = vec![S::zero(); d * d];
    let root = S::epsilon().sqrt();
    let mut xp = x.to_vec();
    for j in 0..d {
        let step = root * x[j].abs().max(S::one());
        let orig = xp[j];
        xp[j] = orig + step;
        let fp = f(&xp)?;
        xp[j] = orig - step;
        let fm = f(&xp)?;
        xp[j] = orig;
        for i in 0..d {
            jac[i * d + j] = (fp[i] - fm[i]) / (step + step);
        }
    }
    Ok(jac)
}

fn solve_single_valued_resolvent<S: Scalar>(
    g: &(dyn Fn(&[S]) -> Vec<S> + Send + Sync),
    lambda: S,
    x: &[S],
    tol: S,
    max_iters: usize,
) -> Result<Vec<S>> {
    let d = x.len();
    let residual = |z: &[S]| -> Vec<S> {
        let gz = g(z);
        z.iter()
            .zip(&gz)
            .zip(x)
            .map(|((&zi, &gi), &xi)| zi + lambda * gi - xi)
            .collect()
    };
    let mut z = x.to_vec();
    let mut r = residual(&z);
    let target = tol * (S::one() + norm(x));
    for _ in 0..max_iters {
        let rn = norm(&r);
        if rn <= target {
            return Ok(z);
        }
        let jac = finite_difference_jacobian(d, &z, |v| Ok(residual(v)))?;
        let lu = DenseLu::factor(d, jac).map_err(|e| Error::InnerSolve(e.to_string()))?;
        let dz = lu.solve(&r);
        let mut step = S::one();
        loop {
            let trial = axpy(&z, -step, &dz);
            let rt = residual(&trial);
            if norm(&rt) < rn {
                z = trial;
                r = rt;
                break;
            }
            step = step * S::lit(0.5);
            if step < S::lit(1e-10) {
                return Err(Error::InnerSolve(format!(
                    "line search failed with residual {rn:e}"
                )));
            }
        }
    }
    if norm(&r) <= target {
        Ok(z)
    } else {
        Err(Error::InnerSolve(format!(
            "resolvent residual {:e} after {max_iters} iterations",
            norm(&r)
        )))
    }
}
