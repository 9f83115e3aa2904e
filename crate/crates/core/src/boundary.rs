//! Boundary operators `xi` on `R^N x R^N`.
//!
//! The boundary inclusion `(phi(x'(0)), -phi(x'(T))) in xi(x(0), x(T))` is
//! enforced through the resolvent identity
//! `(b, b') in xi(a, a')  <=>  (a, a') = J^xi_mu((a, a') + mu (b, b'))`,
//! which turns the set-valued condition into a single-valued residual for every
//! maximal monotone `xi`.

use std::fmt;

use crate::base::{distance, dot, norm, scale, sub, Exponent};
use crate::error::{Error, Result};
use crate::evidence::Evidence;
use crate::monotone::{ConvexSet, GraphSample, MapKind, MapTag, MonotoneMap, ResolventFn};
use crate::sampling::halton_box;
use crate::scalar::Scalar;

/// Tolerance of the resolvent identity used to accept graph samples.
pub const SAMPLE_TOL: f64 = 1e-8;
/// Tolerance of the sign tests in [`check_h_xi`] and [`check_h0`].
pub const SIGN_TOL: f64 = 1e-9;

/// Which structural condition on `xi` is relied on by the a-priori estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HxiBranch {
    /// `(b, a) >= 0` and `(b', a') >= 0` on the graph.
    SignCondition,
    /// `D(xi)` is the diagonal `{a = a'}`.
    DiagonalDomain,
    DeclaredUnknown,
}

impl HxiBranch {
    pub fn as_str(&self) -> &'static str {
        match self {
            HxiBranch::SignCondition => "sign-condition",
            HxiBranch::DiagonalDomain => "diagonal-domain",
            HxiBranch::DeclaredUnknown => "declared-unknown",
        }
    }
}

#[derive(Clone)]
pub enum BoundaryKind<S> {
    /// `x(0) = x(T) = 0`.
    Dirichlet,
    /// `x'(0) = x'(T) = 0`.
    Neumann,
    /// `x(0) = x(T)`, `phi(x'(0)) = phi(x'(T))`.
    Periodic,
    /// `xi(a, a') = (phi(a) / theta^{p-1}, phi(a') / eta^{p-1})`, i.e.
    /// `x(0) - theta x'(0) = 0`, `x(T) + eta x'(T) = 0`.
    SturmLiouville { exponent: Exponent<S>, theta: S, eta: S },
    /// `xi = N_{K1 x K2}`.
    ProductCone { first: ConvexSet<S>, second: ConvexSet<S> },
    Custom { name: String, resolvent: ResolventFn<S> },
}

impl<S: Scalar> fmt::Debug for BoundaryKind<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryKind::Dirichlet => write!(f, "Dirichlet"),
            BoundaryKind::Neumann => write!(f, "Neumann"),
            BoundaryKind::Periodic => write!(f, "Periodic"),
            BoundaryKind::SturmLiouville { exponent, theta, eta } => write!(
                f,
                "SturmLiouville {{ p: {}, theta: {theta}, eta: {eta} }}",
                exponent.p()
            ),
            BoundaryKind::ProductCone { first, second } => {
                write!(f, "ProductCone {{ first: {first:?}, second: {second:?} }}")
            }
            BoundaryKind::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryTag {
    Dirichlet,
    Neumann,
    Periodic,
    SturmLiouville,
    ProductNormalCone,
    Custom,
}

impl BoundaryTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            BoundaryTag::Dirichlet => "dirichlet",
            BoundaryTag::Neumann => "neumann",
            BoundaryTag::Periodic => "periodic",
            BoundaryTag::SturmLiouville => "sturm-liouville",
            BoundaryTag::ProductNormalCone => "product-normal-cone",
            BoundaryTag::Custom => "custom",
        }
    }
}

#[derive(Clone)]
pub struct BoundaryOperator<S> {
    dim: usize,
    kind: BoundaryKind<S>,
    branch: HxiBranch,
}

impl<S: Scalar> fmt::Debug for BoundaryOperator<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoundaryOperator")
            .field("dim", &self.dim)
            .field("kind", &self.kind)
            .field("branch", &self.branch)
            .finish()
    }
}

/// `(a, a_T) - J^xi_mu((a, a_T) + mu (b, b_T))`; zero exactly when the boundary inclusion holds.
#[derive(Debug, Clone, PartialEq)]
pub struct BcResidual<S> {
    pub value: Vec<S>,
    pub norm: S,
}

impl<S: Scalar> BoundaryOperator<S> {
    pub fn dirichlet(dim: usize) -> Self {
        Self { dim, kind: BoundaryKind::Dirichlet, branch: HxiBranch::SignCondition }
    }

    pub fn neumann(dim: usize) -> Self {
        Self { dim, kind: BoundaryKind::Neumann, branch: HxiBranch::SignCondition }
    }

    pub fn periodic(dim: usize) -> Self {
        Self { dim, kind: BoundaryKind::Periodic, branch: HxiBranch::DiagonalDomain }
    }

    pub fn sturm_liouville(dim: usize, exponent: Exponent<S>, theta: S, eta: S) -> Result<Self> {
        if !(theta > S::zero()) || !(eta > S::zero()) {
            return Err(Error::invalid(format!(
                "Sturm-Liouville coefficients must be positive, got theta = {theta}, eta = {eta}"
            )));
        }
        Ok(Self {
            dim,
            kind: BoundaryKind::SturmLiouville { exponent, theta, eta },
            branch: HxiBranch::SignCondition,
        })
    }

    /// `xi = N_{K1 x K2}`; both sets must contain the origin so that `(0,0) in xi(0,0)`.
    pub fn product_cone(first: ConvexSet<S>, second: ConvexSet<S>) -> Result<Self> {
        first.validate()?;
        second.validate()?;
        Error::check_dim(first.dim(), second.dim())?;
        let origin = vec![S::zero(); first.dim()];
        if !first.contains(&origin, S::zero()) || !second.contains(&origin, S::zero()) {
            return Err(Error::invalid("product-cone sets must contain the origin"));
        }
        Ok(Self {
            dim: first.dim(),
            kind: BoundaryKind::ProductCone { first, second },
            branch: HxiBranch::SignCondition,
        })
    }

    pub fn custom(dim: usize, name: impl Into<String>, resolvent: ResolventFn<S>, branch: HxiBranch) -> Self {
        Self {
            dim,
            kind: BoundaryKind::Custom { name: name.into(), resolvent },
            branch,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &BoundaryKind<S> {
        &self.kind
    }

    pub fn branch(&self) -> HxiBranch {
        self.branch
    }

    pub fn tag(&self) -> BoundaryTag {
        match &self.kind {
            BoundaryKind::Dirichlet => BoundaryTag::Dirichlet,
            BoundaryKind::Neumann => BoundaryTag::Neumann,
            BoundaryKind::Periodic => BoundaryTag::Periodic,
            BoundaryKind::SturmLiouville { .. } => BoundaryTag::SturmLiouville,
            BoundaryKind::ProductCone { .. } => BoundaryTag::ProductNormalCone,
            BoundaryKind::Custom { .. } => BoundaryTag::Custom,
        }
    }

    pub fn is_catalog(&self) -> bool {
        !matches!(self.kind, BoundaryKind::Custom { .. })
    }

    /// `J^xi_mu(z)` for `z = (a, a')` in `R^{2N}`.
    pub fn resolvent(&self, mu: S, z: &[S]) -> Result<Vec<S>> {
        if !(mu > S::zero()) || !mu.is_finite() {
            return Err(Error::invalid(format!("mu must be positive, got {mu}")));
        }
        Error::check_dim(2 * self.dim, z.len())?;
        let n = self.dim;
        let (za, zb) = z.split_at(n);
        Ok(match &self.kind {
            BoundaryKind::Dirichlet => vec![S::zero(); 2 * n],
            BoundaryKind::Neumann => z.to_vec(),
            BoundaryKind::Periodic => {
                let half = S::lit(0.5);
                let m: Vec<S> = za.iter().zip(zb).map(|(&a, &b)| half * (a + b)).collect();
                [m.clone(), m].concat()
            }
            BoundaryKind::SturmLiouville { exponent, theta, eta } => {
                let pm1 = exponent.p() - S::one();
                let first = ray_resolvent(exponent.p(), mu / theta.powf(pm1), za)?;
                let second = ray_resolvent(exponent.p(), mu / eta.powf(pm1), zb)?;
                [first, second].concat()
            }
            BoundaryKind::ProductCone { first, second } => [first.project(za), second.project(zb)].concat(),
            BoundaryKind::Custom { resolvent, .. } => {
                let out = resolvent(mu, z);
                Error::check_dim(2 * n, out.len())?;
                out
            }
        })
    }

    /// Row-major `2N x 2N` Jacobian of `J^xi_mu` at `z`.
    pub fn resolvent_jacobian(&self, mu: S, z: &[S]) -> Result<Vec<S>> {
        let n = self.dim;
        let m = 2 * n;
        let mut jac = vec![S::zero(); m * m];
        let put_block = |jac: &mut Vec<S>, offset: usize, block: &[S]| {
            for i in 0..n {
                for j in 0..n {
                    jac[(offset + i) * m + offset + j] = block[i * n + j];
                }
            }
        };
        match &self.kind {
            BoundaryKind::Dirichlet => {}
            BoundaryKind::Neumann => {
                for k in 0..m {
                    jac[k * m + k] = S::one();
                }
            }
            BoundaryKind::Periodic => {
                let half = S::lit(0.5);
                for i in 0..n {
                    for (r, c) in [(i, i), (i, n + i), (n + i, i), (n + i, n + i)] {
                        jac[r * m + c] = half;
                    }
                }
            }
            BoundaryKind::SturmLiouville { exponent, theta, eta } => {
                let pm1 = exponent.p() - S::one();
                let (za, zb) = z.split_at(n);
                let a = ray_resolvent_jacobian(exponent.p(), mu / theta.powf(pm1), za)?;
                let b = ray_resolvent_jacobian(exponent.p(), mu / eta.powf(pm1), zb)?;
                put_block(&mut jac, 0, &a);
                put_block(&mut jac, n, &b);
            }
            BoundaryKind::ProductCone { first, second } => {
                let (za, zb) = z.split_at(n);
                put_block(&mut jac, 0, &first.projection_jacobian(za));
                put_block(&mut jac, n, &second.projection_jacobian(zb));
            }
            BoundaryKind::Custom { .. } => {
                let root = S::epsilon().sqrt();
                let mut zp = z.to_vec();
                for j in 0..m {
                    let step = root * z[j].abs().max(S::one());
                    zp[j] = z[j] + step;
                    let fp = self.resolvent(mu, &zp)?;
                    zp[j] = z[j] - step;
                    let fm = self.resolvent(mu, &zp)?;
                    zp[j] = z[j];
                    for i in 0..m {
                        jac[i * m + j] = (fp[i] - fm[i]) / (step + step);
                    }
                }
            }
        }
        Ok(jac)
    }

    /// `(0, 0) in xi(0, 0)`, tested as `J_mu(0) = 0`.
    pub fn contains_origin(&self) -> Result<bool> {
        let zero = vec![S::zero(); 2 * self.dim];
        let j = self.resolvent(S::one(), &zero)?;
        Ok(norm(&j) <= S::lit(1e-12))
    }

    /// `(b, b_T) in xi(a, a_T)` as a graph test with tolerance.
    pub fn graph_contains(&self, mu: S, point: &[S], value: &[S], tol: S) -> Result<bool> {
        let z: Vec<S> = point.iter().zip(value).map(|(&a, &b)| a + mu * b).collect();
        let j = self.resolvent(mu, &z)?;
        Ok(distance(&j, point) <= tol * (S::one() + norm(point) + mu * norm(value)))
    }
}

/// Builds a catalog boundary operator from its data.
pub fn make_catalog_bc<S: Scalar>(dim: usize, kind: BoundaryKind<S>) -> Result<BoundaryOperator<S>> {
    match kind {
        BoundaryKind::Dirichlet => Ok(BoundaryOperator::dirichlet(dim)),
        BoundaryKind::Neumann => Ok(BoundaryOperator::neumann(dim)),
        BoundaryKind::Periodic => Ok(BoundaryOperator::periodic(dim)),
        BoundaryKind::SturmLiouville { exponent, theta, eta } => {
            BoundaryOperator::sturm_liouville(dim, exponent, theta, eta)
        }
        BoundaryKind::ProductCone { first, second } => {
            let op = BoundaryOperator::product_cone(first, second)?;
            Error::check_dim(dim, op.dim())?;
            Ok(op)
        }
        BoundaryKind::Custom { .. } => Err(Error::invalid("custom operators are not catalog entries")),
    }
}

pub fn bc_residual<S: Scalar>(
    xi: &BoundaryOperator<S>,
    mu: S,
    a: &[S],
    a_t: &[S],
    b: &[S],
    b_t: &[S],
) -> Result<BcResidual<S>> {
    let point = [a, a_t].concat();
    let z: Vec<S> = point
        .iter()
        .zip(b.iter().chain(b_t))
        .map(|(&x, &y)| x + mu * y)
        .collect();
    let j = xi.resolvent(mu, &z)?;
    let value = sub(&point, &j);
    let norm = norm(&value);
    Ok(BcResidual { value, norm })
}

/// Solves `z + c phi(z) = w` along the ray of `w`: `z = s w / |w|` with
/// `s + c s^{p-1} = |w|`. Bisection on `[0, |w|]` until the bracket is narrower
/// than `1e-3`, then safeguarded Newton to absolute tolerance `1e-12`.
fn ray_resolvent<S: Scalar>(p: S, c: S, w: &[S]) -> Result<Vec<S>> {
    let r = norm(w);
    if r == S::zero() {
        return Ok(vec![S::zero(); w.len()]);
    }
    if p == S::lit(2.0) {
        return Ok(scale(S::one() / (S::one() + c), w));
    }
    let s = ray_root(p, c, r)?;
    Ok(scale(s / r, w))
}

fn ray_root<S: Scalar>(p: S, c: S, r: S) -> Result<S> {
    let pm1 = p - S::one();
    let g = |s: S| s + c * s.powf(pm1) - r;
    let dg = |s: S| S::one() + c * pm1 * s.powf(p - S::lit(2.0));
    let (mut lo, mut hi) = (S::zero(), r);
    let switch = S::lit(1e-3);
    let abs_tol = S::lit(1e-12);
    let mut guard = 0;
    while hi - lo >= switch {
        let mid = S::lit(0.5) * (lo + hi);
        if g(mid) > S::zero() {
            hi = mid;
        } else {
            lo = mid;
        }
        guard += 1;
        if guard > 2000 {
            break;
        }
    }
    let mut s = S::lit(0.5) * (lo + hi);
    for _ in 0..100 {
        let gs = g(s);
        if gs > S::zero() {
            hi = s;
        } else {
            lo = s;
        }
        let mut next = s - gs / dg(s);
        if !(next > lo && next < hi) {
            next = S::lit(0.5) * (lo + hi);
        }
        let step = (next - s).abs();
        s = next;
        if step <= abs_tol.max(S::lit(4.0) * S::epsilon() * s) {
            return Ok(s);
        }
    }
    Err(Error::InnerSolve(format!("ray root-solve for |w| = {r} did not converge")))
}

fn ray_resolvent_jacobian<S: Scalar>(p: S, c: S, w: &[S]) -> Result<Vec<S>> {
    let n = w.len();
    let mut jac = vec![S::zero(); n * n];
    let r = norm(w);
    let two = S::lit(2.0);
    if r == S::zero() {
        let d = if p == two { S::one() / (S::one() + c) } else { S::one() };
        for k in 0..n {
            jac[k * n + k] = d;
        }
        return Ok(jac);
    }
    let s = if p == two { r / (S::one() + c) } else { ray_root(p, c, r)? };
    let ds = S::one() / (S::one() + c * (p - S::one()) * s.powf(p - two));
    let ratio = s / r;
    for i in 0..n {
        for j in 0..n {
            let uu = w[i] * w[j] / (r * r);
            let id = if i == j { S::one() } else { S::zero() };
            jac[i * n + j] = ds * uu + ratio * (id - uu);
        }
    }
    Ok(jac)
}

/// Deterministic graph samples `(J(z), (z - J(z)) / mu)` of `xi` for Halton points
/// `z` in `[-radius, radius]^{2N}`; each is a graph element by the resolvent identity.
/// The periodic graph is sampled through its parametrization `((m, m), (b, -b))`,
/// which keeps `b_T = -b` exact in floating point.
pub fn graph_samples<S: Scalar>(
    xi: &BoundaryOperator<S>,
    mu: S,
    count: usize,
    radius: S,
    seed: u64,
) -> Result<Vec<GraphSample<S>>> {
    if !(mu > S::zero()) {
        return Err(Error::invalid(format!("mu must be positive, got {mu}")));
    }
    let n = xi.dim();
    halton_box(count, 2 * n, radius, seed)
        .into_iter()
        .map(|z| {
            if let BoundaryKind::Periodic = xi.kind() {
                let half = S::lit(0.5);
                let m: Vec<S> = (0..n).map(|k| half * (z[k] + z[n + k])).collect();
                let b: Vec<S> = (0..n).map(|k| half * (z[k] - z[n + k]) / mu).collect();
                let neg: Vec<S> = b.iter().map(|&v| -v).collect();
                return Ok(GraphSample {
                    point: [m.clone(), m].concat(),
                    value: [b, neg].concat(),
                });
            }
            let point = xi.resolvent(mu, &z)?;
            let value = z.iter().zip(&point).map(|(&a, &b)| (a - b) / mu).collect();
            Ok(GraphSample { point, value })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct HxiReport<S> {
    pub branch: HxiBranch,
    /// Branch (i) statistic `min_samples min((b, a), (b', a'))`.
    pub sign_min: Option<S>,
    /// Branch (ii) statistic `max_samples |a - a'|`.
    pub diagonal_max: Option<S>,
    pub witness: Option<usize>,
    pub passed: bool,
    pub evidence: Evidence,
    /// True for catalog operators whose condition is known in closed form.
    pub by_construction: bool,
}

fn validate_samples<S: Scalar>(xi: &BoundaryOperator<S>, mu: S, samples: &[GraphSample<S>]) -> Result<()> {
    for (index, s) in samples.iter().enumerate() {
        Error::check_dim(2 * xi.dim(), s.point.len())?;
        Error::check_dim(2 * xi.dim(), s.value.len())?;
        let z: Vec<S> = s.point.iter().zip(&s.value).map(|(&a, &b)| a + mu * b).collect();
        let j = xi.resolvent(mu, &z)?;
        let violation = distance(&j, &s.point);
        if violation > S::lit(SAMPLE_TOL) * (S::one() + norm(&z)) {
            return Err(Error::InvalidSample {
                index,
                violation: violation.to_f64_lossy(),
            });
        }
    }
    Ok(())
}

/// Checks the structural condition on `xi` for the branch it declares (both
/// branches for [`HxiBranch::DeclaredUnknown`], passing if either holds).
pub fn check_h_xi<S: Scalar>(xi: &BoundaryOperator<S>, mu: S, samples: &[GraphSample<S>]) -> Result<HxiReport<S>> {
    validate_samples(xi, mu, samples)?;
    let n = xi.dim();
    let tol = S::lit(SIGN_TOL);

    let sign = || -> (Option<S>, Option<usize>) {
        let mut best: Option<(S, usize)> = None;
        for (i, s) in samples.iter().enumerate() {
            let (a, a2) = s.point.split_at(n);
            let (b, b2) = s.value.split_at(n);
            let v = dot(b, a).min(dot(b2, a2));
            if best.is_none_or(|(m, _)| v < m) {
                best = Some((v, i));
            }
        }
        (best.map(|b| b.0), best.map(|b| b.1))
    };
    let diagonal = || -> (Option<S>, Option<usize>) {
        let mut best: Option<(S, usize)> = None;
        for (i, s) in samples.iter().enumerate() {
            let (a, a2) = s.point.split_at(n);
            let v = distance(a, a2);
            if best.is_none_or(|(m, _)| v > m) {
                best = Some((v, i));
            }
        }
        (best.map(|b| b.0), best.map(|b| b.1))
    };

    let (sign_min, diagonal_max, witness, passed) = match xi.branch() {
        HxiBranch::SignCondition => {
            let (m, w) = sign();
            (m, None, w, m.is_none_or(|v| v >= -tol))
        }
        HxiBranch::DiagonalDomain => {
            let (m, w) = diagonal();
            (None, m, w, m.is_none_or(|v| v <= tol))
        }
        HxiBranch::DeclaredUnknown => {
            let (sm, sw) = sign();
            let (dm, dw) = diagonal();
            let sign_ok = sm.is_none_or(|v| v >= -tol);
            let diag_ok = dm.is_none_or(|v| v <= tol);
            (sm, dm, if sign_ok { dw } else { sw }, sign_ok || diag_ok)
        }
    };
    Ok(HxiReport {
        branch: xi.branch(),
        sign_min,
        diagonal_max,
        witness,
        passed,
        evidence: Evidence::Sampled { samples: samples.len() },
        by_construction: xi.is_catalog(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct H0Report<S> {
    /// `min (A_lambda(a), b) + (A_lambda(a'), b')` over samples and lambdas.
    pub min_value: S,
    /// `(lambda, sample index)` attaining the minimum.
    pub witness: Option<(S, usize)>,
    pub passed: bool,
    pub evidence: Evidence,
    pub by_construction: bool,
}

/// Checks the compatibility condition between `A` and `xi`:
/// `(A_lambda(a), b) + (A_lambda(a'), b') >= 0` on the graph of `xi`, for every listed `lambda`.
pub fn check_h0<S: Scalar>(
    a_map: &MonotoneMap<S>,
    xi: &BoundaryOperator<S>,
    mu: S,
    lambdas: &[S],
    samples: &[GraphSample<S>],
) -> Result<H0Report<S>> {
    Error::check_dim(xi.dim(), a_map.dim())?;
    if lambdas.iter().any(|&l| !(l > S::zero())) {
        return Err(Error::invalid("every lambda must be positive"));
    }
    validate_samples(xi, mu, samples)?;
    let n = xi.dim();
    let mut best: Option<(S, (S, usize))> = None;
    for &lambda in lambdas {
        for (i, s) in samples.iter().enumerate() {
            let (a, a2) = s.point.split_at(n);
            let (b, b2) = s.value.split_at(n);
            let v = dot(&a_map.yosida(lambda, a)?, b) + dot(&a_map.yosida(lambda, a2)?, b2);
            if best.as_ref().is_none_or(|(m, _)| v < *m) {
                best = Some((v, (lambda, i)));
            }
        }
    }
    let min_value = best.as_ref().map_or(S::zero(), |b| b.0);
    Ok(H0Report {
        min_value,
        witness: best.map(|b| b.1),
        passed: min_value >= -S::lit(SIGN_TOL),
        evidence: Evidence::Sampled {
            samples: samples.len() * lambdas.len(),
        },
        by_construction: h0_by_construction(a_map, xi),
    })
}

/// Catalog pairs for which the compatibility condition holds in closed form.
pub fn h0_by_construction<S: Scalar>(a_map: &MonotoneMap<S>, xi: &BoundaryOperator<S>) -> bool {
    let a_ok = a_map.contains_origin().unwrap_or(false) && a_map.tag() != MapTag::Custom;
    match xi.kind() {
        BoundaryKind::Periodic | BoundaryKind::Neumann => true,
        BoundaryKind::Dirichlet | BoundaryKind::SturmLiouville { .. } => a_ok,
        BoundaryKind::ProductCone { first, second } => {
            if matches!(a_map.kind(), MapKind::Zero) {
                return true;
            }
            let origin_only = |k: &ConvexSet<S>| matches!(k, ConvexSet::Point(c) if c.iter().all(|&v| v == S::zero()));
            if a_ok && origin_only(first) && origin_only(second) {
                return true;
            }
            match a_map.kind() {
                MapKind::NormalCone(ConvexSet::Orthant { .. }) => {
                    inside_orthant(first) && inside_orthant(second)
                }
                _ => false,
            }
        }
        BoundaryKind::Custom { .. } => false,
    }
}

fn inside_orthant<S: Scalar>(set: &ConvexSet<S>) -> bool {
    match set {
        ConvexSet::Orthant { .. } => true,
        ConvexSet::Point(c) => c.iter().all(|&v| v >= S::zero()),
        ConvexSet::Box { lower, .. } => lower.iter().all(|&v| v >= S::zero()),
        ConvexSet::Ball { center, radius } => center.iter().all(|&v| v - *radius >= S::zero()),
        _ => false,
    }
}
