//! The multivalued right-hand side `F(t, x)`.
//!
//! A field is accessed through a single-valued selection plus a membership
//! test; the solver only ever needs one element of `F(t, x)` per node. The
//! `convex_valued` flag distinguishes convex-valued fields from fields with
//! nonconvex values (handled through a continuous selection); it changes
//! which hypotheses are reported, not how the solver runs.

use std::fmt;
use std::sync::Arc;

use crate::base::{distance, dot, norm, scale, Exponent};
use crate::error::{Error, Result};
use crate::evidence::Evidence;
use crate::sampling::{sphere_points, time_samples};
use crate::scalar::Scalar;

/// Default tolerance of the Hartman sign test.
pub const DEFAULT_HARTMAN_TOL: f64 = 1e-9;
/// Default number of uniform time samples used by the checkers.
pub const DEFAULT_TIME_SAMPLES: usize = 128;
/// Default number of spiral points per sphere (on top of the coordinate axes).
pub const DEFAULT_SPHERE_SAMPLES: usize = 64;

pub trait Selection<S: Scalar>: Send + Sync {
    /// One element of `F(t, zeta)`.
    fn select(&self, t: S, zeta: &[S]) -> Result<Vec<S>>;

    /// Whether `u in F(t, zeta)` within `tol`. Singleton-valued fields compare
    /// against the selection.
    fn member(&self, t: S, zeta: &[S], u: &[S], tol: S) -> bool {
        self.select(t, zeta)
            .map(|v| distance(&v, u) <= tol * (S::one() + norm(u)))
            .unwrap_or(false)
    }

    fn describe(&self) -> String;
}

/// Right-hand sides with closed-form selections.
#[derive(Debug, Clone, PartialEq)]
pub enum BuiltinField<S> {
    /// `-(pi/T)^2 sin(pi t / T)` in the first component; solved by `sin(pi t / T)`
    /// when `p = 2` under homogeneous Dirichlet conditions.
    ManufacturedSine { horizon: S },
    /// `-2 (p-1) |T - 2t|^{p-2}` in the first component; solved by `t (T - t)`.
    ManufacturedQuadratic { horizon: S, p: S },
    Constant(Vec<S>),
    /// `F(t, zeta) = {scale * zeta}`; `scale = 1` is the linear field, `-1` the negated one.
    Linear { scale: S },
    /// `before` for `t <= switch`, `after` for `t > switch`.
    Step { before: Vec<S>, after: Vec<S>, switch: S },
    /// Piecewise-linear interpolation of `(t, value)` rows; constant beyond the ends.
    Tabulated { times: Vec<S>, values: Vec<Vec<S>> },
}

impl<S: Scalar> BuiltinField<S> {
    fn forcing(&self, t: S, dim: usize) -> Option<Vec<S>> {
        let first = |v: S| {
            let mut out = vec![S::zero(); dim];
            out[0] = v;
            out
        };
        match self {
            BuiltinField::ManufacturedSine { horizon } => {
                let w = S::PI() / *horizon;
                Some(first(-(w * w) * (w * t).sin()))
            }
            BuiltinField::ManufacturedQuadratic { horizon, p } => {
                let two = S::lit(2.0);
                let s = (*horizon - two * t).abs();
                let v = if *p == two { S::one() } else { s.powf(*p - two) };
                Some(first(-two * (*p - S::one()) * v))
            }
            BuiltinField::Constant(c) => Some(c.clone()),
            BuiltinField::Step { before, after, switch } => {
                Some(if t <= *switch { before.clone() } else { after.clone() })
            }
            BuiltinField::Tabulated { times, values } => Some(interpolate(times, values, t)),
            BuiltinField::Linear { .. } => None,
        }
    }

    /// Closed-form `sup_t sup_{|zeta| <= k} |F(t, zeta)|`.
    pub fn growth_bound(&self, k: S) -> S {
        match self {
            BuiltinField::ManufacturedSine { horizon } => {
                let w = S::PI() / *horizon;
                w * w
            }
            BuiltinField::ManufacturedQuadratic { horizon, p } => {
                let two = S::lit(2.0);
                two * (*p - S::one()) * horizon.powf(*p - two)
            }
            BuiltinField::Constant(c) => norm(c),
            BuiltinField::Linear { scale } => scale.abs() * k,
            BuiltinField::Step { before, after, .. } => norm(before).max(norm(after)),
            BuiltinField::Tabulated { values, .. } => {
                values.iter().map(|v| norm(v)).fold(S::zero(), S::max)
            }
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        match self {
            BuiltinField::ManufacturedSine { horizon } | BuiltinField::ManufacturedQuadratic { horizon, .. } => {
                if !(*horizon > S::zero()) {
                    return Err(Error::invalid("field horizon must be positive"));
                }
            }
            BuiltinField::Constant(c) => Error::check_dim(dim, c.len())?,
            BuiltinField::Step { before, after, .. } => {
                Error::check_dim(dim, before.len())?;
                Error::check_dim(dim, after.len())?;
            }
            BuiltinField::Tabulated { times, values } => {
                Error::check_dim(times.len(), values.len())?;
                if times.is_empty() {
                    return Err(Error::invalid("tabulated field needs at least one row"));
                }
                if times.windows(2).any(|w| !(w[0] < w[1])) {
                    return Err(Error::invalid("tabulated field times must be strictly increasing"));
                }
                for v in values {
                    Error::check_dim(dim, v.len())?;
                }
            }
            BuiltinField::Linear { .. } => {}
        }
        Ok(())
    }
}

fn interpolate<S: Scalar>(times: &[S], values: &[Vec<S>], t: S) -> Vec<S> {
    if t <= times[0] {
        return values[0].clone();
    }
    let last = times.len() - 1;
    if t >= times[last] {
        return values[last].clone();
    }
    let k = times.partition_point(|&s| s <= t) - 1;
    let w = (t - times[k]) / (times[k + 1] - times[k]);
    values[k]
        .iter()
        .zip(&values[k + 1])
        .map(|(&a, &b)| a + w * (b - a))
        .collect()
}

struct BuiltinSelection<S> {
    field: BuiltinField<S>,
    dim: usize,
}

impl<S: Scalar> Selection<S> for BuiltinSelection<S> {
    fn select(&self, t: S, zeta: &[S]) -> Result<Vec<S>> {
        Ok(match &self.field {
            BuiltinField::Linear { scale: s } => scale(*s, zeta),
            other => other.forcing(t, self.dim).expect("state-independent field"),
        })
    }

    fn describe(&self) -> String {
        format!("{:?}", self.field)
    }
}

pub type SelectFn<S> = Arc<dyn Fn(S, &[S]) -> Result<Vec<S>> + Send + Sync>;
pub type MemberFn<S> = Arc<dyn Fn(S, &[S], &[S], S) -> bool + Send + Sync>;

/// Selection and membership supplied by the caller.
#[derive(Clone)]
pub struct ClosureSelection<S> {
    pub name: String,
    pub select: SelectFn<S>,
    /// Membership test; when absent the field is treated as singleton-valued.
    pub member: Option<MemberFn<S>>,
}

impl<S: Scalar> Selection<S> for ClosureSelection<S> {
    fn select(&self, t: S, zeta: &[S]) -> Result<Vec<S>> {
        (self.select)(t, zeta)
    }

    fn member(&self, t: S, zeta: &[S], u: &[S], tol: S) -> bool {
        match &self.member {
            Some(m) => m(t, zeta, u, tol),
            None => self
                .select(t, zeta)
                .map(|v| distance(&v, u) <= tol * (S::one() + norm(u)))
                .unwrap_or(false),
        }
    }

    fn describe(&self) -> String {
        self.name.clone()
    }
}

pub type GrowthFn<S> = Arc<dyn Fn(S) -> S + Send + Sync>;

/// `F : [0, T] x R^N -> 2^{R^N}` accessed through a selection.
#[derive(Clone)]
pub struct MultiField<S: Scalar> {
    dim: usize,
    horizon: S,
    convex_valued: bool,
    selection: Arc<dyn Selection<S>>,
    growth_bound: Option<GrowthFn<S>>,
}

impl<S: Scalar> fmt::Debug for MultiField<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MultiField")
            .field("dim", &self.dim)
            .field("horizon", &self.horizon)
            .field("convex_valued", &self.convex_valued)
            .field("selection", &self.selection.describe())
            .finish()
    }
}

impl<S: Scalar> MultiField<S> {
    pub fn new(dim: usize, horizon: S, selection: Arc<dyn Selection<S>>, convex_valued: bool) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("field dimension must be at least 1"));
        }
        if !(horizon > S::zero()) {
            return Err(Error::invalid("field horizon must be positive"));
        }
        Ok(Self {
            dim,
            horizon,
            convex_valued,
            selection,
            growth_bound: None,
        })
    }

    /// Singleton-valued builtin field with its closed-form growth bound attached.
    pub fn builtin(dim: usize, horizon: S, field: BuiltinField<S>) -> Result<Self> {
        field.validate(dim)?;
        let bound_source = field.clone();
        let mut out = Self::new(dim, horizon, Arc::new(BuiltinSelection { field, dim }), true)?;
        out.growth_bound = Some(Arc::new(move |k| bound_source.growth_bound(k)));
        Ok(out)
    }

    pub fn from_closure(
        dim: usize,
        horizon: S,
        name: impl Into<String>,
        select: impl Fn(S, &[S]) -> Vec<S> + Send + Sync + 'static,
    ) -> Result<Self> {
        let sel = ClosureSelection {
            name: name.into(),
            select: Arc::new(move |t, z: &[S]| Ok(select(t, z))),
            member: None,
        };
        Self::new(dim, horizon, Arc::new(sel), true)
    }

    pub fn with_growth_bound(mut self, bound: impl Fn(S) -> S + Send + Sync + 'static) -> Self {
        self.growth_bound = Some(Arc::new(bound));
        self
    }

    pub fn with_convex_valued(mut self, convex: bool) -> Self {
        self.convex_valued = convex;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn horizon(&self) -> S {
        self.horizon
    }

    pub fn is_convex_valued(&self) -> bool {
        self.convex_valued
    }

    pub fn growth_bound(&self, k: S) -> Option<S> {
        self.growth_bound.as_ref().map(|g| g(k))
    }

    pub fn describe(&self) -> String {
        self.selection.describe()
    }

    pub fn select(&self, t: S, zeta: &[S]) -> Result<Vec<S>> {
        Error::check_dim(self.dim, zeta.len())?;
        let u = self.selection.select(t, zeta)?;
        Error::check_dim(self.dim, u.len())?;
        Ok(u)
    }

    pub fn member(&self, t: S, zeta: &[S], u: &[S], tol: S) -> bool {
        self.selection.member(t, zeta, u, tol)
    }
}

/// `p_M`: identity on the closed `M`-ball, radial projection onto its sphere outside.
pub fn radial_retraction<S: Scalar>(radius: S, zeta: &[S]) -> Result<Vec<S>> {
    if !(radius > S::zero()) {
        return Err(Error::invalid(format!("retraction radius must be positive, got {radius}")));
    }
    Ok(retract(radius, zeta))
}

pub(crate) fn retract<S: Scalar>(radius: S, zeta: &[S]) -> Vec<S> {
    let r = norm(zeta);
    if r <= radius {
        zeta.to_vec()
    } else {
        scale(radius / r, zeta)
    }
}

/// One element of the truncated field `-F(t, p_M(zeta)) + phi(p_M(zeta))`.
pub fn truncated_select<S: Scalar>(
    field: &MultiField<S>,
    exponent: &Exponent<S>,
    radius: S,
    t: S,
    zeta: &[S],
) -> Result<Vec<S>> {
    let y = radial_retraction(radius, zeta)?;
    let f = field.select(t, &y)?;
    let phi = exponent.phi(&y);
    Ok(phi.iter().zip(&f).map(|(&a, &b)| a - b).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct HartmanWitness<S> {
    pub t: S,
    pub zeta: Vec<S>,
    pub u: Vec<S>,
}

/// Outcome of the sampled Hartman sign test `(u, zeta) >= 0` on `|zeta| = M`.
#[derive(Debug, Clone, PartialEq)]
pub struct HartmanReport<S> {
    pub radius: S,
    pub sample_count: usize,
    pub min_inner_product: S,
    pub witness: HartmanWitness<S>,
    pub tolerance: S,
    pub passed: bool,
    pub evidence: Evidence,
}

pub fn check_hartman<S: Scalar>(
    field: &MultiField<S>,
    radius: S,
    t_samples: usize,
    sphere_samples: usize,
) -> Result<HartmanReport<S>> {
    check_hartman_with(field, radius, t_samples, sphere_samples, S::lit(DEFAULT_HARTMAN_TOL), 0)
}

/// [`check_hartman`] with explicit tolerance and sampling seed. The minimum is
/// reduced in a fixed order (time-major, then sphere point order), so ties are
/// resolved deterministically toward the first sample.
pub fn check_hartman_with<S: Scalar>(
    field: &MultiField<S>,
    radius: S,
    t_samples: usize,
    sphere_samples: usize,
    tol: S,
    seed: u64,
) -> Result<HartmanReport<S>> {
    if !(radius > S::zero()) {
        return Err(Error::invalid("Hartman radius must be positive"));
    }
    if t_samples == 0 || sphere_samples == 0 {
        return Err(Error::invalid("sample counts must be at least 1"));
    }
    let times = time_samples(field.horizon(), t_samples);
    let points = sphere_points(field.dim(), radius, sphere_samples, seed);
    let mut best: Option<(S, HartmanWitness<S>)> = None;
    let mut count = 0;
    for &t in &times {
        for zeta in &points {
            let u = field.select(t, zeta)?;
            let ip = dot(&u, zeta);
            count += 1;
            if best.as_ref().is_none_or(|(m, _)| ip < *m) {
                best = Some((
                    ip,
                    HartmanWitness {
                        t,
                        zeta: zeta.clone(),
                        u,
                    },
                ));
            }
        }
    }
    let (min_ip, witness) = best.expect("at least one sample");
    Ok(HartmanReport {
        radius,
        sample_count: count,
        min_inner_product: min_ip,
        witness,
        tolerance: tol,
        passed: min_ip >= -tol,
        evidence: Evidence::Sampled { samples: count },
    })
}

/// Empirical `sup_t sup_{|zeta| <= k} |u|` over selections: a lower bound on the
/// true supremum, taken over `samples` times and spherical shells of radius
/// `k, 3k/4, k/2, k/4, 0`.
pub fn estimate_growth<S: Scalar>(field: &MultiField<S>, k: S, samples: usize) -> Result<S> {
    if !(k > S::zero()) {
        return Err(Error::invalid("growth radius must be positive"));
    }
    let samples = samples.max(1);
    let times = time_samples(field.horizon(), samples);
    let mut shells: Vec<Vec<S>> = Vec::new();
    for frac in [1.0, 0.75, 0.5, 0.25] {
        shells.extend(sphere_points(field.dim(), k * S::lit(frac), samples, 0));
    }
    shells.push(vec![S::zero(); field.dim()]);
    let mut best = S::zero();
    for &t in &times {
        for zeta in &shells {
            best = best.max(norm(&field.select(t, zeta)?));
        }
    }
    Ok(best)
}

/// Sampled check that the selection is a member of the field.
pub fn check_selection_membership<S: Scalar>(field: &MultiField<S>, radius: S, samples: usize) -> Result<bool> {
    let times = time_samples(field.horizon(), samples.max(1));
    let points = sphere_points(field.dim(), radius, samples.max(1), 0);
    for &t in &times {
        for zeta in &points {
            let u = field.select(t, zeta)?;
            if !field.member(t, zeta, &u, S::lit(1e-9)) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
