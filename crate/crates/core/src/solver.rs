//! Discretization, Newton/Picard solve and `lambda -> 0` continuation.
//!
//! Unknowns are the nodal values `x_0 .. x_n` on a uniform grid. Interior rows are the
//! conservative flux form
//!
//! ```text
//! (phi(d_{i+1/2}) - phi(d_{i-1/2})) / h - A_lambda(x_i) - s_i(x_i),   d_{i+1/2} = (x_{i+1} - x_i) / h
//! ```
//!
//! where `s_i(x) = f(t_i, x)` for a selection `f` of `F`, or with a Hartman radius `M`,
//! `s_i(x) = f(t_i, p_M x) + phi(x) - phi(p_M x)`. The two boundary blocks are the
//! resolvent residual of `xi` with `b = phi(d_{1/2})`, `b_T = -phi(d_{n-1/2})`.
//!
//! The flux form gives an exact summation-by-parts identity
//! `<V_h x, x> = sum_i h |d_{i+1/2}|^p + (b, x_0) + (b_T, x_n)`,
//! with `<V_h x, x> = -sum_{interior} (phi(d_{i+1/2}) - phi(d_{i-1/2}), x_i)`.

use std::fmt;

use crate::base::{dot, norm, norm_inf, Exponent, Grid, Trajectory};
use crate::boundary::{bc_residual, BcResidual, BoundaryOperator, HxiBranch};
use crate::error::{Error, NonConvergence, Result};
use crate::fields::{check_hartman, estimate_growth, retract, HartmanReport, MultiField};
use crate::linalg::BandMatrix;
use crate::monotone::MonotoneMap;
use crate::scalar::Scalar;

/// `tol_M = HARTMAN_SLACK * h` for the discrete Hartman certificate.
pub const HARTMAN_SLACK: f64 = 10.0;

/// A boundary value inclusion on `[0, T]`.
#[derive(Debug, Clone)]
pub struct ProblemSpec<S: Scalar> {
    exponent: Exponent<S>,
    horizon: S,
    a: MonotoneMap<S>,
    field: MultiField<S>,
    xi: BoundaryOperator<S>,
    hartman_radius: Option<S>,
}

impl<S: Scalar> ProblemSpec<S> {
    /// Checks that the dimensions agree, `0 in A(0)` and `(0, 0) in xi(0, 0)`.
    pub fn new(
        exponent: Exponent<S>,
        horizon: S,
        a: MonotoneMap<S>,
        field: MultiField<S>,
        xi: BoundaryOperator<S>,
    ) -> Result<Self> {
        if !(horizon > S::zero()) || !horizon.is_finite() {
            return Err(Error::InvalidProblem(format!("horizon must be positive, got {horizon}")));
        }
        let dim = a.dim();
        if dim == 0 || field.dim() != dim || xi.dim() != dim {
            return Err(Error::InvalidProblem(format!(
                "dimensions disagree: A has {}, F has {}, xi has {}",
                dim,
                field.dim(),
                xi.dim()
            )));
        }
        if (field.horizon() - horizon).abs() > S::lit(1e-12) * horizon {
            return Err(Error::InvalidProblem(format!(
                "field horizon {} differs from problem horizon {horizon}",
                field.horizon()
            )));
        }
        if !a.contains_origin()? {
            return Err(Error::InvalidProblem("0 is not in A(0)".into()));
        }
        if !xi.contains_origin()? {
            return Err(Error::InvalidProblem("(0, 0) is not in xi(0, 0)".into()));
        }
        Ok(Self {
            exponent,
            horizon,
            a,
            field,
            xi,
            hartman_radius: None,
        })
    }

    /// Enables truncation by the radial retraction onto the `M`-ball.
    pub fn with_hartman_radius(mut self, radius: S) -> Result<Self> {
        if !(radius > S::zero()) || !radius.is_finite() {
            return Err(Error::InvalidProblem(format!("Hartman radius must be positive, got {radius}")));
        }
        self.hartman_radius = Some(radius);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    pub fn exponent(&self) -> &Exponent<S> {
        &self.exponent
    }

    pub fn horizon(&self) -> S {
        self.horizon
    }

    pub fn a(&self) -> &MonotoneMap<S> {
        &self.a
    }

    pub fn field(&self) -> &MultiField<S> {
        &self.field
    }

    pub fn xi(&self) -> &BoundaryOperator<S> {
        &self.xi
    }

    pub fn hartman_radius(&self) -> Option<S> {
        self.hartman_radius
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig<S> {
    /// Grid intervals `n`.
    pub intervals: usize,
    /// Strictly decreasing positive `lambda_k`.
    pub lambda_schedule: Vec<S>,
    /// Jacobian smoothing per `lambda_k`; `None` means `eps_k = sqrt(lambda_k) h`.
    pub epsilon_schedule: Option<Vec<S>>,
    pub newton_max_iters: usize,
    /// Converged when `|R|_inf <= newton_tol (1 + rhs scale)`.
    pub newton_tol: S,
    pub backtrack: S,
    pub min_step: S,
    pub picard_fallback_iters: usize,
    /// Resolvent parameter of the boundary residual.
    pub mu: S,
    /// Time samples for the growth estimate used by the derivative certificate.
    pub growth_samples: usize,
    /// Seed for the Hartman hypothesis check.
    pub seed: u64,
}

impl<S: Scalar> Default for SolverConfig<S> {
    fn default() -> Self {
        Self {
            intervals: 64,
            lambda_schedule: (0..=6).map(|k| S::lit(10f64.powi(-k))).collect(),
            epsilon_schedule: None,
            newton_max_iters: 50,
            newton_tol: S::lit(1e-10),
            backtrack: S::lit(0.5),
            min_step: S::lit(2f64.powi(-20)),
            picard_fallback_iters: 200,
            mu: S::one(),
            growth_samples: 16,
            seed: 0,
        }
    }
}

impl<S: Scalar> SolverConfig<S> {
    pub fn with_intervals(mut self, intervals: usize) -> Self {
        self.intervals = intervals;
        self
    }

    pub fn with_lambda_schedule(mut self, schedule: Vec<S>) -> Self {
        self.lambda_schedule = schedule;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.intervals < 2 {
            return Err(Error::invalid("at least 2 grid intervals are required"));
        }
        check_schedule("lambda_schedule", &self.lambda_schedule)?;
        if let Some(eps) = &self.epsilon_schedule {
            check_schedule("epsilon_schedule", eps)?;
            if eps.len() != self.lambda_schedule.len() {
                return Err(Error::invalid("epsilon_schedule must match lambda_schedule in length"));
            }
        }
        for (name, v) in [("newton_tol", self.newton_tol), ("min_step", self.min_step), ("mu", self.mu)] {
            if !(v > S::zero()) || !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.backtrack > S::zero() && self.backtrack < S::one()) {
            return Err(Error::invalid("backtrack factor must lie in (0, 1)"));
        }
        if self.newton_max_iters == 0 {
            return Err(Error::invalid("newton_max_iters must be at least 1"));
        }
        Ok(())
    }

    pub fn grid(&self, horizon: S) -> Result<Grid<S>> {
        Grid::new(horizon, self.intervals)
    }

    fn epsilon(&self, k: usize, h: S) -> S {
        match &self.epsilon_schedule {
            Some(eps) => eps[k],
            None => self.lambda_schedule[k].sqrt() * h,
        }
    }
}

fn check_schedule<S: Scalar>(name: &str, s: &[S]) -> Result<()> {
    if s.is_empty() {
        return Err(Error::invalid(format!("{name} must not be empty")));
    }
    if s.iter().any(|&v| !(v > S::zero()) || !v.is_finite()) {
        return Err(Error::invalid(format!("{name} entries must be positive")));
    }
    if s.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::invalid(format!("{name} must be strictly decreasing")));
    }
    Ok(())
}

/// One pass/fail certificate with its measured value and the bound it is compared to.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate<S> {
    pub name: &'static str,
    pub passed: bool,
    pub measured: S,
    pub bound: S,
    /// Node index (or sample index) attaining the measured value.
    pub witness: Option<usize>,
    pub note: String,
}

impl<S: Scalar> Certificate<S> {
    /// Signed distance to failure; negative when failed.
    pub fn slack(&self) -> S {
        match self.name {
            "hartman-hypothesis" => self.measured - self.bound,
            _ => self.bound - self.measured,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Verdicts<S> {
    pub certificates: Vec<Certificate<S>>,
}

impl<S: Scalar> Verdicts<S> {
    pub fn all_passed(&self) -> bool {
        self.certificates.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&Certificate<S>> {
        self.certificates.iter().find(|c| c.name == name)
    }

    pub fn failed(&self) -> impl Iterator<Item = &Certificate<S>> {
        self.certificates.iter().filter(|c| !c.passed)
    }
}

impl<S: Scalar> fmt::Display for Verdicts<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.certificates {
            writeln!(
                f,
                "{:<20} {} measured {:e} bound {:e}",
                c.name,
                if c.passed { "pass" } else { "FAIL" },
                c.measured,
                c.bound
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuationStep<S> {
    pub lambda: S,
    pub epsilon: S,
    pub newton_iterations: usize,
    pub picard_sweeps: usize,
    pub residual: S,
    /// `max_i |x_i - x_i^prev|` against the previous `lambda` (absent for the first step).
    pub step_diff: Option<S>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport<S> {
    pub lambda: S,
    pub trajectory: Trajectory<S>,
    /// `phi(d_{i+1/2})`, `i = 0..n-1`.
    pub flux: Vec<Vec<S>>,
    /// `f_i = f(t_i, x_i)` (at `p_M x_i` when truncating), `i = 0..n`.
    pub selection_trace: Vec<Vec<S>>,
    /// `u_i = A_lambda(x_i)`.
    pub multiplier_trace: Vec<Vec<S>>,
    /// `|R|_inf` of the assembled residual.
    pub residual_norm: S,
    pub bc_residual_norm: S,
    pub hartman_max_norm: S,
    /// `max_i |x_i - J_1(x_i + u_i)|`.
    pub graph_membership_residual: S,
    pub continuation_history: Vec<ContinuationStep<S>>,
    pub verdicts: Verdicts<S>,
    /// `false` when the field is declared nonconvex-valued (selection-based certificate).
    pub convex_mode: bool,
}

/// Everything derived from one trajectory at one `lambda`.
struct Evaluation<S> {
    residual: Vec<S>,
    flux: Vec<Vec<S>>,
    selection: Vec<Vec<S>>,
    multiplier: Vec<Vec<S>>,
    bc: BcResidual<S>,
    scale: S,
}

impl<S: Scalar> Evaluation<S> {
    fn residual_inf(&self) -> S {
        norm_inf(&self.residual)
    }

    fn residual_l2(&self) -> S {
        norm(&self.residual)
    }
}

/// `(f(t, y), s(x))` with `y = x` or `y = p_M x`.
fn source<S: Scalar>(spec: &ProblemSpec<S>, t: S, x: &[S]) -> Result<(Vec<S>, Vec<S>)> {
    match spec.hartman_radius {
        None => {
            let f = spec.field.select(t, x)?;
            Ok((f.clone(), f))
        }
        Some(m) => {
            let y = retract(m, x);
            let f = spec.field.select(t, &y)?;
            let phi_x = spec.exponent.phi(x);
            let phi_y = spec.exponent.phi(&y);
            let s = f
                .iter()
                .zip(phi_x.iter().zip(&phi_y))
                .map(|(&fi, (&a, &b))| fi + a - b)
                .collect();
            Ok((f, s))
        }
    }
}

fn check_traj<S: Scalar>(spec: &ProblemSpec<S>, traj: &Trajectory<S>) -> Result<()> {
    Error::check_dim(spec.dim(), traj.dim())?;
    let g = traj.grid();
    if (g.horizon() - spec.horizon).abs() > S::lit(1e-12) * spec.horizon {
        return Err(Error::invalid("trajectory grid horizon differs from the problem horizon"));
    }
    Ok(())
}

fn evaluate<S: Scalar>(spec: &ProblemSpec<S>, lambda: S, mu: S, traj: &Trajectory<S>) -> Result<Evaluation<S>> {
    let grid = traj.grid();
    let n = grid.intervals();
    let dim = spec.dim();
    let h = grid.step();
    let flux: Vec<Vec<S>> = (0..n).map(|i| spec.exponent.phi(&traj.difference(i))).collect();
    let mut residual = vec![S::zero(); dim * (n + 1)];
    let mut selection = Vec::with_capacity(n + 1);
    let mut multiplier = Vec::with_capacity(n + 1);
    let mut scale = S::zero();
    for i in 0..=n {
        let t = grid.node(i);
        let x = traj.node(i);
        let (f, s) = source(spec, t, x)?;
        let u = spec.a.yosida(lambda, x)?;
        if i > 0 && i < n {
            for k in 0..dim {
                residual[i * dim + k] = (flux[i][k] - flux[i - 1][k]) / h - u[k] - s[k];
            }
            scale = scale.max(norm_inf(&s)).max(norm_inf(&u));
        }
        selection.push(f);
        multiplier.push(u);
    }
    let b_t: Vec<S> = flux[n - 1].iter().map(|&v| -v).collect();
    let bc = bc_residual(&spec.xi, mu, traj.node(0), traj.node(n), &flux[0], &b_t)?;
    residual[..dim].copy_from_slice(&bc.value[..dim]);
    residual[n * dim..].copy_from_slice(&bc.value[dim..]);
    Ok(Evaluation {
        residual,
        flux,
        selection,
        multiplier,
        bc,
        scale,
    })
}

/// Residual of the regularized (and, with `M` set, truncated) discrete problem,
/// node-major: block `0` and block `n` hold the two halves of the boundary residual.
pub fn assemble_residual<S: Scalar>(
    spec: &ProblemSpec<S>,
    lambda: S,
    traj: &Trajectory<S>,
    config: &SolverConfig<S>,
) -> Result<Vec<S>> {
    if !(lambda > S::zero()) {
        return Err(Error::invalid(format!("lambda must be positive, got {lambda}")));
    }
    check_traj(spec, traj)?;
    Ok(evaluate(spec, lambda, config.mu, traj)?.residual)
}

/// Interleaved node order `0, n, 1, n-1, 2, ...` so that the boundary coupling
/// between `x_0` and `x_n` stays inside a narrow band.
struct Layout {
    dim: usize,
    pos: Vec<usize>,
    band: usize,
}

impl Layout {
    fn new(intervals: usize, dim: usize) -> Self {
        let n = intervals;
        let mut pos = vec![0; n + 1];
        let (mut lo, mut hi, mut k) = (0usize, n, 0usize);
        while lo <= hi {
            pos[lo] = k;
            k += 1;
            if hi != lo {
                pos[hi] = k;
                k += 1;
            }
            lo += 1;
            hi -= 1;
        }
        let diff = |a: usize, b: usize| pos[a].abs_diff(pos[b]);
        let mut max_diff = (1..=n).map(|i| diff(i, i - 1)).max().unwrap_or(0);
        for (a, b) in [(0, n - 1), (0, n), (n, 1), (0, 1), (n, n - 1)] {
            max_diff = max_diff.max(diff(a, b));
        }
        Self {
            dim,
            pos,
            band: (max_diff + 1) * dim - 1,
        }
    }

    fn index(&self, node: usize, k: usize) -> usize {
        self.pos[node] * self.dim + k
    }

    fn permute<S: Copy + Default>(&self, node_major: &[S]) -> Vec<S> {
        let mut out = vec![S::default(); node_major.len()];
        for (node, _) in self.pos.iter().enumerate() {
            for k in 0..self.dim {
                out[self.index(node, k)] = node_major[node * self.dim + k];
            }
        }
        out
    }

    fn unpermute<S: Copy + Default>(&self, permuted: &[S]) -> Vec<S> {
        let mut out = vec![S::default(); permuted.len()];
        for (node, _) in self.pos.iter().enumerate() {
            for k in 0..self.dim {
                out[node * self.dim + k] = permuted[self.index(node, k)];
            }
        }
        out
    }
}

fn matmul<S: Scalar>(a: &[S], b: &[S], rows: usize, inner: usize, cols: usize) -> Vec<S> {
    let mut out = vec![S::zero(); rows * cols];
    for i in 0..rows {
        for k in 0..inner {
            let aik = a[i * inner + k];
            if aik == S::zero() {
                continue;
            }
            for j in 0..cols {
                out[i * cols + j] = out[i * cols + j] + aik * b[k * cols + j];
            }
        }
    }
    out
}

/// Jacobian of the residual with `phi` replaced by `phi_eps` in the flux terms
/// and a one-sided difference quotient for the field term.
fn jacobian<S: Scalar>(
    spec: &ProblemSpec<S>,
    lambda: S,
    eps: S,
    mu: S,
    traj: &Trajectory<S>,
    eval: &Evaluation<S>,
    layout: &Layout,
) -> Result<BandMatrix<S>> {
    let grid = traj.grid();
    let n = grid.intervals();
    let dim = spec.dim();
    let h = grid.step();
    let h2 = h * h;
    let mut jac = BandMatrix::zeros(dim * (n + 1), layout.band, layout.band);
    // Smoothing never exceeds the largest difference quotient, so iterates that
    // approach a degenerate (flat) solution keep a non-vanishing contraction rate.
    let d_max = (0..n).map(|i| norm(&traj.difference(i))).fold(S::zero(), S::max);
    let eps = if d_max > S::zero() { eps.min(d_max) } else { eps };
    let dphi: Vec<Vec<S>> = (0..n)
        .map(|i| spec.exponent.phi_smoothed_jacobian(&traj.difference(i), eps))
        .collect();
    let mut add_block = |row: usize, col: usize, block: &[S], factor: S, rows_from: usize, stride: usize| {
        for r in 0..dim {
            for c in 0..dim {
                let v = block[(rows_from + r) * stride + c] * factor;
                if v != S::zero() {
                    jac.add(layout.index(row, r), layout.index(col, c), v);
                }
            }
        }
    };
    let root = S::epsilon().sqrt();
    for i in 1..n {
        let t = grid.node(i);
        let x = traj.node(i);
        add_block(i, i + 1, &dphi[i], S::one() / h2, 0, dim);
        add_block(i, i - 1, &dphi[i - 1], S::one() / h2, 0, dim);
        add_block(i, i, &dphi[i], -S::one() / h2, 0, dim);
        add_block(i, i, &dphi[i - 1], -S::one() / h2, 0, dim);

        // -(I - J_lambda') / lambda
        let jr = spec.a.resolvent_jacobian(lambda, x)?;
        let mut ay = vec![S::zero(); dim * dim];
        for r in 0..dim {
            for c in 0..dim {
                let id = if r == c { S::one() } else { S::zero() };
                ay[r * dim + c] = -(id - jr[r * dim + c]) / lambda;
            }
        }
        add_block(i, i, &ay, S::one(), 0, dim);

        let (_, s0) = source(spec, t, x)?;
        let mut ds = vec![S::zero(); dim * dim];
        let mut xp = x.to_vec();
        for c in 0..dim {
            let step = root * x[c].abs().max(S::one());
            xp[c] = x[c] + step;
            let (_, sp) = source(spec, t, &xp)?;
            xp[c] = x[c];
            for r in 0..dim {
                ds[r * dim + c] = -(sp[r] - s0[r]) / step;
            }
        }
        add_block(i, i, &ds, S::one(), 0, dim);
    }

    // Boundary blocks: r = (x_0, x_n) - J(z), z = (x_0 + mu b, x_n + mu b_T).
    let b_t: Vec<S> = eval.flux[n - 1].iter().map(|&v| -v).collect();
    let z: Vec<S> = traj
        .node(0)
        .iter()
        .zip(&eval.flux[0])
        .map(|(&a, &b)| a + mu * b)
        .chain(traj.node(n).iter().zip(&b_t).map(|(&a, &b)| a + mu * b))
        .collect();
    let jz = spec.xi.resolvent_jacobian(mu, &z)?;
    let m2 = 2 * dim;
    // columns of jz acting on z_a and on z_b, each 2N x N
    let col_block = |offset: usize| -> Vec<S> {
        let mut out = vec![S::zero(); m2 * dim];
        for r in 0..m2 {
            for c in 0..dim {
                out[r * dim + c] = jz[r * m2 + offset + c];
            }
        }
        out
    };
    let ja = col_block(0);
    let jb = col_block(dim);
    let scaled = |d: &[S], f: S, with_identity: bool| -> Vec<S> {
        let mut out: Vec<S> = d.iter().map(|&v| v * f).collect();
        if with_identity {
            for k in 0..dim {
                out[k * dim + k] = out[k * dim + k] + S::one();
            }
        }
        out
    };
    let c0 = scaled(&dphi[0], -mu / h, true);
    let c1 = scaled(&dphi[0], mu / h, false);
    let cn1 = scaled(&dphi[n - 1], mu / h, false);
    let cn = scaled(&dphi[n - 1], -mu / h, true);
    let mut blocks = [
        (0, matmul(&ja, &c0, m2, dim, dim)),
        (1, matmul(&ja, &c1, m2, dim, dim)),
        (n - 1, matmul(&jb, &cn1, m2, dim, dim)),
        (n, matmul(&jb, &cn, m2, dim, dim)),
    ];
    for (_, b) in blocks.iter_mut() {
        for v in b.iter_mut() {
            *v = -*v;
        }
    }
    for k in 0..dim {
        blocks[0].1[k * dim + k] = blocks[0].1[k * dim + k] + S::one();
        blocks[3].1[(dim + k) * dim + k] = blocks[3].1[(dim + k) * dim + k] + S::one();
    }
    for (col, b) in &blocks {
        add_block(0, *col, b, S::one(), 0, dim);
        add_block(n, *col, b, S::one(), dim, dim);
    }
    Ok(jac)
}

struct InnerOutcome<S> {
    traj: Trajectory<S>,
    newton_iterations: usize,
    picard_sweeps: usize,
    residual: S,
}

struct Failure<S> {
    reason: String,
    best: Trajectory<S>,
    best_residual: S,
    history: Vec<S>,
}

fn converged<S: Scalar>(eval: &Evaluation<S>, tol: S) -> bool {
    eval.residual_inf() <= tol * (S::one() + eval.scale)
}

/// Damped Newton with Picard fallback at fixed `lambda`.
fn inner_solve<S: Scalar>(
    spec: &ProblemSpec<S>,
    lambda: S,
    eps: S,
    init: Trajectory<S>,
    config: &SolverConfig<S>,
    history: &mut Vec<S>,
) -> std::result::Result<InnerOutcome<S>, Failure<S>> {
    let mu = config.mu;
    let layout = Layout::new(init.grid().intervals(), spec.dim());
    let fail = |reason: String, best: Trajectory<S>, best_residual: S, history: &Vec<S>| Failure {
        reason,
        best,
        best_residual,
        history: history.clone(),
    };
    let mut x = init;
    let mut eval = match evaluate(spec, lambda, mu, &x) {
        Ok(e) => e,
        Err(e) => return Err(fail(e.to_string(), x, S::infinity(), history)),
    };
    history.push(eval.residual_inf());
    let mut best = (x.clone(), eval.residual_inf());
    let (mut newton_iterations, mut picard_sweeps) = (0, 0);
    let done = |x: Trajectory<S>, eval: &Evaluation<S>, ni: usize, ps: usize| InnerOutcome {
        traj: x,
        newton_iterations: ni,
        picard_sweeps: ps,
        residual: eval.residual_inf(),
    };

    const ROUNDS: usize = 3;
    for round in 0..ROUNDS {
        // Newton
        let mut stalled = None;
        for _ in 0..config.newton_max_iters {
            if converged(&eval, config.newton_tol) {
                return Ok(done(x, &eval, newton_iterations, picard_sweeps));
            }
            let lu = match jacobian(spec, lambda, eps, mu, &x, &eval, &layout).and_then(|j| j.factor()) {
                Ok(lu) => lu,
                Err(e) => {
                    stalled = Some(format!("Jacobian: {e}"));
                    break;
                }
            };
            let delta = layout.unpermute(&lu.solve(&layout.permute(&eval.residual)));
            if delta.iter().any(|v| !v.is_finite()) {
                stalled = Some("non-finite Newton step".into());
                break;
            }
            newton_iterations += 1;
            let current = eval.residual_l2();
            let mut step = S::one();
            let accepted = loop {
                let trial_flat: Vec<S> = x.as_flat().iter().zip(&delta).map(|(&a, &d)| a - step * d).collect();
                let trial = Trajectory::from_flat(*x.grid(), x.dim(), trial_flat).expect("same shape");
                if let Ok(te) = evaluate(spec, lambda, mu, &trial) {
                    if te.residual_l2() <= (S::one() - S::lit(1e-4) * step) * current
                        || converged(&te, config.newton_tol)
                    {
                        break Some((trial, te));
                    }
                }
                step = step * config.backtrack;
                if step < config.min_step {
                    break None;
                }
            };
            match accepted {
                Some((t, e)) => {
                    x = t;
                    eval = e;
                    let r = eval.residual_inf();
                    history.push(r);
                    if r < best.1 {
                        best = (x.clone(), r);
                    }
                }
                None => {
                    stalled = Some("line search below minimum step".into());
                    break;
                }
            }
        }
        if converged(&eval, config.newton_tol) {
            return Ok(done(x, &eval, newton_iterations, picard_sweeps));
        }
        let newton_reason = stalled.unwrap_or_else(|| "Newton iteration budget exhausted".into());

        // Picard fallback: explicit relaxation x_i <- x_i + omega R_i on interior nodes,
        // resolvent step on the boundary nodes.
        let before = best.1;
        let h = x.grid().step();
        let dmax = (0..x.grid().intervals())
            .map(|i| norm_inf(&spec.exponent.phi_smoothed_jacobian(&x.difference(i), eps)))
            .fold(S::one(), S::max);
        let mut omega = S::lit(0.25) * h * h / (dmax + h * h / lambda);
        let n = x.grid().intervals();
        let dim = spec.dim();
        for _ in 0..config.picard_fallback_iters {
            if converged(&eval, config.newton_tol) {
                return Ok(done(x, &eval, newton_iterations, picard_sweeps));
            }
            picard_sweeps += 1;
            let mut trial = x.clone();
            {
                let flat = trial.as_flat_mut();
                for k in 0..dim {
                    flat[k] = flat[k] - eval.residual[k];
                    flat[n * dim + k] = flat[n * dim + k] - eval.residual[n * dim + k];
                }
                for j in dim..n * dim {
                    flat[j] = flat[j] + omega * eval.residual[j];
                }
            }
            match evaluate(spec, lambda, mu, &trial) {
                Ok(te) if te.residual_l2() < eval.residual_l2() => {
                    x = trial;
                    eval = te;
                    omega = omega * S::lit(1.2);
                    let r = eval.residual_inf();
                    history.push(r);
                    if r < best.1 {
                        best = (x.clone(), r);
                    }
                }
                _ => omega = omega * S::lit(0.5),
            }
        }
        if converged(&eval, config.newton_tol) {
            return Ok(done(x, &eval, newton_iterations, picard_sweeps));
        }
        if round + 1 == ROUNDS || !(best.1 < before) {
            return Err(fail(
                format!("{newton_reason}; Picard fallback did not reach tolerance"),
                best.0,
                best.1,
                history,
            ));
        }
        x = best.0.clone();
        eval = match evaluate(spec, lambda, mu, &x) {
            Ok(e) => e,
            Err(e) => return Err(fail(e.to_string(), best.0, best.1, history)),
        };
    }
    unreachable!("every round returns")
}

fn non_convergence<S: Scalar>(lambda: S, f: Failure<S>, completed: &[ContinuationStep<S>]) -> Error {
    Error::NonConvergence(Box::new(NonConvergence {
        lambda: lambda.to_f64_lossy(),
        reason: f.reason,
        best_iterate: f.best.as_flat().iter().map(|v| v.to_f64_lossy()).collect(),
        best_residual: f.best_residual.to_f64_lossy(),
        residual_history: f.history.iter().map(|v| v.to_f64_lossy()).collect(),
        completed_steps: completed
            .iter()
            .map(|s| (s.lambda.to_f64_lossy(), s.newton_iterations, s.residual.to_f64_lossy()))
            .collect(),
    }))
}

fn check_init<S: Scalar>(spec: &ProblemSpec<S>, init: &Trajectory<S>, config: &SolverConfig<S>) -> Result<()> {
    check_traj(spec, init)?;
    if init.grid().intervals() != config.intervals {
        return Err(Error::invalid(format!(
            "initial trajectory has {} intervals, config asks for {}",
            init.grid().intervals(),
            config.intervals
        )));
    }
    if init.as_flat().iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("initial trajectory has non-finite entries"));
    }
    Ok(())
}

/// Solves the discrete problem at one `lambda` from `init`.
pub fn solve_regularized<S: Scalar>(
    spec: &ProblemSpec<S>,
    lambda: S,
    epsilon: S,
    init: Trajectory<S>,
    config: &SolverConfig<S>,
) -> Result<SolveReport<S>> {
    config.validate()?;
    if !(lambda > S::zero()) || !(epsilon > S::zero()) {
        return Err(Error::invalid("lambda and epsilon must be positive"));
    }
    check_init(spec, &init, config)?;
    let mut history = Vec::new();
    let out = inner_solve(spec, lambda, epsilon, init, config, &mut history)
        .map_err(|f| non_convergence(lambda, f, &[]))?;
    let step = ContinuationStep {
        lambda,
        epsilon,
        newton_iterations: out.newton_iterations,
        picard_sweeps: out.picard_sweeps,
        residual: out.residual,
        step_diff: None,
    };
    finish(spec, lambda, out.traj, vec![step], config)
}

/// Solves along the `lambda` schedule, warm-starting each step from the previous one
/// (the first from the zero trajectory).
pub fn continuation_solve<S: Scalar>(spec: &ProblemSpec<S>, config: &SolverConfig<S>) -> Result<SolveReport<S>> {
    config.validate()?;
    let grid = config.grid(spec.horizon)?;
    continuation_from(spec, Trajectory::zeros(grid, spec.dim()), config)
}

pub fn continuation_from<S: Scalar>(
    spec: &ProblemSpec<S>,
    init: Trajectory<S>,
    config: &SolverConfig<S>,
) -> Result<SolveReport<S>> {
    config.validate()?;
    check_init(spec, &init, config)?;
    let h = init.grid().step();
    let mut x = init;
    let mut steps: Vec<ContinuationStep<S>> = Vec::with_capacity(config.lambda_schedule.len());
    for (k, &lambda) in config.lambda_schedule.iter().enumerate() {
        let eps = config.epsilon(k, h);
        let mut history = Vec::new();
        let out = inner_solve(spec, lambda, eps, x.clone(), config, &mut history)
            .map_err(|f| non_convergence(lambda, f, &steps))?;
        let step_diff = if k == 0 { None } else { Some(out.traj.max_distance(&x)) };
        steps.push(ContinuationStep {
            lambda,
            epsilon: eps,
            newton_iterations: out.newton_iterations,
            picard_sweeps: out.picard_sweeps,
            residual: out.residual,
            step_diff,
        });
        x = out.traj;
    }
    let lambda = *config.lambda_schedule.last().expect("validated non-empty");
    finish(spec, lambda, x, steps, config)
}

fn finish<S: Scalar>(
    spec: &ProblemSpec<S>,
    lambda: S,
    traj: Trajectory<S>,
    history: Vec<ContinuationStep<S>>,
    config: &SolverConfig<S>,
) -> Result<SolveReport<S>> {
    let mut report = evaluate_trajectory(spec, lambda, traj, config)?;
    report.continuation_history = history;
    let mut verdicts = verify_solution(spec, &report, config)?;
    verdicts.certificates.insert(
        0,
        Certificate {
            name: "residual",
            passed: report.residual_norm.is_finite(),
            measured: report.residual_norm,
            bound: config.newton_tol,
            witness: None,
            note: "scaled by 1 + max source norm".into(),
        },
    );
    if let Some(m) = spec.hartman_radius {
        let h = check_hartman(&spec.field, m, 64, 32)?;
        verdicts.certificates.push(hartman_hypothesis_certificate(&h));
    }
    report.verdicts = verdicts;
    Ok(report)
}

fn hartman_hypothesis_certificate<S: Scalar>(h: &HartmanReport<S>) -> Certificate<S> {
    Certificate {
        name: "hartman-hypothesis",
        passed: h.passed,
        measured: h.min_inner_product,
        bound: -h.tolerance,
        witness: None,
        note: format!(
            "min (u, zeta) on |zeta| = {} at t = {}, zeta = {:?}; {}",
            h.radius,
            h.witness.t,
            h.witness.zeta,
            h.evidence.describe()
        ),
    }
}

/// Builds a report (without certificates or history) for a given trajectory. Every
/// norm in a [`SolveReport`] is produced here, so reports can be recomputed exactly.
pub fn evaluate_trajectory<S: Scalar>(
    spec: &ProblemSpec<S>,
    lambda: S,
    traj: Trajectory<S>,
    config: &SolverConfig<S>,
) -> Result<SolveReport<S>> {
    if !(lambda > S::zero()) {
        return Err(Error::invalid("lambda must be positive"));
    }
    check_traj(spec, &traj)?;
    let eval = evaluate(spec, lambda, config.mu, &traj)?;
    let (_, hartman_max_norm) = traj.max_norm();
    let (_, graph_membership_residual) = graph_membership(spec, &traj, &eval.multiplier)?;
    Ok(SolveReport {
        lambda,
        residual_norm: eval.residual_inf() / (S::one() + eval.scale),
        bc_residual_norm: eval.bc.norm,
        hartman_max_norm,
        graph_membership_residual,
        flux: eval.flux,
        selection_trace: eval.selection,
        multiplier_trace: eval.multiplier,
        trajectory: traj,
        continuation_history: Vec::new(),
        verdicts: Verdicts::default(),
        convex_mode: spec.field.is_convex_valued(),
    })
}

fn graph_membership<S: Scalar>(spec: &ProblemSpec<S>, traj: &Trajectory<S>, u: &[Vec<S>]) -> Result<(usize, S)> {
    let mut worst = (0, S::zero());
    for (i, ui) in u.iter().enumerate() {
        let x = traj.node(i);
        let z: Vec<S> = x.iter().zip(ui).map(|(&a, &b)| a + b).collect();
        let d = crate::base::distance(x, &spec.a.resolvent(S::one(), &z)?);
        if d > worst.1 {
            worst = (i, d);
        }
    }
    Ok(worst)
}

/// Terms of the discrete Green identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenTerms<S> {
    /// `<V_h x, x> = -sum_{i=1}^{n-1} (phi(d_{i+1/2}) - phi(d_{i-1/2}), x_i)`.
    pub operator_pairing: S,
    /// `sum_i h |d_{i+1/2}|^p`.
    pub derivative_energy: S,
    /// `(b, x_0) + (b_T, x_n)` with `b = phi(d_{1/2})`, `b_T = -phi(d_{n-1/2})`.
    pub boundary_terms: S,
}

impl<S: Scalar> GreenTerms<S> {
    /// `|<V_h x, x> - energy - boundary|`, zero up to rounding for every trajectory.
    pub fn identity_defect(&self) -> S {
        (self.operator_pairing - self.derivative_energy - self.boundary_terms).abs()
    }

    pub fn magnitude(&self) -> S {
        self.operator_pairing
            .abs()
            .max(self.derivative_energy.abs())
            .max(self.boundary_terms.abs())
    }
}

pub fn green_terms<S: Scalar>(exponent: &Exponent<S>, traj: &Trajectory<S>) -> GreenTerms<S> {
    let n = traj.grid().intervals();
    let h = traj.grid().step();
    let d: Vec<Vec<S>> = (0..n).map(|i| traj.difference(i)).collect();
    let g: Vec<Vec<S>> = d.iter().map(|di| exponent.phi(di)).collect();
    let operator_pairing = -(1..n)
        .map(|i| {
            let diff: Vec<S> = g[i].iter().zip(&g[i - 1]).map(|(&a, &b)| a - b).collect();
            dot(&diff, traj.node(i))
        })
        .sum::<S>();
    let derivative_energy = d.iter().zip(&g).map(|(di, gi)| h * dot(gi, di)).sum::<S>();
    let boundary_terms = dot(&g[0], traj.node(0)) - dot(&g[n - 1], traj.node(n));
    GreenTerms {
        operator_pairing,
        derivative_energy,
        boundary_terms,
    }
}

/// Recomputes the a-posteriori certificates from `report.trajectory` at `report.lambda`:
/// Hartman bound, Green inequality, derivative bound, boundary residual and graph membership.
pub fn verify_solution<S: Scalar>(
    spec: &ProblemSpec<S>,
    report: &SolveReport<S>,
    config: &SolverConfig<S>,
) -> Result<Verdicts<S>> {
    let traj = &report.trajectory;
    check_traj(spec, traj)?;
    let eval = evaluate(spec, report.lambda, config.mu, traj)?;
    let grid = traj.grid();
    let h = grid.step();
    let n = grid.intervals();
    let (max_idx, max_norm) = traj.max_norm();
    let mut certs = Vec::new();

    if let Some(m) = spec.hartman_radius {
        let bound = m + S::lit(HARTMAN_SLACK) * h;
        certs.push(Certificate {
            name: "hartman-bound",
            passed: max_norm <= bound,
            measured: max_norm,
            bound,
            witness: Some(max_idx),
            note: "max_i |x_i| <= M + 10 h".into(),
        });
    }

    let green = green_terms(&spec.exponent, traj);
    let x_scale = S::one() + norm(traj.node(0)) + norm(traj.node(n));
    let b_scale = S::one() + norm(&eval.flux[0]) + norm(&eval.flux[n - 1]);
    let bc_tol = S::lit(1e-8) * x_scale * b_scale;
    let identity_tol = S::lit(1e-10) * (S::one() + green.magnitude());
    let sign_ok = match spec.xi.branch() {
        HxiBranch::SignCondition | HxiBranch::DiagonalDomain => green.boundary_terms >= -bc_tol,
        HxiBranch::DeclaredUnknown => green.boundary_terms >= -bc_tol,
    };
    certs.push(Certificate {
        name: "green",
        passed: green.identity_defect() <= identity_tol && sign_ok,
        measured: green.derivative_energy,
        bound: green.operator_pairing + bc_tol,
        witness: None,
        note: format!(
            "<V_h x, x> = {:e}, boundary terms {:e}, identity defect {:e}",
            green.operator_pairing,
            green.boundary_terms,
            green.identity_defect()
        ),
    });

    // sum h |d|^p <= <V_h x, x> <= sum_interior h |f_i| |x_i| (+ residual) <= T R G
    let interior_residual = (dim_rows(&eval.residual, spec.dim(), 1, n)).fold(S::zero(), S::max);
    let selection_max = eval.selection.iter().map(|f| norm(f)).fold(S::zero(), S::max);
    let radius = spec.hartman_radius.unwrap_or(max_norm).min(max_norm.max(S::zero()));
    let growth = if radius > S::zero() {
        estimate_growth(&spec.field, radius, config.growth_samples)?
    } else {
        S::zero()
    };
    let g = growth.max(selection_max);
    let bound = spec.horizon * max_norm * (g + interior_residual) * (S::one() + S::lit(1e-9)) + S::lit(1e-12);
    certs.push(Certificate {
        name: "derivative-bound",
        passed: green.derivative_energy <= bound,
        measured: green.derivative_energy,
        bound,
        witness: None,
        note: format!("T R G with R = {max_norm:e}, G = {g:e}"),
    });

    certs.push(Certificate {
        name: "bc-residual",
        passed: eval.bc.norm <= bc_tol,
        measured: eval.bc.norm,
        bound: bc_tol,
        witness: None,
        note: format!("resolvent residual with mu = {}", config.mu),
    });

    let (gi, gm) = graph_membership(spec, traj, &eval.multiplier)?;
    let u_max = eval.multiplier.iter().map(|u| norm(u)).fold(S::zero(), S::max);
    let graph_bound = S::lit(2.0) * report.lambda * u_max + S::lit(1e-12) * (S::one() + max_norm);
    let constant = if report.lambda > S::zero() { gm / report.lambda } else { S::zero() };
    certs.push(Certificate {
        name: "graph-membership",
        passed: gm <= graph_bound,
        measured: gm,
        bound: graph_bound,
        witness: Some(gi),
        note: format!("measured C = residual / lambda = {constant:e}"),
    });

    Ok(Verdicts { certificates: certs })
}

fn dim_rows<S: Scalar>(r: &[S], dim: usize, from: usize, to: usize) -> impl Iterator<Item = S> + '_ {
    (from..to).map(move |i| norm(&r[i * dim..(i + 1) * dim]))
}

/// One row of a grid refinement study.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow<S> {
    pub intervals: usize,
    pub step: S,
    /// `max_i |x_i - x_ref(t_i)|`.
    pub error: S,
    /// `log2(e_{k-1} / e_k)` against the previous row.
    pub order: Option<S>,
}

/// Solves on each grid (each strictly refining the previous by a factor of two)
/// and measures the max nodal error against `reference`.
pub fn convergence_study<S: Scalar>(
    spec: &ProblemSpec<S>,
    grids: &[usize],
    config: &SolverConfig<S>,
    reference: impl Fn(S) -> Vec<S>,
) -> Result<Vec<StudyRow<S>>> {
    if grids.is_empty() {
        return Err(Error::invalid("grid sequence must not be empty"));
    }
    if grids.windows(2).any(|w| w[1] != 2 * w[0]) {
        return Err(Error::invalid("grid sequence must double at every step"));
    }
    let mut rows: Vec<StudyRow<S>> = Vec::with_capacity(grids.len());
    for &n in grids {
        let cfg = config.clone().with_intervals(n);
        let report = continuation_solve(spec, &cfg)?;
        let grid = *report.trajectory.grid();
        let exact = Trajectory::from_fn(grid, spec.dim(), &reference)?;
        let error = report.trajectory.max_distance(&exact);
        let order = rows.last().map(|prev| {
            if error > S::zero() && prev.error > S::zero() {
                (prev.error / error).log2()
            } else {
                S::nan()
            }
        });
        rows.push(StudyRow {
            intervals: n,
            step: grid.step(),
            error,
            order,
        });
    }
    Ok(rows)
}
