//! The `solve`, `verify` and `study` verbs.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use plbvp_core::fields::{check_hartman_with, DEFAULT_HARTMAN_TOL};
use plbvp_core::{
    check_h0, check_h_xi, continuation_solve, convergence_study, estimate_growth, graph_samples, Certificate,
    ContinuationStep, Error as CoreError, Evidence, MultiField64, SolveReport64,
};
use serde::Serialize;
use thiserror::Error;

use crate::config::{fmt_real, ConfigError, ProblemSource, RunConfig};
use crate::problem::{boundary_operator, build_spec, builtin_field, monotone_map, reference_solution, solver_config};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CERTIFICATE: i32 = 2;

pub const DEFAULT_SOLUTION: &str = "solution.csv";
pub const DEFAULT_REPORT: &str = "report.json";
pub const DEFAULT_VERIFY_REPORT: &str = "verify.json";
pub const DEFAULT_STUDY: &str = "study.csv";
pub const DEFAULT_GRIDS: [usize; 4] = [16, 32, 64, 128];

/// Graph samples of `xi` drawn by `verify`.
const XI_SAMPLES: usize = 256;
const XI_SAMPLE_RADIUS: f64 = 2.0;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error(transparent)]
    Solver(#[from] CoreError),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },

    #[error("writing table: {0}")]
    Csv(#[from] csv::Error),

    #[error("writing report: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Directory that relative output paths are resolved against.
    pub output_dir: PathBuf,
}

/// Exit code plus the files written and a one-paragraph human summary.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub code: i32,
    pub files: Vec<PathBuf>,
    pub summary: String,
}

fn resolve(opts: &RunOptions, configured: &Option<String>, default: &str) -> Result<PathBuf, CliError> {
    let rel = configured.as_deref().unwrap_or(default);
    let path = opts.output_dir.join(rel);
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
    }
    Ok(path)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

// ---------------------------------------------------------------------------
// Report shapes

#[derive(Serialize)]
struct ProblemSummary {
    source: String,
    map: String,
    boundary: String,
    field: String,
    p: f64,
    horizon: f64,
    dim: usize,
    hartman_radius: Option<f64>,
}

fn problem_summary(cfg: &RunConfig) -> ProblemSummary {
    let pc = &cfg.problem;
    let (a, bc) = pc.source.expand();
    ProblemSummary {
        source: match &pc.source {
            ProblemSource::Catalog(c) => c.name().to_string(),
            ProblemSource::Inline { .. } => "inline".to_string(),
        },
        map: a.to_string(),
        boundary: format!("{bc:?}"),
        field: pc.field.name().to_string(),
        p: pc.p,
        horizon: pc.horizon,
        dim: pc.dim,
        hartman_radius: pc.hartman_radius,
    }
}

#[derive(Serialize)]
struct CertificateJson<'a> {
    name: &'a str,
    passed: bool,
    measured: f64,
    bound: f64,
    witness: Option<usize>,
    note: &'a str,
}

impl<'a> From<&'a Certificate<f64>> for CertificateJson<'a> {
    fn from(c: &'a Certificate<f64>) -> Self {
        Self {
            name: c.name,
            passed: c.passed,
            measured: c.measured,
            bound: c.bound,
            witness: c.witness,
            note: &c.note,
        }
    }
}

#[derive(Serialize)]
struct StepJson {
    lambda: f64,
    epsilon: f64,
    newton_iterations: usize,
    picard_sweeps: usize,
    residual: f64,
    step_diff: Option<f64>,
}

impl From<&ContinuationStep<f64>> for StepJson {
    fn from(s: &ContinuationStep<f64>) -> Self {
        Self {
            lambda: s.lambda,
            epsilon: s.epsilon,
            newton_iterations: s.newton_iterations,
            picard_sweeps: s.picard_sweeps,
            residual: s.residual,
            step_diff: s.step_diff,
        }
    }
}

#[derive(Serialize)]
struct CompletedStepJson {
    lambda: f64,
    iterations: usize,
    residual: f64,
}

#[derive(Serialize)]
struct FailureJson {
    lambda: f64,
    reason: String,
    best_residual: f64,
    residual_history: Vec<f64>,
    completed_steps: Vec<CompletedStepJson>,
}

#[derive(Serialize)]
struct SolveJson<'a> {
    status: &'static str,
    exit_code: i32,
    problem: ProblemSummary,
    intervals: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    residual_norm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bc_residual_norm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    hartman_max_norm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    graph_membership_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    convex_mode: Option<bool>,
    verdicts: Vec<CertificateJson<'a>>,
    continuation_history: Vec<StepJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    failure: Option<FailureJson>,
}

// ---------------------------------------------------------------------------
// solve

/// Columns `t, x_1..x_N, flux_1..flux_N, u_1..u_N, f_1..f_N`. Row `i` carries the
/// flux `phi(d_{i-1/2})` of the half-node left of `t_i`; row 0 has none.
pub fn solution_table(report: &SolveReport64) -> Result<Vec<u8>, CliError> {
    let traj = &report.trajectory;
    let dim = traj.dim();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["t".to_string()];
    for prefix in ["x", "flux", "u", "f"] {
        header.extend((1..=dim).map(|k| format!("{prefix}_{k}")));
    }
    w.write_record(&header)?;
    let reals = |v: &[f64]| v.iter().map(|&x| fmt_real(x)).collect::<Vec<_>>();
    for i in 0..traj.len() {
        let mut row = vec![fmt_real(traj.grid().node(i))];
        row.extend(reals(traj.node(i)));
        if i == 0 {
            row.extend(std::iter::repeat_n(String::new(), dim));
        } else {
            row.extend(reals(&report.flux[i - 1]));
        }
        row.extend(reals(&report.multiplier_trace[i]));
        row.extend(reals(&report.selection_trace[i]));
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| CliError::io(Path::new("<table>"), e.into_error()))
}

pub fn run_solve(cfg: &RunConfig, opts: &RunOptions) -> Result<Outcome, CliError> {
    let spec = build_spec(cfg)?;
    let sc = solver_config(cfg);
    sc.validate()?;
    let report_path = resolve(opts, &cfg.outputs.report, DEFAULT_REPORT)?;
    let summary = problem_summary(cfg);

    match continuation_solve(&spec, &sc) {
        Ok(report) => {
            let table_path = resolve(opts, &cfg.outputs.solution, DEFAULT_SOLUTION)?;
            let table = solution_table(&report)?;
            fs::write(&table_path, table).map_err(|e| CliError::io(&table_path, e))?;
            let passed = report.verdicts.all_passed();
            let code = if passed { EXIT_OK } else { EXIT_CERTIFICATE };
            let json = SolveJson {
                status: if passed { "passed" } else { "certificate-failed" },
                exit_code: code,
                problem: summary,
                intervals: sc.intervals,
                lambda: Some(report.lambda),
                residual_norm: Some(report.residual_norm),
                bc_residual_norm: Some(report.bc_residual_norm),
                hartman_max_norm: Some(report.hartman_max_norm),
                graph_membership_residual: Some(report.graph_membership_residual),
                convex_mode: Some(report.convex_mode),
                verdicts: report.verdicts.certificates.iter().map(Into::into).collect(),
                continuation_history: report.continuation_history.iter().map(Into::into).collect(),
                failure: None,
            };
            write_json(&report_path, &json)?;
            let mut text = format!(
                "converged at lambda = {} on {} intervals; residual {:e}\n{}",
                fmt_real(report.lambda),
                sc.intervals,
                report.residual_norm,
                report.verdicts
            );
            if !text.ends_with('\n') {
                text.push('\n');
            }
            Ok(Outcome {
                code,
                files: vec![table_path, report_path],
                summary: text,
            })
        }
        Err(CoreError::NonConvergence(nc)) => {
            let json = SolveJson {
                status: "non-convergence",
                exit_code: EXIT_FAILURE,
                problem: summary,
                intervals: sc.intervals,
                lambda: None,
                residual_norm: None,
                bc_residual_norm: None,
                hartman_max_norm: None,
                graph_membership_residual: None,
                convex_mode: None,
                verdicts: Vec::new(),
                continuation_history: Vec::new(),
                failure: Some(FailureJson {
                    lambda: nc.lambda,
                    reason: nc.reason.clone(),
                    best_residual: nc.best_residual,
                    residual_history: nc.residual_history.clone(),
                    completed_steps: nc
                        .completed_steps
                        .iter()
                        .map(|&(lambda, iterations, residual)| CompletedStepJson {
                            lambda,
                            iterations,
                            residual,
                        })
                        .collect(),
                }),
            };
            write_json(&report_path, &json)?;
            Ok(Outcome {
                code: EXIT_FAILURE,
                files: vec![report_path],
                summary: format!("{nc}\n"),
            })
        }
        Err(e) => Err(e.into()),
    }
}

// ---------------------------------------------------------------------------
// verify

#[derive(Serialize)]
struct Verdict {
    name: &'static str,
    passed: bool,
    evidence: String,
    detail: serde_json::Value,
}

#[derive(Serialize)]
struct VerifyJson {
    status: &'static str,
    exit_code: i32,
    problem: ProblemSummary,
    hypotheses: Vec<Verdict>,
}

fn evidence(e: Evidence, by_construction: bool) -> String {
    if by_construction {
        format!("{}; {}", Evidence::ByConstruction.describe(), e.describe())
    } else {
        e.describe()
    }
}

/// Runs the hypothesis checkers without solving.
pub fn run_verify(cfg: &RunConfig, opts: &RunOptions) -> Result<Outcome, CliError> {
    let pc = &cfg.problem;
    let sc = solver_config(cfg);
    sc.validate()?;
    let (a_spec, bc_spec) = pc.source.expand();
    let a = monotone_map(&a_spec, pc.dim)?;
    let xi = boundary_operator(&bc_spec, pc.dim, pc.p)?;
    let builtin = builtin_field(&pc.field, pc.dim, pc.horizon, pc.p);
    let field = MultiField64::builtin(pc.dim, pc.horizon, builtin.clone())?;
    let mut verdicts = Vec::new();

    let a_origin = a.contains_origin()?;
    verdicts.push(Verdict {
        name: "A-contains-origin",
        passed: a_origin,
        evidence: Evidence::ByConstruction.describe(),
        detail: serde_json::json!({ "map": a_spec.to_string() }),
    });
    let xi_origin = xi.contains_origin()?;
    verdicts.push(Verdict {
        name: "xi-contains-origin",
        passed: xi_origin,
        evidence: Evidence::ByConstruction.describe(),
        detail: serde_json::json!({ "boundary": xi.tag().as_str() }),
    });

    match pc.hartman_radius {
        Some(m) => {
            let h = check_hartman_with(&field, m, 64, 32, DEFAULT_HARTMAN_TOL, sc.seed)?;
            verdicts.push(Verdict {
                name: "hartman",
                passed: h.passed,
                evidence: h.evidence.describe(),
                detail: serde_json::json!({
                    "radius": m,
                    "min_inner_product": h.min_inner_product,
                    "tolerance": h.tolerance,
                    "witness": { "t": h.witness.t, "zeta": h.witness.zeta, "u": h.witness.u },
                }),
            });
        }
        None => verdicts.push(Verdict {
            name: "hartman",
            passed: true,
            evidence: "not checked: no Hartman radius M configured".into(),
            detail: serde_json::Value::Null,
        }),
    }

    let radius = pc.hartman_radius.unwrap_or(1.0);
    let growth = estimate_growth(&field, radius, sc.growth_samples)?;
    verdicts.push(Verdict {
        name: "growth",
        passed: growth.is_finite(),
        evidence: Evidence::Sampled {
            samples: sc.growth_samples.max(1) * (4 * sc.growth_samples.max(1) + 1),
        }
        .describe(),
        detail: serde_json::json!({
            "radius": radius,
            "sampled_sup": growth,
            "closed_form_bound": builtin.growth_bound(radius),
        }),
    });

    let samples = graph_samples(&xi, sc.mu, XI_SAMPLES, XI_SAMPLE_RADIUS, sc.seed)?;
    let hx = check_h_xi(&xi, sc.mu, &samples)?;
    verdicts.push(Verdict {
        name: "H(xi)",
        passed: hx.passed,
        evidence: evidence(hx.evidence, hx.by_construction),
        detail: serde_json::json!({
            "branch": hx.branch.as_str(),
            "sign_min": hx.sign_min,
            "diagonal_max": hx.diagonal_max,
            "witness": hx.witness,
        }),
    });

    let h0 = check_h0(&a, &xi, sc.mu, &sc.lambda_schedule, &samples)?;
    verdicts.push(Verdict {
        name: "H0",
        passed: h0.passed,
        evidence: evidence(h0.evidence, h0.by_construction),
        detail: serde_json::json!({
            "min_value": h0.min_value,
            "witness": h0.witness.map(|(lambda, index)| serde_json::json!({ "lambda": lambda, "sample": index })),
        }),
    });

    let passed = verdicts.iter().all(|v| v.passed);
    let code = if passed { EXIT_OK } else { EXIT_CERTIFICATE };
    let path = resolve(
        opts,
        &cfg.outputs.report,
        if cfg.outputs.report.is_some() {
            DEFAULT_REPORT
        } else {
            DEFAULT_VERIFY_REPORT
        },
    )?;
    let mut summary = String::new();
    for v in &verdicts {
        summary.push_str(&format!(
            "[{}] {} ({})\n",
            if v.passed { "pass" } else { "FAIL" },
            v.name,
            v.evidence
        ));
    }
    write_json(
        &path,
        &VerifyJson {
            status: if passed { "passed" } else { "hypothesis-failed" },
            exit_code: code,
            problem: problem_summary(cfg),
            hypotheses: verdicts,
        },
    )?;
    Ok(Outcome {
        code,
        files: vec![path],
        summary,
    })
}

// ---------------------------------------------------------------------------
// study

pub fn run_study(cfg: &RunConfig, opts: &RunOptions) -> Result<Outcome, CliError> {
    let pc = &cfg.problem;
    let reference = pc.reference.ok_or_else(|| ConfigError::Validation {
        key: "problem.reference".into(),
        line: None,
        message: "study needs a reference solution (sine or quadratic)".into(),
    })?;
    let spec = build_spec(cfg)?;
    let sc = solver_config(cfg);
    sc.validate()?;
    let grids = cfg.outputs.grids.clone().unwrap_or_else(|| DEFAULT_GRIDS.to_vec());
    let rows = convergence_study(&spec, &grids, &sc, reference_solution(reference, pc.dim, pc.horizon))?;

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["intervals", "h", "error", "order"])?;
    let mut summary = String::new();
    for r in &rows {
        let order = r.order.map(fmt_real).unwrap_or_default();
        w.write_record([r.intervals.to_string(), fmt_real(r.step), fmt_real(r.error), order.clone()])?;
        summary.push_str(&format!("n = {:>5}  error {:.3e}  order {}\n", r.intervals, r.error, order));
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::io(Path::new("<table>"), e.into_error()))?;
    let path = resolve(opts, &cfg.outputs.study, DEFAULT_STUDY)?;
    fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
    Ok(Outcome {
        code: EXIT_OK,
        files: vec![path],
        summary,
    })
}
