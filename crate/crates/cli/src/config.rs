//! Run configuration: a flat `key = value` format grouped under bracketed
//! section headers (`problem`, `field`, `boundary`, `solver`, `outputs`).
//!
//! ```text
//! [problem]
//! catalog = example3
//! p = 2
//! T = 1
//! N = 1
//! field = builtin:msin
//! ```
//!
//! `#` starts a comment (at line start or after whitespace).
//! Vectors are comma-separated; lists of vectors separate rows with `;`.
//! Sets are written `orthant`, `whole`, `origin`, `point(c)`, `box(l; u)`,
//! `ball(c; r)`, `halfspace(n; b)` or `polyhedron(n1, b1; n2, b2; ...)`
//! (each row of a polyhedron is a normal followed by its offset). Maps are
//! `zero`, `identity`, `scaled(c)`, `weighted-l1(w)` or `cone(<set>)`.

use std::fmt::{self, Write as _};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{}key `{key}`: {message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Validation {
        key: String,
        line: Option<usize>,
        message: String,
    },
}

impl ConfigError {
    fn parse(line: usize, message: impl Into<String>) -> Self {
        ConfigError::Parse {
            line,
            message: message.into(),
        }
    }

    fn invalid(key: impl Into<String>, line: Option<usize>, message: impl Into<String>) -> Self {
        ConfigError::Validation {
            key: key.into(),
            line,
            message: message.into(),
        }
    }
}

pub type ConfigResult<T> = Result<T, ConfigError>;

pub const SECTIONS: [&str; 5] = ["problem", "field", "boundary", "solver", "outputs"];

// ---------------------------------------------------------------------------
// Raw document

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    key: String,
    value: String,
    /// `None` for command-line overrides.
    line: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
struct Section {
    name: String,
    line: Option<usize>,
    entries: Vec<Entry>,
}

/// The untyped key/value table, kept in file order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Document {
    sections: Vec<Section>,
}

impl Document {
    pub fn parse(text: &str) -> ConfigResult<Self> {
        let mut doc = Document::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            // `#` starts a comment at line start or after whitespace
            let body = match raw.find(" #").or_else(|| raw.find("\t#")) {
                Some(i) => &raw[..i],
                None => raw,
            };
            let trimmed = body.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            if let Some(rest) = trimmed.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| ConfigError::parse(line, "unterminated section header"))?
                    .trim();
                if !SECTIONS.contains(&name) {
                    return Err(ConfigError::parse(
                        line,
                        format!("unknown section [{name}] (expected one of {})", SECTIONS.join(", ")),
                    ));
                }
                if doc.section(name).is_some() {
                    return Err(ConfigError::parse(line, format!("duplicate section [{name}]")));
                }
                doc.sections.push(Section {
                    name: name.to_string(),
                    line: Some(line),
                    entries: Vec::new(),
                });
                continue;
            }
            let (key, value) = trimmed
                .split_once('=')
                .ok_or_else(|| ConfigError::parse(line, format!("expected `key = value`, found `{trimmed}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() || key.contains(char::is_whitespace) {
                return Err(ConfigError::parse(line, format!("invalid key `{key}`")));
            }
            let section = doc
                .sections
                .last_mut()
                .ok_or_else(|| ConfigError::parse(line, format!("key `{key}` appears before any section header")))?;
            if section.entries.iter().any(|e| e.key == key) {
                return Err(ConfigError::parse(line, format!("duplicate key `{key}` in [{}]", section.name)));
            }
            section.entries.push(Entry {
                key: key.to_string(),
                value: value.to_string(),
                line: Some(line),
            });
        }
        Ok(doc)
    }

    fn section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }

    /// Applies `section.key=value`, replacing or appending the entry.
    pub fn apply_override(&mut self, assignment: &str) -> ConfigResult<()> {
        let bad = |msg: String| ConfigError::invalid(assignment, None, msg);
        let (path, value) = assignment
            .split_once('=')
            .ok_or_else(|| bad("override must have the form section.key=value".into()))?;
        let (section, key) = path
            .trim()
            .split_once('.')
            .ok_or_else(|| bad("override path must be section.key".into()))?;
        let (section, key, value) = (section.trim(), key.trim(), value.trim());
        if !SECTIONS.contains(&section) {
            return Err(bad(format!("unknown section `{section}`")));
        }
        if key.is_empty() || key.contains(['.', ' ']) {
            return Err(bad(format!("invalid key `{key}`")));
        }
        let idx = match self.sections.iter().position(|s| s.name == section) {
            Some(i) => i,
            None => {
                self.sections.push(Section {
                    name: section.to_string(),
                    line: None,
                    entries: Vec::new(),
                });
                self.sections.len() - 1
            }
        };
        let entries = &mut self.sections[idx].entries;
        let entry = Entry {
            key: key.to_string(),
            value: value.to_string(),
            line: None,
        };
        match entries.iter_mut().find(|e| e.key == key) {
            Some(e) => *e = entry,
            None => entries.push(entry),
        }
        Ok(())
    }
}

/// Typed access to one section that remembers which keys were consumed.
struct Reader<'a> {
    name: &'static str,
    section: Option<&'a Section>,
    used: Vec<&'a str>,
}

impl<'a> Reader<'a> {
    fn new(doc: &'a Document, name: &'static str) -> Self {
        Self {
            name,
            section: doc.section(name),
            used: Vec::new(),
        }
    }

    fn present(&self) -> bool {
        self.section.is_some()
    }

    fn header_line(&self) -> Option<usize> {
        self.section.and_then(|s| s.line)
    }

    fn qualified(&self, key: &str) -> String {
        format!("{}.{key}", self.name)
    }

    fn raw(&mut self, key: &str) -> Option<&'a Entry> {
        let entry = self.section?.entries.iter().find(|e| e.key == key)?;
        self.used.push(&entry.key);
        Some(entry)
    }

    fn has(&self, key: &str) -> bool {
        self.section.is_some_and(|s| s.entries.iter().any(|e| e.key == key))
    }

    fn line_of(&self, key: &str) -> Option<usize> {
        self.section?.entries.iter().find(|e| e.key == key)?.line
    }

    fn error(&self, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError::invalid(self.qualified(key), self.line_of(key).or(self.header_line()), message)
    }

    fn opt<T>(&mut self, key: &str, parse: impl FnOnce(&str) -> Result<T, String>) -> ConfigResult<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some(e) => parse(&e.value)
                .map(Some)
                .map_err(|m| ConfigError::invalid(self.qualified(key), e.line, m)),
        }
    }

    fn req<T>(&mut self, key: &str, parse: impl FnOnce(&str) -> Result<T, String>) -> ConfigResult<T> {
        let line = self.header_line();
        self.opt(key, parse)?.ok_or_else(|| {
            ConfigError::invalid(self.qualified(key), line, format!("missing required key in [{}]", self.name))
        })
    }

    /// Rejects keys that were never read.
    fn finish(self) -> ConfigResult<()> {
        if let Some(s) = self.section {
            if let Some(e) = s.entries.iter().find(|e| !self.used.contains(&e.key.as_str())) {
                return Err(ConfigError::invalid(
                    self.qualified(&e.key),
                    e.line,
                    format!("unknown key in [{}]", self.name),
                ));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Typed configuration

#[derive(Debug, Clone, PartialEq)]
pub enum SetSpec {
    Orthant,
    Whole,
    Origin,
    Point(Vec<f64>),
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    HalfSpace { normal: Vec<f64>, offset: f64 },
    Polyhedron { normals: Vec<Vec<f64>>, offsets: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum MapSpec {
    Zero,
    Identity,
    Scaled(f64),
    WeightedL1(f64),
    Cone(SetSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub enum BoundarySpec {
    Dirichlet,
    Neumann,
    Periodic,
    SturmLiouville { theta: f64, eta: f64 },
    ProductCone { k1: SetSpec, k2: SetSpec },
}

/// The six catalog problems. Example 2 fixes `A` to the orthant normal cone.
#[derive(Debug, Clone, PartialEq)]
pub enum CatalogEntry {
    /// `xi = N_{K1 x K2}` with any `A`.
    Example1 { a: MapSpec, k1: SetSpec, k2: SetSpec },
    /// Evolutionary variational inequality: `A = N_{R^N_+}`, `K1, K2` inside the orthant.
    Example2 { k1: SetSpec, k2: SetSpec },
    Example3 { a: MapSpec },
    Example4 { a: MapSpec },
    Example5 { a: MapSpec },
    Example6 { a: MapSpec, theta: f64, eta: f64 },
}

impl CatalogEntry {
    pub fn name(&self) -> &'static str {
        match self {
            CatalogEntry::Example1 { .. } => "example1",
            CatalogEntry::Example2 { .. } => "example2",
            CatalogEntry::Example3 { .. } => "example3",
            CatalogEntry::Example4 { .. } => "example4",
            CatalogEntry::Example5 { .. } => "example5",
            CatalogEntry::Example6 { .. } => "example6",
        }
    }

    /// The map `A` and boundary operator this entry stands for.
    pub fn expand(&self) -> (MapSpec, BoundarySpec) {
        match self {
            CatalogEntry::Example1 { a, k1, k2 } => (
                a.clone(),
                BoundarySpec::ProductCone {
                    k1: k1.clone(),
                    k2: k2.clone(),
                },
            ),
            CatalogEntry::Example2 { k1, k2 } => (
                MapSpec::Cone(SetSpec::Orthant),
                BoundarySpec::ProductCone {
                    k1: k1.clone(),
                    k2: k2.clone(),
                },
            ),
            CatalogEntry::Example3 { a } => (a.clone(), BoundarySpec::Dirichlet),
            CatalogEntry::Example4 { a } => (a.clone(), BoundarySpec::Neumann),
            CatalogEntry::Example5 { a } => (a.clone(), BoundarySpec::Periodic),
            CatalogEntry::Example6 { a, theta, eta } => (
                a.clone(),
                BoundarySpec::SturmLiouville {
                    theta: *theta,
                    eta: *eta,
                },
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSource {
    Catalog(CatalogEntry),
    Inline { a: MapSpec, boundary: BoundarySpec },
}

impl ProblemSource {
    pub fn expand(&self) -> (MapSpec, BoundarySpec) {
        match self {
            ProblemSource::Catalog(c) => c.expand(),
            ProblemSource::Inline { a, boundary } => (a.clone(), boundary.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FieldSpec {
    /// `-(pi/T)^2 sin(pi t / T)` in the first component.
    Msin,
    /// `-2 (p-1) |T - 2t|^{p-2}` in the first component.
    Plap3,
    Constant(Vec<f64>),
    /// `F(t, zeta) = {zeta}`.
    Linear,
    /// `F(t, zeta) = {-zeta}`.
    Negated,
    Step { before: Vec<f64>, after: Vec<f64>, switch: f64 },
    Tabulated { times: Vec<f64>, values: Vec<Vec<f64>> },
}

impl FieldSpec {
    pub fn name(&self) -> &'static str {
        match self {
            FieldSpec::Msin => "builtin:msin",
            FieldSpec::Plap3 => "builtin:plap3",
            FieldSpec::Constant(_) => "builtin:constant",
            FieldSpec::Linear => "builtin:linear",
            FieldSpec::Negated => "builtin:negated",
            FieldSpec::Step { .. } => "builtin:step",
            FieldSpec::Tabulated { .. } => "tabulated",
        }
    }
}

/// Exact solution used by `study`, placed in the first component.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reference {
    /// `sin(pi t / T)`
    Sine,
    /// `t (T - t)`
    Quadratic,
}

impl Reference {
    pub fn name(&self) -> &'static str {
        match self {
            Reference::Sine => "sine",
            Reference::Quadratic => "quadratic",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemConfig {
    pub source: ProblemSource,
    pub p: f64,
    pub horizon: f64,
    pub dim: usize,
    pub hartman_radius: Option<f64>,
    pub field: FieldSpec,
    pub reference: Option<Reference>,
}

/// Overrides of the solver defaults; absent keys keep the library default.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolverOverrides {
    pub intervals: Option<usize>,
    pub lambda_schedule: Option<Vec<f64>>,
    pub epsilon_schedule: Option<Vec<f64>>,
    pub newton_max_iters: Option<usize>,
    pub newton_tol: Option<f64>,
    pub backtrack: Option<f64>,
    pub min_step: Option<f64>,
    pub picard_iters: Option<usize>,
    pub mu: Option<f64>,
    pub growth_samples: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OutputConfig {
    pub solution: Option<String>,
    pub report: Option<String>,
    pub study: Option<String>,
    pub grids: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    pub solver: SolverOverrides,
    pub outputs: OutputConfig,
}

// ---------------------------------------------------------------------------
// Value grammar

fn real(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("`{}` is not a number", s.trim()))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{}` is not finite", s.trim()))
    }
}

fn count(s: &str) -> Result<usize, String> {
    s.trim()
        .parse()
        .map_err(|_| format!("`{}` is not a nonnegative integer", s.trim()))
}

fn seed(s: &str) -> Result<u64, String> {
    s.trim()
        .parse()
        .map_err(|_| format!("`{}` is not a nonnegative integer", s.trim()))
}

fn reals(s: &str) -> Result<Vec<f64>, String> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(real).collect()
}

fn counts(s: &str) -> Result<Vec<usize>, String> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(count).collect()
}

fn rows(s: &str) -> Result<Vec<Vec<f64>>, String> {
    s.split(';').map(reals).collect()
}

/// Splits `name(args)` into `(name, Some(args))`, or `(name, None)` without parentheses.
fn call(s: &str) -> Result<(&str, Option<&str>), String> {
    let s = s.trim();
    match s.find('(') {
        None => Ok((s, None)),
        Some(open) => {
            let inner = s[open + 1..]
                .strip_suffix(')')
                .ok_or_else(|| format!("unbalanced parentheses in `{s}`"))?;
            Ok((s[..open].trim(), Some(inner)))
        }
    }
}

fn set_spec(s: &str) -> Result<SetSpec, String> {
    let (name, args) = call(s)?;
    let need = || args.ok_or_else(|| format!("set `{name}` needs arguments"));
    let pair = |args: &str| -> Result<(Vec<f64>, Vec<f64>), String> {
        let r = rows(args)?;
        match <[Vec<f64>; 2]>::try_from(r) {
            Ok([a, b]) => Ok((a, b)),
            Err(_) => Err(format!("set `{name}` expects two `;`-separated parts")),
        }
    };
    let scalar_part = |v: Vec<f64>| -> Result<f64, String> {
        match v.as_slice() {
            [x] => Ok(*x),
            _ => Err(format!("set `{name}` expects a single number after `;`")),
        }
    };
    let no_args = |spec: SetSpec| match args {
        None => Ok(spec),
        Some(_) => Err(format!("set `{name}` takes no arguments")),
    };
    match name {
        "orthant" => no_args(SetSpec::Orthant),
        "whole" => no_args(SetSpec::Whole),
        "origin" => no_args(SetSpec::Origin),
        "point" => Ok(SetSpec::Point(reals(need()?)?)),
        "box" => {
            let (lower, upper) = pair(need()?)?;
            Ok(SetSpec::Box { lower, upper })
        }
        "ball" => {
            let (center, r) = pair(need()?)?;
            Ok(SetSpec::Ball {
                center,
                radius: scalar_part(r)?,
            })
        }
        "halfspace" => {
            let (normal, b) = pair(need()?)?;
            Ok(SetSpec::HalfSpace {
                normal,
                offset: scalar_part(b)?,
            })
        }
        "polyhedron" => {
            let mut normals = Vec::new();
            let mut offsets = Vec::new();
            for mut row in rows(need()?)? {
                let b = row.pop().ok_or("polyhedron rows need a normal and an offset")?;
                normals.push(row);
                offsets.push(b);
            }
            Ok(SetSpec::Polyhedron { normals, offsets })
        }
        other => Err(format!(
            "unknown set `{other}` (expected orthant, whole, origin, point, box, ball, halfspace, polyhedron)"
        )),
    }
}

fn map_spec(s: &str) -> Result<MapSpec, String> {
    let (name, args) = call(s)?;
    let one = |args: Option<&str>| -> Result<f64, String> {
        real(args.ok_or_else(|| format!("map `{name}` needs one numeric argument"))?)
    };
    match name {
        "zero" if args.is_none() => Ok(MapSpec::Zero),
        "identity" if args.is_none() => Ok(MapSpec::Identity),
        "scaled" => Ok(MapSpec::Scaled(one(args)?)),
        "weighted-l1" => Ok(MapSpec::WeightedL1(one(args)?)),
        "cone" => Ok(MapSpec::Cone(set_spec(
            args.ok_or("map `cone` needs a set argument")?,
        )?)),
        "zero" | "identity" => Err(format!("map `{name}` takes no arguments")),
        other => Err(format!(
            "unknown map `{other}` (expected zero, identity, scaled, weighted-l1, cone)"
        )),
    }
}

fn catalog_name(s: &str) -> Result<u8, String> {
    match s.trim() {
        "example1" => Ok(1),
        "example2" => Ok(2),
        "example3" => Ok(3),
        "example4" => Ok(4),
        "example5" => Ok(5),
        "example6" => Ok(6),
        other => Err(format!("unknown catalog entry `{other}` (expected example1..example6)")),
    }
}

fn reference(s: &str) -> Result<Reference, String> {
    match s.trim() {
        "sine" => Ok(Reference::Sine),
        "quadratic" => Ok(Reference::Quadratic),
        other => Err(format!("unknown reference `{other}` (expected sine or quadratic)")),
    }
}

fn text(s: &str) -> Result<String, String> {
    if s.is_empty() {
        Err("value must not be empty".into())
    } else {
        Ok(s.to_string())
    }
}

// ---------------------------------------------------------------------------
// Formatting (inverse of the grammar above)

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_real(v: f64) -> String {
    format!("{v:?}")
}

fn fmt_reals(v: &[f64]) -> String {
    v.iter().map(|&x| fmt_real(x)).collect::<Vec<_>>().join(", ")
}

fn fmt_rows(v: &[Vec<f64>]) -> String {
    v.iter().map(|r| fmt_reals(r)).collect::<Vec<_>>().join("; ")
}

impl fmt::Display for SetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SetSpec::Orthant => write!(f, "orthant"),
            SetSpec::Whole => write!(f, "whole"),
            SetSpec::Origin => write!(f, "origin"),
            SetSpec::Point(c) => write!(f, "point({})", fmt_reals(c)),
            SetSpec::Box { lower, upper } => write!(f, "box({}; {})", fmt_reals(lower), fmt_reals(upper)),
            SetSpec::Ball { center, radius } => write!(f, "ball({}; {})", fmt_reals(center), fmt_real(*radius)),
            SetSpec::HalfSpace { normal, offset } => {
                write!(f, "halfspace({}; {})", fmt_reals(normal), fmt_real(*offset))
            }
            SetSpec::Polyhedron { normals, offsets } => {
                let r: Vec<Vec<f64>> = normals
                    .iter()
                    .zip(offsets)
                    .map(|(n, &b)| n.iter().copied().chain([b]).collect())
                    .collect();
                write!(f, "polyhedron({})", fmt_rows(&r))
            }
        }
    }
}

impl fmt::Display for MapSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MapSpec::Zero => write!(f, "zero"),
            MapSpec::Identity => write!(f, "identity"),
            MapSpec::Scaled(c) => write!(f, "scaled({})", fmt_real(*c)),
            MapSpec::WeightedL1(w) => write!(f, "weighted-l1({})", fmt_real(*w)),
            MapSpec::Cone(s) => write!(f, "cone({s})"),
        }
    }
}

// ---------------------------------------------------------------------------
// Validation helpers

fn check_dim(r: &Reader, key: &str, dim: usize, v: &[f64]) -> ConfigResult<()> {
    if v.len() == dim {
        Ok(())
    } else {
        Err(r.error(key, format!("expected {dim} components, got {}", v.len())))
    }
}

fn check_set(r: &Reader, key: &str, dim: usize, set: &SetSpec) -> ConfigResult<()> {
    match set {
        SetSpec::Orthant | SetSpec::Whole | SetSpec::Origin => Ok(()),
        SetSpec::Point(c) => check_dim(r, key, dim, c),
        SetSpec::Box { lower, upper } => {
            check_dim(r, key, dim, lower)?;
            check_dim(r, key, dim, upper)?;
            if lower.iter().zip(upper).any(|(l, u)| l > u) {
                return Err(r.error(key, "box lower bound exceeds upper bound"));
            }
            Ok(())
        }
        SetSpec::Ball { center, radius } => {
            check_dim(r, key, dim, center)?;
            if *radius < 0.0 {
                return Err(r.error(key, "ball radius must be nonnegative"));
            }
            Ok(())
        }
        SetSpec::HalfSpace { normal, .. } => {
            check_dim(r, key, dim, normal)?;
            if normal.iter().all(|&v| v == 0.0) {
                return Err(r.error(key, "half-space normal must be nonzero"));
            }
            Ok(())
        }
        SetSpec::Polyhedron { normals, .. } => {
            if normals.is_empty() {
                return Err(r.error(key, "polyhedron needs at least one half-space"));
            }
            normals.iter().try_for_each(|n| check_dim(r, key, dim, n))
        }
    }
}

fn check_map(r: &Reader, key: &str, dim: usize, map: &MapSpec) -> ConfigResult<()> {
    match map {
        MapSpec::Zero | MapSpec::Identity => Ok(()),
        MapSpec::Scaled(c) if *c < 0.0 => Err(r.error(key, "scaled map needs c >= 0")),
        MapSpec::WeightedL1(w) if *w < 0.0 => Err(r.error(key, "weighted-l1 map needs w >= 0")),
        MapSpec::Scaled(_) | MapSpec::WeightedL1(_) => Ok(()),
        MapSpec::Cone(s) => check_set(r, key, dim, s),
    }
}

/// `K` inside the nonnegative orthant, decided from the descriptor.
fn inside_orthant(set: &SetSpec) -> bool {
    match set {
        SetSpec::Orthant | SetSpec::Origin => true,
        SetSpec::Point(c) => c.iter().all(|&v| v >= 0.0),
        SetSpec::Box { lower, .. } => lower.iter().all(|&v| v >= 0.0),
        SetSpec::Ball { center, radius } => center.iter().all(|&v| v >= *radius),
        _ => false,
    }
}

fn positive(r: &Reader, key: &str, v: f64) -> ConfigResult<f64> {
    if v > 0.0 {
        Ok(v)
    } else {
        Err(r.error(key, format!("{key} must be > 0, got {}", fmt_real(v))))
    }
}

// ---------------------------------------------------------------------------
// Document -> RunConfig

fn read_boundary(r: &mut Reader, dim: usize) -> ConfigResult<BoundarySpec> {
    let kind = r.req("kind", text)?;
    let spec = match kind.as_str() {
        "dirichlet" => BoundarySpec::Dirichlet,
        "neumann" => BoundarySpec::Neumann,
        "periodic" => BoundarySpec::Periodic,
        "sturm-liouville" => {
            let theta = r.req("theta", real)?;
            let eta = r.req("eta", real)?;
            BoundarySpec::SturmLiouville {
                theta: positive(r, "theta", theta)?,
                eta: positive(r, "eta", eta)?,
            }
        }
        "product-cone" => {
            let k1 = r.req("k1", set_spec)?;
            let k2 = r.req("k2", set_spec)?;
            check_set(r, "k1", dim, &k1)?;
            check_set(r, "k2", dim, &k2)?;
            BoundarySpec::ProductCone { k1, k2 }
        }
        other => {
            return Err(r.error(
                "kind",
                format!("unknown boundary kind `{other}` (expected dirichlet, neumann, periodic, sturm-liouville, product-cone)"),
            ))
        }
    };
    Ok(spec)
}

fn read_field(problem: &mut Reader, r: &mut Reader, dim: usize) -> ConfigResult<FieldSpec> {
    let kind = problem.req("field", text)?;
    let field = match kind.as_str() {
        "builtin:msin" => FieldSpec::Msin,
        "builtin:plap3" => FieldSpec::Plap3,
        "builtin:linear" => FieldSpec::Linear,
        "builtin:negated" => FieldSpec::Negated,
        "builtin:constant" => {
            let v = r.req("value", reals)?;
            check_dim(r, "value", dim, &v)?;
            FieldSpec::Constant(v)
        }
        "builtin:step" => {
            let before = r.req("before", reals)?;
            let after = r.req("after", reals)?;
            let switch = r.req("switch", real)?;
            check_dim(r, "before", dim, &before)?;
            check_dim(r, "after", dim, &after)?;
            FieldSpec::Step { before, after, switch }
        }
        "tabulated" => {
            let times = r.req("times", reals)?;
            let values = r.req("values", rows)?;
            if times.is_empty() {
                return Err(r.error("times", "tabulated field needs at least one row"));
            }
            if times.windows(2).any(|w| w[0] >= w[1]) {
                return Err(r.error("times", "times must be strictly increasing"));
            }
            if values.len() != times.len() {
                return Err(r.error(
                    "values",
                    format!("{} value rows for {} times", values.len(), times.len()),
                ));
            }
            for v in &values {
                check_dim(r, "values", dim, v)?;
            }
            FieldSpec::Tabulated { times, values }
        }
        other => {
            return Err(problem.error(
                "field",
                format!(
                    "unknown field `{other}` (expected builtin:msin, builtin:plap3, builtin:constant, builtin:linear, builtin:negated, builtin:step or tabulated)"
                ),
            ))
        }
    };
    Ok(field)
}

fn read_catalog(r: &mut Reader, which: u8, dim: usize) -> ConfigResult<CatalogEntry> {
    let map = |r: &mut Reader| -> ConfigResult<MapSpec> {
        let a = r.opt("a", map_spec)?.unwrap_or(MapSpec::Zero);
        check_map(r, "a", dim, &a)?;
        Ok(a)
    };
    let sets = |r: &mut Reader| -> ConfigResult<(SetSpec, SetSpec)> {
        let k1 = r.req("k1", set_spec)?;
        let k2 = r.req("k2", set_spec)?;
        check_set(r, "k1", dim, &k1)?;
        check_set(r, "k2", dim, &k2)?;
        Ok((k1, k2))
    };
    Ok(match which {
        1 => {
            let a = map(r)?;
            let (k1, k2) = sets(r)?;
            CatalogEntry::Example1 { a, k1, k2 }
        }
        2 => {
            if r.has("a") {
                return Err(r.error("a", "example2 fixes A to the orthant normal cone"));
            }
            let (k1, k2) = sets(r)?;
            for (key, k) in [("k1", &k1), ("k2", &k2)] {
                if !inside_orthant(k) {
                    return Err(r.error(key, "example2 needs K1, K2 inside the nonnegative orthant"));
                }
            }
            CatalogEntry::Example2 { k1, k2 }
        }
        3 => CatalogEntry::Example3 { a: map(r)? },
        4 => CatalogEntry::Example4 { a: map(r)? },
        5 => CatalogEntry::Example5 { a: map(r)? },
        _ => {
            let a = map(r)?;
            let theta = r.req("theta", real)?;
            let eta = r.req("eta", real)?;
            CatalogEntry::Example6 {
                a,
                theta: positive(r, "theta", theta)?,
                eta: positive(r, "eta", eta)?,
            }
        }
    })
}

impl RunConfig {
    pub fn from_document(doc: &Document) -> ConfigResult<Self> {
        let mut pr = Reader::new(doc, "problem");
        if !pr.present() {
            return Err(ConfigError::invalid("problem", None, "missing [problem] section"));
        }
        let p = pr.req("p", real)?;
        if p < 2.0 {
            return Err(pr.error("p", "p must be ≥ 2"));
        }
        let horizon = pr.req("T", real)?;
        positive(&pr, "T", horizon)?;
        let dim = pr.req("N", count)?;
        if dim == 0 {
            return Err(pr.error("N", "N must be at least 1"));
        }
        let hartman_radius = match pr.opt("M", real)? {
            Some(m) => Some(positive(&pr, "M", m)?),
            None => None,
        };
        let reference = pr.opt("reference", reference)?;

        let mut br = Reader::new(doc, "boundary");
        let source = match pr.opt("catalog", catalog_name)? {
            Some(_) if br.present() => {
                return Err(pr.error(
                    "catalog",
                    "a catalog reference and an inline [boundary] block are mutually exclusive",
                ))
            }
            Some(which) => ProblemSource::Catalog(read_catalog(&mut pr, which, dim)?),
            None => {
                if !br.present() {
                    return Err(ConfigError::invalid(
                        "problem.catalog",
                        pr.header_line(),
                        "either a catalog reference or an inline [boundary] block is required",
                    ));
                }
                for key in ["theta", "eta", "k1", "k2"] {
                    if pr.has(key) {
                        return Err(pr.error(key, "catalog parameter without a catalog reference"));
                    }
                }
                let a = pr.opt("a", map_spec)?.unwrap_or(MapSpec::Zero);
                check_map(&pr, "a", dim, &a)?;
                let boundary = read_boundary(&mut br, dim)?;
                ProblemSource::Inline { a, boundary }
            }
        };

        let mut fr = Reader::new(doc, "field");
        let field = read_field(&mut pr, &mut fr, dim)?;
        pr.finish()?;
        br.finish()?;
        fr.finish()?;

        let mut sr = Reader::new(doc, "solver");
        let solver = SolverOverrides {
            intervals: sr.opt("n", count)?,
            lambda_schedule: sr.opt("lambda", reals)?,
            epsilon_schedule: sr.opt("epsilon", reals)?,
            newton_max_iters: sr.opt("newton_max_iters", count)?,
            newton_tol: sr.opt("newton_tol", real)?,
            backtrack: sr.opt("backtrack", real)?,
            min_step: sr.opt("min_step", real)?,
            picard_iters: sr.opt("picard_iters", count)?,
            mu: sr.opt("mu", real)?,
            growth_samples: sr.opt("growth_samples", count)?,
            seed: sr.opt("seed", seed)?,
        };
        if let Some(n) = solver.intervals {
            if n < 2 {
                return Err(sr.error("n", "n must be at least 2"));
            }
        }
        if let Some(s) = &solver.lambda_schedule {
            if s.is_empty() {
                return Err(sr.error("lambda", "lambda schedule must not be empty"));
            }
            if s.iter().any(|&v| v <= 0.0) {
                return Err(sr.error("lambda", "lambda values must be positive"));
            }
        }
        if let Some(s) = &solver.epsilon_schedule {
            let Some(lambda) = &solver.lambda_schedule else {
                return Err(sr.error("epsilon", "an epsilon schedule needs an explicit lambda schedule"));
            };
            if s.len() != lambda.len() || s.iter().any(|&v| v <= 0.0) {
                return Err(sr.error(
                    "epsilon",
                    format!("epsilon schedule needs {} positive values (one per lambda)", lambda.len()),
                ));
            }
        }
        for (key, v) in [("newton_tol", solver.newton_tol), ("min_step", solver.min_step), ("mu", solver.mu)] {
            if let Some(v) = v {
                positive(&sr, key, v)?;
            }
        }
        if let Some(b) = solver.backtrack {
            if !(b > 0.0 && b < 1.0) {
                return Err(sr.error("backtrack", "backtrack must lie in (0, 1)"));
            }
        }
        if solver.newton_max_iters == Some(0) {
            return Err(sr.error("newton_max_iters", "newton_max_iters must be at least 1"));
        }
        sr.finish()?;

        let mut or = Reader::new(doc, "outputs");
        let outputs = OutputConfig {
            solution: or.opt("solution", text)?,
            report: or.opt("report", text)?,
            study: or.opt("study", text)?,
            grids: or.opt("grids", counts)?,
        };
        if let Some(g) = &outputs.grids {
            if g.is_empty() || g.iter().any(|&n| n < 2) {
                return Err(or.error("grids", "grids must list interval counts >= 2"));
            }
            if g.windows(2).any(|w| w[1] != 2 * w[0]) {
                return Err(or.error("grids", "each grid must double the previous one"));
            }
        }
        or.finish()?;

        Ok(RunConfig {
            problem: ProblemConfig {
                source,
                p,
                horizon,
                dim,
                hartman_radius,
                field,
                reference,
            },
            solver,
            outputs,
        })
    }

    /// Canonical text form; `parse_config(&cfg.serialize()) == Ok(cfg)`.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let pc = &self.problem;
        let kv = |out: &mut String, k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        out.push_str("[problem]\n");
        if let ProblemSource::Catalog(c) = &pc.source {
            kv(&mut out, "catalog", c.name().into());
        }
        kv(&mut out, "p", fmt_real(pc.p));
        kv(&mut out, "T", fmt_real(pc.horizon));
        kv(&mut out, "N", pc.dim.to_string());
        if let Some(m) = pc.hartman_radius {
            kv(&mut out, "M", fmt_real(m));
        }
        match &pc.source {
            ProblemSource::Catalog(c) => match c {
                CatalogEntry::Example1 { a, k1, k2 } => {
                    kv(&mut out, "a", a.to_string());
                    kv(&mut out, "k1", k1.to_string());
                    kv(&mut out, "k2", k2.to_string());
                }
                CatalogEntry::Example2 { k1, k2 } => {
                    kv(&mut out, "k1", k1.to_string());
                    kv(&mut out, "k2", k2.to_string());
                }
                CatalogEntry::Example3 { a } | CatalogEntry::Example4 { a } | CatalogEntry::Example5 { a } => {
                    kv(&mut out, "a", a.to_string());
                }
                CatalogEntry::Example6 { a, theta, eta } => {
                    kv(&mut out, "a", a.to_string());
                    kv(&mut out, "theta", fmt_real(*theta));
                    kv(&mut out, "eta", fmt_real(*eta));
                }
            },
            ProblemSource::Inline { a, .. } => kv(&mut out, "a", a.to_string()),
        }
        kv(&mut out, "field", pc.field.name().into());
        if let Some(r) = pc.reference {
            kv(&mut out, "reference", r.name().into());
        }

        let mut field = String::new();
        match &pc.field {
            FieldSpec::Constant(v) => kv(&mut field, "value", fmt_reals(v)),
            FieldSpec::Step { before, after, switch } => {
                kv(&mut field, "before", fmt_reals(before));
                kv(&mut field, "after", fmt_reals(after));
                kv(&mut field, "switch", fmt_real(*switch));
            }
            FieldSpec::Tabulated { times, values } => {
                kv(&mut field, "times", fmt_reals(times));
                kv(&mut field, "values", fmt_rows(values));
            }
            _ => {}
        }
        if !field.is_empty() {
            out.push_str("\n[field]\n");
            out.push_str(&field);
        }

        if let ProblemSource::Inline { boundary, .. } = &pc.source {
            out.push_str("\n[boundary]\n");
            match boundary {
                BoundarySpec::Dirichlet => kv(&mut out, "kind", "dirichlet".into()),
                BoundarySpec::Neumann => kv(&mut out, "kind", "neumann".into()),
                BoundarySpec::Periodic => kv(&mut out, "kind", "periodic".into()),
                BoundarySpec::SturmLiouville { theta, eta } => {
                    kv(&mut out, "kind", "sturm-liouville".into());
                    kv(&mut out, "theta", fmt_real(*theta));
                    kv(&mut out, "eta", fmt_real(*eta));
                }
                BoundarySpec::ProductCone { k1, k2 } => {
                    kv(&mut out, "kind", "product-cone".into());
                    kv(&mut out, "k1", k1.to_string());
                    kv(&mut out, "k2", k2.to_string());
                }
            }
        }

        let s = &self.solver;
        let mut solver = String::new();
        let opt_count = |out: &mut String, k: &str, v: Option<usize>| {
            if let Some(v) = v {
                kv(out, k, v.to_string());
            }
        };
        let opt_real = |out: &mut String, k: &str, v: Option<f64>| {
            if let Some(v) = v {
                kv(out, k, fmt_real(v));
            }
        };
        opt_count(&mut solver, "n", s.intervals);
        if let Some(v) = &s.lambda_schedule {
            kv(&mut solver, "lambda", fmt_reals(v));
        }
        if let Some(v) = &s.epsilon_schedule {
            kv(&mut solver, "epsilon", fmt_reals(v));
        }
        opt_count(&mut solver, "newton_max_iters", s.newton_max_iters);
        opt_real(&mut solver, "newton_tol", s.newton_tol);
        opt_real(&mut solver, "backtrack", s.backtrack);
        opt_real(&mut solver, "min_step", s.min_step);
        opt_count(&mut solver, "picard_iters", s.picard_iters);
        opt_real(&mut solver, "mu", s.mu);
        opt_count(&mut solver, "growth_samples", s.growth_samples);
        if let Some(v) = s.seed {
            kv(&mut solver, "seed", v.to_string());
        }
        if !solver.is_empty() {
            out.push_str("\n[solver]\n");
            out.push_str(&solver);
        }

        let o = &self.outputs;
        let mut outputs = String::new();
        for (k, v) in [("solution", &o.solution), ("report", &o.report), ("study", &o.study)] {
            if let Some(v) = v {
                kv(&mut outputs, k, v.clone());
            }
        }
        if let Some(g) = &o.grids {
            kv(
                &mut outputs,
                "grids",
                g.iter().map(usize::to_string).collect::<Vec<_>>().join(", "),
            );
        }
        if !outputs.is_empty() {
            out.push_str("\n[outputs]\n");
            out.push_str(&outputs);
        }
        out
    }
}

pub fn parse_config(text: &str) -> ConfigResult<RunConfig> {
    RunConfig::from_document(&Document::parse(text)?)
}

/// Parses `text`, applies `section.key=value` overrides in order, then validates.
pub fn parse_config_with_overrides(text: &str, overrides: &[String]) -> ConfigResult<RunConfig> {
    let mut doc = Document::parse(text)?;
    for o in overrides {
        doc.apply_override(o)?;
    }
    RunConfig::from_document(&doc)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[problem]\ncatalog = example3\np = 2\nT = 1\nN = 1\nfield = builtin:msin\n";

    #[test]
    fn minimal_dirichlet_config_is_valid() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.problem.source, ProblemSource::Catalog(CatalogEntry::Example3 { a: MapSpec::Zero }));
        assert_eq!(cfg.problem.field, FieldSpec::Msin);
        assert_eq!(cfg.problem.dim, 1);
        assert_eq!(cfg.solver, SolverOverrides::default());
    }

    #[test]
    fn p_below_two_is_rejected() {
        let err = parse_config(&MINIMAL.replace("p = 2", "p = 1.5")).unwrap_err();
        match err {
            ConfigError::Validation { key, line, message } => {
                assert_eq!(key, "problem.p");
                assert_eq!(line, Some(3));
                assert_eq!(message, "p must be ≥ 2");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn catalog_and_inline_are_exclusive() {
        let text = format!("{MINIMAL}\n[boundary]\nkind = neumann\n");
        assert!(matches!(
            parse_config(&text),
            Err(ConfigError::Validation { ref key, .. }) if key == "problem.catalog"
        ));
    }

    #[test]
    fn neither_catalog_nor_inline_is_rejected() {
        let text = MINIMAL.replace("catalog = example3\n", "");
        assert!(matches!(parse_config(&text), Err(ConfigError::Validation { .. })));
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let err = parse_config("[problem]\np 2\n").unwrap_err();
        assert_eq!(err, ConfigError::parse(2, "expected `key = value`, found `p 2`"));
        assert!(matches!(parse_config("p = 2\n"), Err(ConfigError::Parse { line: 1, .. })));
        assert!(matches!(parse_config("[nope]\n"), Err(ConfigError::Parse { line: 1, .. })));
        assert!(matches!(
            parse_config(&format!("{MINIMAL}p = 3\n")),
            Err(ConfigError::Parse { line: 7, .. })
        ));
    }

    #[test]
    fn unknown_keys_are_named() {
        let err = parse_config(&format!("{MINIMAL}colour = red\n")).unwrap_err();
        assert!(matches!(err, ConfigError::Validation { ref key, line: Some(7), .. } if key == "problem.colour"));
    }

    #[test]
    fn nonpositive_theta_is_rejected() {
        let text = MINIMAL.replace("example3", "example6") + "theta = 0\neta = 1\n";
        let err = parse_config(&text).unwrap_err();
        assert!(matches!(err, ConfigError::Validation { ref key, .. } if key == "problem.theta"));
    }

    #[test]
    fn example2_requires_sets_in_the_orthant() {
        let base = MINIMAL.replace("example3", "example2");
        assert!(parse_config(&format!("{base}k1 = origin\nk2 = box(0; 1)\n")).is_ok());
        assert!(parse_config(&format!("{base}k1 = whole\nk2 = origin\n")).is_err());
        assert!(parse_config(&format!("{base}a = zero\nk1 = origin\nk2 = origin\n")).is_err());
    }

    #[test]
    fn set_and_map_grammar_round_trips() {
        for s in [
            "orthant",
            "whole",
            "origin",
            "point(1.5, -2.0)",
            "box(0.0, -1.0; 1.0, 2.0)",
            "ball(0.0, 0.5; 1.0)",
            "halfspace(1.0, 2.0; 0.5)",
            "polyhedron(1.0, 1.0, 1.0; -1.0, 0.0, 0.0)",
        ] {
            let set = set_spec(s).unwrap();
            assert_eq!(set.to_string(), s);
            let map = MapSpec::Cone(set);
            assert_eq!(map_spec(&map.to_string()).unwrap(), map);
        }
        assert_eq!(map_spec("weighted-l1(0.7)").unwrap(), MapSpec::WeightedL1(0.7));
        assert!(map_spec("zero(1)").is_err());
        assert!(set_spec("box(0, 1)").is_err());
    }

    #[test]
    fn overrides_replace_and_add_keys() {
        let cfg = parse_config_with_overrides(
            MINIMAL,
            &["problem.p=3".into(), "solver.n=128".into(), "solver.lambda=1, 0.01".into()],
        )
        .unwrap();
        assert_eq!(cfg.problem.p, 3.0);
        assert_eq!(cfg.solver.intervals, Some(128));
        assert_eq!(cfg.solver.lambda_schedule, Some(vec![1.0, 0.01]));
        assert!(parse_config_with_overrides(MINIMAL, &["p=3".into()]).is_err());
        assert!(parse_config_with_overrides(MINIMAL, &["bogus.p=3".into()]).is_err());
    }

    #[test]
    fn empty_lambda_schedule_is_a_validation_error() {
        let err = parse_config(&format!("{MINIMAL}[solver]\nlambda =\n")).unwrap_err();
        assert!(matches!(err, ConfigError::Validation { ref key, line: Some(8), .. } if key == "solver.lambda"));
    }

    #[test]
    fn serialize_is_a_fixed_point() {
        let text = "[problem]\np = 3.0\nT = 2.0\nN = 2\nM = 1.5\na = cone(box(-1.0, -1.0; 1.0, 1.0))\nfield = builtin:step\n\n\
                    [field]\nbefore = 1.0, 0.0\nafter = -1.0, 0.0\nswitch = 1.0\n\n\
                    [boundary]\nkind = sturm-liouville\ntheta = 0.5\neta = 2.0\n\n\
                    [solver]\nn = 32\nlambda = 1.0, 0.001, 1e-6\nseed = 7\n\n[outputs]\nsolution = x.csv\ngrids = 8, 16\n";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.serialize(), text);
        assert_eq!(parse_config(&cfg.serialize()).unwrap(), cfg);
    }

    #[test]
    fn trailing_comments_are_ignored() {
        let text = "# run\n[problem]   # header\ncatalog = example6          # catalog\np = 2\nT = 1\nN = 2\n\
                    a = cone(ball(0, 0; 0.3))   # map\ntheta = 1\neta = 0.5\nfield = builtin:msin\n";
        let cfg = parse_config(text).unwrap();
        assert!(matches!(
            cfg.problem.source,
            ProblemSource::Catalog(CatalogEntry::Example6 { theta, .. }) if theta == 1.0
        ));
    }

    #[test]
    fn reals_use_shortest_round_trip_form() {
        for v in [0.1, 1e-6, 1.0 / 3.0, -2.5e300, 5e-324] {
            assert_eq!(real(&fmt_real(v)).unwrap(), v);
        }
        assert!(real("nan").is_err());
        assert!(real("inf").is_err());
    }
}
