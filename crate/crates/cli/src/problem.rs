//! Turning a [`RunConfig`] into solver inputs, and the catalog listing.

use std::f64::consts::PI;

use plbvp_core::{
    make_normal_cone, BoundaryOperator64, BuiltinField, ConvexSet64, Exponent64, MonotoneMap64, MultiField64,
    ProblemSpec64, SolverConfig64,
};

use crate::config::{BoundarySpec, FieldSpec, MapSpec, Reference, RunConfig, SetSpec};

pub fn convex_set(set: &SetSpec, dim: usize) -> ConvexSet64 {
    match set {
        SetSpec::Orthant => ConvexSet64::Orthant { dim },
        SetSpec::Whole => ConvexSet64::Whole { dim },
        SetSpec::Origin => ConvexSet64::Point(vec![0.0; dim]),
        SetSpec::Point(c) => ConvexSet64::Point(c.clone()),
        SetSpec::Box { lower, upper } => ConvexSet64::Box {
            lower: lower.clone(),
            upper: upper.clone(),
        },
        SetSpec::Ball { center, radius } => ConvexSet64::Ball {
            center: center.clone(),
            radius: *radius,
        },
        SetSpec::HalfSpace { normal, offset } => ConvexSet64::HalfSpace {
            normal: normal.clone(),
            offset: *offset,
        },
        SetSpec::Polyhedron { normals, offsets } => ConvexSet64::Polyhedron {
            normals: normals.clone(),
            offsets: offsets.clone(),
        },
    }
}

pub fn monotone_map(map: &MapSpec, dim: usize) -> plbvp_core::Result<MonotoneMap64> {
    match map {
        MapSpec::Zero => Ok(MonotoneMap64::zero(dim)),
        MapSpec::Identity => Ok(MonotoneMap64::identity(dim)),
        MapSpec::Scaled(c) => MonotoneMap64::scaled(dim, *c),
        MapSpec::WeightedL1(w) => MonotoneMap64::weighted_l1(dim, *w),
        MapSpec::Cone(s) => make_normal_cone(convex_set(s, dim)),
    }
}

pub fn boundary_operator(bc: &BoundarySpec, dim: usize, p: f64) -> plbvp_core::Result<BoundaryOperator64> {
    match bc {
        BoundarySpec::Dirichlet => Ok(BoundaryOperator64::dirichlet(dim)),
        BoundarySpec::Neumann => Ok(BoundaryOperator64::neumann(dim)),
        BoundarySpec::Periodic => Ok(BoundaryOperator64::periodic(dim)),
        BoundarySpec::SturmLiouville { theta, eta } => {
            BoundaryOperator64::sturm_liouville(dim, Exponent64::new(p)?, *theta, *eta)
        }
        BoundarySpec::ProductCone { k1, k2 } => {
            BoundaryOperator64::product_cone(convex_set(k1, dim), convex_set(k2, dim))
        }
    }
}

pub fn builtin_field(field: &FieldSpec, dim: usize, horizon: f64, p: f64) -> BuiltinField<f64> {
    match field {
        FieldSpec::Msin => BuiltinField::ManufacturedSine { horizon },
        FieldSpec::Plap3 => BuiltinField::ManufacturedQuadratic { horizon, p },
        FieldSpec::Constant(c) => BuiltinField::Constant(c.clone()),
        FieldSpec::Linear => BuiltinField::Linear { scale: 1.0 },
        FieldSpec::Negated => BuiltinField::Linear { scale: -1.0 },
        FieldSpec::Step { before, after, switch } => BuiltinField::Step {
            before: before.clone(),
            after: after.clone(),
            switch: *switch,
        },
        FieldSpec::Tabulated { times, values } => {
            debug_assert!(values.iter().all(|v| v.len() == dim));
            BuiltinField::Tabulated {
                times: times.clone(),
                values: values.clone(),
            }
        }
    }
}

pub fn build_spec(cfg: &RunConfig) -> plbvp_core::Result<ProblemSpec64> {
    let pc = &cfg.problem;
    let (a, bc) = pc.source.expand();
    let field = MultiField64::builtin(pc.dim, pc.horizon, builtin_field(&pc.field, pc.dim, pc.horizon, pc.p))?;
    let spec = ProblemSpec64::new(
        Exponent64::new(pc.p)?,
        pc.horizon,
        monotone_map(&a, pc.dim)?,
        field,
        boundary_operator(&bc, pc.dim, pc.p)?,
    )?;
    match pc.hartman_radius {
        Some(m) => spec.with_hartman_radius(m),
        None => Ok(spec),
    }
}

pub fn solver_config(cfg: &RunConfig) -> SolverConfig64 {
    let s = &cfg.solver;
    let mut out = SolverConfig64::default();
    if let Some(n) = s.intervals {
        out.intervals = n;
    }
    if let Some(l) = &s.lambda_schedule {
        out.lambda_schedule = l.clone();
    }
    if let Some(e) = &s.epsilon_schedule {
        out.epsilon_schedule = Some(e.clone());
    }
    if let Some(v) = s.newton_max_iters {
        out.newton_max_iters = v;
    }
    if let Some(v) = s.newton_tol {
        out.newton_tol = v;
    }
    if let Some(v) = s.backtrack {
        out.backtrack = v;
    }
    if let Some(v) = s.min_step {
        out.min_step = v;
    }
    if let Some(v) = s.picard_iters {
        out.picard_fallback_iters = v;
    }
    if let Some(v) = s.mu {
        out.mu = v;
    }
    if let Some(v) = s.growth_samples {
        out.growth_samples = v;
    }
    if let Some(v) = s.seed {
        out.seed = v;
    }
    out
}

/// Exact solution in the first component, zero elsewhere.
pub fn reference_solution(r: Reference, dim: usize, horizon: f64) -> impl Fn(f64) -> Vec<f64> {
    move |t| {
        let mut v = vec![0.0; dim];
        v[0] = match r {
            Reference::Sine => (PI * t / horizon).sin(),
            Reference::Quadratic => t * (horizon - t),
        };
        v
    }
}

pub struct CatalogInfo {
    pub name: &'static str,
    pub title: &'static str,
    pub boundary: &'static str,
    pub parameters: &'static [(&'static str, &'static str)],
}

pub const CATALOG: [CatalogInfo; 6] = [
    CatalogInfo {
        name: "example1",
        title: "normal cone of a product of convex sets",
        boundary: "x(0) in K1, x(T) in K2, end fluxes in the normal cones",
        parameters: &[
            ("a", "map A (default zero)"),
            ("k1", "set K1 containing 0 (required)"),
            ("k2", "set K2 containing 0 (required)"),
        ],
    },
    CatalogInfo {
        name: "example2",
        title: "evolutionary variational inequality",
        boundary: "A = normal cone of the nonnegative orthant, K1, K2 inside the orthant",
        parameters: &[
            ("k1", "set K1 inside the orthant containing 0 (required)"),
            ("k2", "set K2 inside the orthant containing 0 (required)"),
        ],
    },
    CatalogInfo {
        name: "example3",
        title: "Dirichlet",
        boundary: "x(0) = x(T) = 0",
        parameters: &[("a", "map A (default zero)")],
    },
    CatalogInfo {
        name: "example4",
        title: "Neumann",
        boundary: "x'(0) = x'(T) = 0",
        parameters: &[("a", "map A (default zero)")],
    },
    CatalogInfo {
        name: "example5",
        title: "periodic",
        boundary: "x(0) = x(T), x'(0) = x'(T)",
        parameters: &[("a", "map A (default zero)")],
    },
    CatalogInfo {
        name: "example6",
        title: "Sturm-Liouville",
        boundary: "x(0) - theta x'(0) = 0, x(T) + eta x'(T) = 0",
        parameters: &[
            ("a", "map A (default zero)"),
            ("theta", "theta > 0 (required)"),
            ("eta", "eta > 0 (required)"),
        ],
    },
];

pub fn catalog_listing() -> String {
    let mut out = String::new();
    for c in &CATALOG {
        out.push_str(&format!("{} — {}\n    boundary: {}\n", c.name, c.title, c.boundary));
        for (k, d) in c.parameters {
            out.push_str(&format!("    {k:<6} {d}\n"));
        }
    }
    out.push_str(
        "common [problem] keys: p (>= 2), T (> 0), N (>= 1), M (optional Hartman radius), field, reference\n",
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn every_catalog_entry_builds_a_valid_spec() {
        let extra = [
            "k1 = origin\nk2 = whole\n",
            "k1 = orthant\nk2 = origin\n",
            "",
            "",
            "",
            "theta = 1\neta = 2\n",
        ];
        for (info, extra) in CATALOG.iter().zip(extra) {
            let text = format!(
                "[problem]\ncatalog = {}\np = 2\nT = 1\nN = 2\nfield = builtin:msin\n{extra}",
                info.name
            );
            let cfg = parse_config(&text).unwrap();
            let spec = build_spec(&cfg).unwrap();
            assert_eq!(spec.dim(), 2, "{}", info.name);
        }
    }

    #[test]
    fn example2_uses_the_orthant_cone() {
        let cfg = parse_config(
            "[problem]\ncatalog = example2\np = 2\nT = 1\nN = 1\nfield = builtin:linear\nk1 = origin\nk2 = origin\n",
        )
        .unwrap();
        let spec = build_spec(&cfg).unwrap();
        assert_eq!(spec.a().tag().as_str(), plbvp_core::MapTag::OrthantCone.as_str());
    }

    #[test]
    fn set_without_origin_is_rejected_by_the_core() {
        let cfg = parse_config(
            "[problem]\np = 2\nT = 1\nN = 1\nfield = builtin:linear\n[boundary]\nkind = product-cone\nk1 = point(1)\nk2 = origin\n",
        )
        .unwrap();
        assert!(build_spec(&cfg).is_err());
    }

    #[test]
    fn solver_overrides_apply() {
        let cfg = parse_config(
            "[problem]\ncatalog = example3\np = 2\nT = 1\nN = 1\nfield = builtin:msin\n[solver]\nn = 16\nmu = 0.5\nseed = 3\n",
        )
        .unwrap();
        let sc = solver_config(&cfg);
        assert_eq!((sc.intervals, sc.mu, sc.seed), (16, 0.5, 3));
        assert_eq!(sc.lambda_schedule, SolverConfig64::default().lambda_schedule);
    }
}
