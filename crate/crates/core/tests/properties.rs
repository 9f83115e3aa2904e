mod common;

use common::{catalog_maps, dist, norm};
use plbvp_core::{
    bc_residual, continuation_solve, green_terms, radial_retraction, solve_regularized, BoundaryOperator, BuiltinField,
    ConvexSet, Exponent, Grid, MonotoneMap, MultiField, ProblemSpec, SolverConfig, Trajectory,
};
use proptest::prelude::*;

fn boundary_catalog() -> Vec<(&'static str, BoundaryOperator<f64>)> {
    let e3 = Exponent::new(3.0).unwrap();
    vec![
        ("dirichlet", BoundaryOperator::dirichlet(2)),
        ("neumann", BoundaryOperator::neumann(2)),
        ("periodic", BoundaryOperator::periodic(2)),
        (
            "sturm-liouville p=2",
            BoundaryOperator::sturm_liouville(2, Exponent::new(2.0).unwrap(), 1.0, 2.5).unwrap(),
        ),
        ("sturm-liouville p=3", BoundaryOperator::sturm_liouville(2, e3, 0.5, 1.5).unwrap()),
        (
            "product cone",
            BoundaryOperator::product_cone(
                ConvexSet::Box { lower: vec![0.0, -1.0], upper: vec![2.0, 1.0] },
                ConvexSet::Ball { center: vec![0.0, 0.5], radius: 1.0 },
            )
            .unwrap(),
        ),
    ]
}

fn vec2() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0..5.0f64, 2)
}

fn vec4() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0..5.0f64, 4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn map_resolvents_are_nonexpansive(x in vec2(), y in vec2(), e in 0.0..6.0f64) {
        let lambda = 10f64.powf(-e);
        for (name, map) in catalog_maps() {
            let (jx, jy) = (map.resolvent(lambda, &x).unwrap(), map.resolvent(lambda, &y).unwrap());
            prop_assert!(dist(&jx, &jy) <= dist(&x, &y) + 1e-12, "{name}");
        }
    }

    #[test]
    fn yosida_lies_in_graph_at_resolvent(x in vec2(), e in 0.0..6.0f64) {
        let lambda = 10f64.powf(-e);
        for (name, map) in catalog_maps() {
            let j = map.resolvent(lambda, &x).unwrap();
            let a = map.yosida(lambda, &x).unwrap();
            prop_assert!(map.graph_contains(&j, &a, 1e-8).unwrap(), "{name}");
        }
    }

    #[test]
    fn boundary_resolvents_are_nonexpansive(z in vec4(), w in vec4(), mu in 0.05..20.0f64) {
        for (name, xi) in boundary_catalog() {
            let (jz, jw) = (xi.resolvent(mu, &z).unwrap(), xi.resolvent(mu, &w).unwrap());
            prop_assert!(dist(&jz, &jw) <= dist(&z, &w) + 1e-12, "{name}");
        }
    }

    #[test]
    fn bc_residual_zero_set_is_mu_invariant(z in vec4(), mu0 in prop::sample::select(vec![0.1, 1.0, 10.0])) {
        for (name, xi) in boundary_catalog() {
            // (J(z), (z - J(z)) / mu0) is on the graph of xi.
            let point = xi.resolvent(mu0, &z).unwrap();
            let value: Vec<f64> = z.iter().zip(&point).map(|(a, b)| (a - b) / mu0).collect();
            let r0 = bc_residual(&xi, mu0, &point[..2], &point[2..], &value[..2], &value[2..]).unwrap();
            prop_assert!(r0.norm <= 1e-9, "{name}: {}", r0.norm);
            for mu in [0.1, 1.0, 10.0] {
                let r = bc_residual(&xi, mu, &point[..2], &point[2..], &value[..2], &value[2..]).unwrap();
                prop_assert!(r.norm <= 1e-6, "{name}: mu {mu} residual {}", r.norm);
            }
        }
    }

    #[test]
    fn linear_sturm_liouville_resolvent_matches_closed_form(
        z in vec4(), mu in 0.05..20.0f64, theta in 0.1..5.0f64, eta in 0.1..5.0f64,
    ) {
        // p = 2: xi(a, a') = (a / theta, a' / eta), so J(z) = (z / (1 + mu / theta), z' / (1 + mu / eta)).
        let xi = BoundaryOperator::sturm_liouville(2, Exponent::new(2.0).unwrap(), theta, eta).unwrap();
        let j = xi.resolvent(mu, &z).unwrap();
        let expect = [
            z[0] / (1.0 + mu / theta),
            z[1] / (1.0 + mu / theta),
            z[2] / (1.0 + mu / eta),
            z[3] / (1.0 + mu / eta),
        ];
        prop_assert!(dist(&j, &expect) <= 1e-10 * (1.0 + norm(&z)));
    }

    #[test]
    fn nonlinear_sturm_liouville_resolvent_solves_its_equation(
        z in vec4(), mu in 0.05..20.0f64, theta in 0.1..5.0f64, p in 2.0..5.0f64,
    ) {
        // a + mu |a|^{p-2} a / theta^{p-1} = z on each end
        let e = Exponent::new(p).unwrap();
        let xi = BoundaryOperator::sturm_liouville(2, e, theta, theta).unwrap();
        let j = xi.resolvent(mu, &z).unwrap();
        let c = mu / theta.powf(p - 1.0);
        for (a, w) in [(&j[..2], &z[..2]), (&j[2..], &z[2..])] {
            let r = norm(a).powf(p - 2.0);
            let back: Vec<f64> = a.iter().map(|v| v + c * r * v).collect();
            prop_assert!(dist(&back, w) <= 1e-9 * (1.0 + norm(w)));
        }
    }

    #[test]
    fn radial_retraction_is_a_nonexpansive_retraction(x in vec2(), y in vec2(), m in 0.1..4.0f64) {
        let (px, py) = (radial_retraction(m, &x).unwrap(), radial_retraction(m, &y).unwrap());
        prop_assert!(norm(&px) <= m * (1.0 + 1e-15));
        if norm(&x) <= m {
            prop_assert_eq!(&px, &x);
        }
        // idempotent up to the rounding of |p_M x| on the sphere
        prop_assert!(dist(&radial_retraction(m, &px).unwrap(), &px) <= 4.0 * f64::EPSILON * m);
        // The radial retraction onto a Euclidean ball is the metric projection.
        prop_assert!(dist(&px, &py) <= dist(&x, &y) + 1e-12);
    }

    #[test]
    fn green_identity_holds_for_random_trajectories(
        nodes in prop::collection::vec(vec2(), 9), p in 2.0..5.0f64,
    ) {
        let grid = Grid::new(1.0, 8).unwrap();
        let traj = Trajectory::from_nodes(grid, &nodes).unwrap();
        let g = green_terms(&Exponent::new(p).unwrap(), &traj);
        prop_assert!(g.identity_defect() <= 1e-12 * g.magnitude().max(1.0));
    }

    #[test]
    fn f32_resolvents_track_f64(x in vec2(), e in 0.0..3.0f64) {
        let lambda = 10f64.powf(-e);
        let x32: Vec<f32> = x.iter().map(|&v| v as f32).collect();
        let pairs: Vec<(MonotoneMap<f32>, MonotoneMap<f64>)> = vec![
            (MonotoneMap::identity(2), MonotoneMap::identity(2)),
            (MonotoneMap::weighted_l1(2, 0.7).unwrap(), MonotoneMap::weighted_l1(2, 0.7).unwrap()),
            (
                plbvp_core::make_normal_cone(ConvexSet::Ball { center: vec![0.0, 0.0], radius: 1.0 }).unwrap(),
                plbvp_core::make_normal_cone(ConvexSet::Ball { center: vec![0.0, 0.0], radius: 1.0 }).unwrap(),
            ),
        ];
        for (m32, m64) in pairs {
            let j32 = m32.resolvent(lambda as f32, &x32).unwrap();
            let j64 = m64.resolvent(lambda, &x).unwrap();
            let back: Vec<f64> = j32.iter().map(|&v| v as f64).collect();
            prop_assert!(dist(&back, &j64) <= 1e-5 * (1.0 + norm(&x)));
        }
    }
}

fn obstacle_spec(n: usize) -> (ProblemSpec<f64>, SolverConfig<f64>) {
    let field = BuiltinField::Step { before: vec![4.0], after: vec![-4.0], switch: 0.5 };
    let spec = ProblemSpec::new(
        Exponent::new(2.0).unwrap(),
        1.0,
        plbvp_core::make_normal_cone(ConvexSet::Orthant { dim: 1 }).unwrap(),
        MultiField::builtin(1, 1.0, field).unwrap(),
        BoundaryOperator::dirichlet(1),
    )
    .unwrap();
    (spec, SolverConfig::default().with_intervals(n))
}

#[test]
fn warm_start_never_costs_more_newton_iterations() {
    let (spec, cfg) = obstacle_spec(64);
    let coarse = continuation_solve(&spec, &cfg.clone().with_lambda_schedule(vec![1.0, 1e-2, 1e-4])).unwrap();
    let lambda: f64 = 1e-6;
    let grid = cfg.grid(1.0).unwrap();
    let eps = lambda.sqrt() * grid.step();
    let cold = solve_regularized(&spec, lambda, eps, Trajectory::zeros(grid, 1), &cfg).unwrap();
    let warm = solve_regularized(&spec, lambda, eps, coarse.trajectory.clone(), &cfg).unwrap();
    let iters = |r: &plbvp_core::SolveReport<f64>| r.continuation_history[0].newton_iterations;
    assert!(iters(&warm) <= iters(&cold), "warm {} > cold {}", iters(&warm), iters(&cold));
    assert!(warm.trajectory.max_distance(&cold.trajectory) <= 1e-8);
}

#[test]
fn graph_membership_shrinks_with_lambda() {
    let (spec, cfg) = obstacle_spec(32);
    let mut last = f64::INFINITY;
    for k in 2..=6 {
        let schedule: Vec<f64> = (0..=k).map(|j| 10f64.powi(-j)).collect();
        let report = continuation_solve(&spec, &cfg.clone().with_lambda_schedule(schedule)).unwrap();
        let lambda = report.lambda;
        let u_max = report.multiplier_trace.iter().map(|u| norm(u)).fold(0.0, f64::max);
        assert!(report.graph_membership_residual <= 2.0 * lambda * u_max + 1e-12);
        assert!(report.graph_membership_residual <= last + 1e-14);
        last = report.graph_membership_residual;
    }
}
