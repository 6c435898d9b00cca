use nalgebra::{Matrix3, SMatrix};
use proptest::prelude::*;

use twofluid::closure::{
    closure_residual, solve_z, solved_residual, z_upper_bound, MixtureState, PhaseParams, PressureLaw,
};
use twofluid::energy::total_energy;
use twofluid::grid::Grid;
use twofluid::solver::{rusanov_step, Boundary, Cons, ConservedField, FluxKind, SolverConfig};
use twofluid::subsolution::{
    convex_energy, lambda_max, min_lambda, outer_over, subsolution_gap, SubsolutionFields, SubsolutionSample,
    TracelessSym3,
};
use twofluid::symmetric_form::{char_speeds, expected_speeds, system_at};

fn gammas() -> impl Strategy<Value = (f64, f64)> {
    (1.01f64..5.0, 1.01f64..5.0)
}

fn log_density() -> impl Strategy<Value = f64> {
    (-3.0f64..3.0).prop_map(|e| 10f64.powf(e))
}

fn vec3(scale: f64) -> impl Strategy<Value = [f64; 3]> {
    [-scale..scale, -scale..scale, -scale..scale]
}

fn traceless(scale: f64) -> impl Strategy<Value = TracelessSym3> {
    (
        -scale..scale,
        -scale..scale,
        -scale..scale,
        -scale..scale,
        -scale..scale,
    )
        .prop_map(|(xx, yy, xy, xz, yz)| TracelessSym3 { xx, yy, xy, xz, yz })
}

fn oracle_lambda_max(m: &[[f64; 3]; 3]) -> f64 {
    let mat = Matrix3::from_fn(|r, c| m[r][c]);
    mat.symmetric_eigen().eigenvalues.max()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn closure_root_is_bracketed((gp, gm) in gammas(), r in log_density(), q in log_density()) {
        let params = PhaseParams::new(gp, gm).unwrap();
        let res = solve_z(MixtureState::new(r, q).unwrap(), &params).unwrap();
        prop_assert!(res.z >= r);
        prop_assert!(res.z <= z_upper_bound(r, q, &params) * (1.0 + 1e-15));
        prop_assert!(solved_residual(r, q, &res, &params).abs() <= 1e-12 * q.max(1.0));
        prop_assert!(res.alpha > 0.0 && res.alpha <= 1.0);
        prop_assert!(res.dp_drho_at_fixed_s > 0.0);
    }

    #[test]
    fn closure_residual_increases_above_r((gp, gm) in gammas(), r in log_density(), q in log_density(), t in 0.0f64..1.0) {
        let params = PhaseParams::new(gp, gm).unwrap();
        let hi = z_upper_bound(r, q, &params);
        prop_assert!(closure_residual(r, q, r, &params) <= 0.0);
        prop_assert!(closure_residual(r, q, hi, &params) >= 0.0);
        let z1 = r + t * (hi - r);
        let z2 = z1 + 1e-3 * (hi - r);
        prop_assert!(closure_residual(r, q, z2, &params) > closure_residual(r, q, z1, &params));
    }

    #[test]
    fn equal_exponents_recover_single_fluid(g in 1.01f64..5.0, r in log_density(), q in log_density()) {
        let params = PhaseParams::new(g, g).unwrap();
        let res = solve_z(MixtureState::new(r, q).unwrap(), &params).unwrap();
        prop_assert!((res.z - (r + q)).abs() <= 1e-12 * (r + q));
        prop_assert!((res.p - (r + q).powf(g)).abs() <= 1e-11 * res.p);
    }

    #[test]
    fn symmetric_system_speeds(
        (gp, gm) in gammas(),
        r in 0.1f64..10.0,
        q in 0.1f64..10.0,
        u in vec3(3.0),
        dir in vec3(1.0),
    ) {
        let norm = (dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]).sqrt();
        prop_assume!(norm > 1e-3);
        let n = [dir[0] / norm, dir[1] / norm, dir[2] / norm];
        let params = PhaseParams::new(gp, gm).unwrap();
        let (_, sys, c2) = system_at(MixtureState::new(r, q).unwrap(), u, &params).unwrap();
        prop_assert!(sys.is_symmetric_hyperbolic());
        let speeds = char_speeds(&sys, n).unwrap();
        let expected = expected_speeds(u, n, c2);
        // independent route: eigenvalues of A0^-1 A_n
        let a0 = SMatrix::<f64, 5, 5>::from_fn(|i, j| sys.a0[i][j]);
        let an_raw = sys.directional(n);
        let an = SMatrix::<f64, 5, 5>::from_fn(|i, j| an_raw[i][j]);
        let mut oracle: Vec<f64> = (a0.try_inverse().unwrap() * an)
            .complex_eigenvalues()
            .iter()
            .map(|z| z.re)
            .collect();
        oracle.sort_by(f64::total_cmp);
        let scale = 1.0 + c2.sqrt() + u.iter().map(|x| x.abs()).sum::<f64>();
        for k in 0..5 {
            prop_assert!((speeds[k] - expected[k]).abs() <= 1e-10 * scale);
            prop_assert!((oracle[k] - expected[k]).abs() <= 1e-8 * scale);
        }
    }

    #[test]
    fn lambda_max_matches_dense_solver(d in vec3(10.0), o in vec3(10.0)) {
        let m = [[d[0], o[0], o[1]], [o[0], d[1], o[2]], [o[1], o[2], d[2]]];
        let ours = lambda_max(&m).unwrap();
        let oracle = oracle_lambda_max(&m);
        prop_assert!((ours - oracle).abs() <= 1e-10 * oracle.abs().max(1.0));
    }

    #[test]
    fn lambda_max_near_repeated_top(a in 0.1f64..5.0, eps in 0.0f64..1e-6, w in vec3(1.0)) {
        // a I - eps w w^T has the double top eigenvalue a
        let mut m = outer_over(w, 1.0);
        for (k, row) in m.iter_mut().enumerate() {
            for x in row.iter_mut() {
                *x *= -eps;
            }
            row[k] += a;
        }
        let ours = lambda_max(&m).unwrap();
        prop_assert!((ours - oracle_lambda_max(&m)).abs() <= 1e-10 * a.max(1.0));
        prop_assert!((ours - a).abs() <= 1e-12 * a);
    }

    #[test]
    fn flux_term_bounds_kinetic_energy(w in vec3(5.0), rho in 0.01f64..10.0, u in traceless(5.0)) {
        let sample = SubsolutionSample {
            v: w,
            grad_psi: [0.0; 3],
            dt_psi: 0.0,
            r: 0.5 * rho,
            q: 0.5 * rho,
            u,
            lambda: 0.0,
        };
        let kinetic = sample.kinetic();
        prop_assert!(kinetic <= sample.flux_term() + 1e-12 * (1.0 + kinetic));
        let equal = SubsolutionSample { u: TracelessSym3::from_rank_one(w, rho), ..sample };
        prop_assert!((equal.flux_term() - kinetic).abs() <= 1e-12 * (1.0 + kinetic));
    }

    #[test]
    fn convex_energy_midpoint(a in vec3(3.0), b in vec3(3.0), ua in traceless(3.0), ub in traceless(3.0)) {
        let mid_v = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]), 0.5 * (a[2] + b[2])];
        let mid_u = TracelessSym3 {
            xx: 0.5 * (ua.xx + ub.xx),
            yy: 0.5 * (ua.yy + ub.yy),
            xy: 0.5 * (ua.xy + ub.xy),
            xz: 0.5 * (ua.xz + ub.xz),
            yz: 0.5 * (ua.yz + ub.yz),
        };
        let slack = 0.5 * (convex_energy(a, &ua) + convex_energy(b, &ub)) - convex_energy(mid_v, &mid_u);
        prop_assert!(slack >= -1e-10);
    }

    #[test]
    fn selected_lambda_makes_every_gap_positive(
        (gp, gm) in gammas(),
        cells in proptest::collection::vec((vec3(2.0), vec3(1.0), -1.0f64..1.0, 0.1f64..5.0, 0.1f64..5.0), 6),
        margin in 1e-6f64..1e-2,
    ) {
        let params = PhaseParams::new(gp, gm).unwrap();
        let grid = Grid::new_2d(3, 2, (0.0, 1.0), (0.0, 1.0)).unwrap();
        let fields = SubsolutionFields {
            grid,
            v: cells.iter().map(|c| c.0).collect(),
            grad_psi: cells.iter().map(|c| c.1).collect(),
            dt_psi: cells.iter().map(|c| c.2).collect(),
            r: cells.iter().map(|c| c.3).collect(),
            q: cells.iter().map(|c| c.4).collect(),
        };
        let lambda = min_lambda(&fields, &params, margin).unwrap();
        for cell in 0..grid.len() {
            prop_assert!(subsolution_gap(&fields.sample(cell, lambda), &params).unwrap() > 0.0);
        }
        // with grad Psi = 0 doubling v scales the rank-one term by 4
        let at_rest = SubsolutionFields { grad_psi: vec![[0.0; 3]; grid.len()], ..fields.clone() };
        let doubled = SubsolutionFields {
            v: fields.v.iter().map(|v| [2.0 * v[0], 2.0 * v[1], 2.0 * v[2]]).collect(),
            ..at_rest.clone()
        };
        let base = min_lambda(&at_rest, &params, margin).unwrap();
        prop_assert!(min_lambda(&doubled, &params, margin).unwrap() >= base);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn mass_is_conserved_by_a_step(
        rs in proptest::collection::vec(0.2f64..2.0, 16),
        qs in proptest::collection::vec(0.2f64..2.0, 16),
        us in proptest::collection::vec(-0.5f64..0.5, 16),
        periodic in any::<bool>(),
    ) {
        let grid = Grid::new_1d(16, 0.0, 1.0).unwrap();
        let cells = (0..16).map(|i| Cons::from_primitive(rs[i], qs[i], [us[i], 0.0, 0.0])).collect();
        let field = ConservedField::new(grid, cells).unwrap();
        let params = PhaseParams::new(2.0, 1.5).unwrap();
        let config = SolverConfig {
            cfl: 0.5,
            t_end: 1.0,
            flux: FluxKind::Rusanov,
            bc: if periodic { Boundary::Periodic } else { Boundary::Reflecting },
            law: PressureLaw::TwoFluid(params),
            snapshots: 1,
        };
        let (next, _) = rusanov_step(&field, &config).unwrap();
        prop_assert!((next.mass_r() - field.mass_r()).abs() <= 1e-14 * field.mass_r());
        prop_assert!((next.mass_q() - field.mass_q()).abs() <= 1e-14 * field.mass_q());
        let e = total_energy(&next, &params).unwrap();
        prop_assert!(
            (e.internal_minus - e.internal_minus_closure).abs() <= 1e-10 * e.internal_minus.abs().max(1.0)
        );
    }
}
