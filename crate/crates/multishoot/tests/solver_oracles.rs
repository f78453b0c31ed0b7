//! Solver correctness against independent dense oracles on random
//! equality-constrained LQ problems.

mod common;

use common::{dense_cost_change, dense_kkt_solve, rand_dims, rand_lq_problem, rand_lq_problem_scaled};
use multishoot::manifold::difference;
use multishoot::solver::kkt::kkt_residual;
use multishoot::solver::{
    backward_pass, compute_node_data, forward_rollout, solve, Factorization, SolverSettings,
};
use multishoot::BasisMethod;
use rand::rngs::StdRng;
use rand::SeedableRng;

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + b.abs())
}

#[test]
fn both_factorizations_match_the_dense_kkt_direction() {
    let mut rng = StdRng::seed_from_u64(1001);
    for trial in 0..40 {
        let dims = rand_dims(&mut rng, 6, 5, 3, 12);
        let (problem, traj) = rand_lq_problem(&mut rng, &dims);
        let dense = dense_kkt_solve(&problem, &traj);

        for (fac, basis) in [
            (Factorization::Nullspace, BasisMethod::LuFullPivot),
            (Factorization::Nullspace, BasisMethod::QrColPivot),
            (Factorization::Schur, BasisMethod::LuFullPivot),
        ] {
            let data = compute_node_data(&problem, &traj, fac, basis, false).unwrap();
            let dir = backward_pass(&data, fac, 0.0).unwrap();
            let cand = forward_rollout(&problem, &traj, &data, &dir, 1.0, true).unwrap();
            for k in 0..problem.horizon() {
                let du = &cand.trajectory.controls[k] - &traj.controls[k];
                let err = (&du - &dense.du[k]).amax();
                assert!(
                    err <= 1e-8 * (1.0 + dense.du[k].amax()),
                    "trial {trial} {fac:?} node {k}: direction mismatch {err}"
                );
                let dx = difference(
                    &problem.manifold,
                    &cand.trajectory.states[k],
                    &traj.states[k],
                )
                .unwrap();
                let errx = (&dx - &dense.dx[k]).amax();
                assert!(errx <= 1e-8 * (1.0 + dense.dx[k].amax()));
            }
        }
    }
}

#[test]
fn costate_relation_matches_dense_multipliers() {
    // xi_{k+1} = Vx_{k+1} + Vxx_{k+1} dx_{k+1} against multipliers of the
    // dense KKT solve, on 20 random problems (nullspace path).
    let mut rng = StdRng::seed_from_u64(2002);
    for _ in 0..20 {
        let dims = rand_dims(&mut rng, 6, 5, 3, 10);
        let (problem, traj) = rand_lq_problem(&mut rng, &dims);
        let dense = dense_kkt_solve(&problem, &traj);
        let data = compute_node_data(
            &problem,
            &traj,
            Factorization::Nullspace,
            BasisMethod::LuFullPivot,
            false,
        )
        .unwrap();
        let dir = backward_pass(&data, Factorization::Nullspace, 0.0).unwrap();
        for k in 0..problem.horizon() {
            let v = &dir.values[k + 1];
            let predicted = &v.vx + &v.vxx * &dense.dx[k + 1];
            let err = (&predicted - &dense.xi[k + 1]).amax();
            assert!(
                err <= 1e-8 * (1.0 + dense.xi[k + 1].amax()),
                "costate mismatch at node {k}: {err}"
            );
        }
        // Initial-condition multiplier obeys the same relation at node 0.
        let v0 = &dir.values[0];
        let predicted = &v0.vx + &v0.vxx * &dense.dx[0];
        assert!((&predicted - &dense.xi[0]).amax() <= 1e-8 * (1.0 + dense.xi[0].amax()));
    }
}

#[test]
fn expected_improvement_equals_dense_quadratic_expansion() {
    let mut rng = StdRng::seed_from_u64(3003);
    for _ in 0..25 {
        let dims = rand_dims(&mut rng, 5, 4, 2, 9);
        let (problem, traj) = rand_lq_problem(&mut rng, &dims);
        let data = compute_node_data(
            &problem,
            &traj,
            Factorization::Nullspace,
            BasisMethod::QrColPivot,
            false,
        )
        .unwrap();
        let dir = backward_pass(&data, Factorization::Nullspace, 0.0).unwrap();
        let cost0 = multishoot::solver::evaluate_candidate(&problem, traj.clone()).cost;
        for alpha in [1.0, 0.5, 0.25, 0.125] {
            let cand = forward_rollout(&problem, &traj, &data, &dir, alpha, true).unwrap();
            let dx: Vec<_> = (0..=problem.horizon())
                .map(|k| {
                    difference(&problem.manifold, &cand.trajectory.states[k], &traj.states[k])
                        .unwrap()
                })
                .collect();
            let du: Vec<_> = (0..problem.horizon())
                .map(|k| &cand.trajectory.controls[k] - &traj.controls[k])
                .collect();
            let quad = dense_cost_change(&problem, &traj, &dx, &du);
            let predicted = dir.expected_improvement(alpha);
            assert!(
                rel_err(predicted, quad) < 1e-9,
                "alpha {alpha}: predicted {predicted} vs dense {quad}"
            );
            // On an LQ problem the prediction is the actual change.
            let actual = cand.cost - cost0;
            assert!(rel_err(predicted, actual) < 1e-9, "alpha {alpha}: {predicted} vs {actual}");
        }
    }
}

#[test]
fn lq_problems_converge_in_one_iteration() {
    let mut rng = StdRng::seed_from_u64(4004);
    for fac in [Factorization::Nullspace, Factorization::Schur] {
        for _ in 0..10 {
            // Strict nh < nu: with every control pinned by constraints the
            // fp64 rounding of the restored controls re-enters h̄ through
            // κ(h_u) and the 1e-12 bar is below the double-precision floor.
            // Inverse-dynamics nodes always leave control freedom.
            let mut dims = rand_dims(&mut rng, 6, 4, 3, 15);
            dims.nh = dims.nh.min(dims.nu.saturating_sub(1));
            let (problem, traj) = rand_lq_problem_scaled(&mut rng, &dims, 0.3);
            let settings = SolverSettings { factorization: fac, ..Default::default() };
            let sol = solve(&problem, &traj, &settings).unwrap();
            assert!(sol.converged, "{fac:?} did not converge");
            assert_eq!(sol.state.iterations.len(), 1, "{fac:?} took more than one iteration");
            assert_eq!(sol.state.iterations[0].alpha, 1.0);
            assert!(
                sol.stopping_metric < 1e-12,
                "metric {} (f_l1 {} h_l1 {} dims nx={} nu={} nh={} N={})",
                sol.stopping_metric,
                sol.f_l1,
                sol.h_l1,
                dims.nx,
                dims.nu,
                dims.nh,
                dims.horizon
            );
        }
    }
}

#[test]
fn kkt_certificate_holds_at_the_solution() {
    let mut rng = StdRng::seed_from_u64(5005);
    for fac in [Factorization::Nullspace, Factorization::Schur] {
        for _ in 0..10 {
            let dims = rand_dims(&mut rng, 5, 4, 2, 10);
            let (problem, traj) = rand_lq_problem(&mut rng, &dims);
            let settings = SolverSettings { factorization: fac, ..Default::default() };
            let sol = solve(&problem, &traj, &settings).unwrap();
            assert!(sol.converged);
            let res = kkt_residual(&problem, &sol).unwrap();
            assert!(
                res.satisfied(1e-6),
                "{fac:?}: KKT residual {} vs grad {}",
                res.residual_inf,
                res.grad_inf
            );
        }
    }
}

#[test]
fn factorization_equivalence_of_value_models() {
    let mut rng = StdRng::seed_from_u64(6006);
    for _ in 0..15 {
        let dims = rand_dims(&mut rng, 6, 5, 3, 10);
        let (problem, traj) = rand_lq_problem(&mut rng, &dims);
        let dn = compute_node_data(
            &problem,
            &traj,
            Factorization::Nullspace,
            BasisMethod::LuFullPivot,
            false,
        )
        .unwrap();
        let ds = compute_node_data(
            &problem,
            &traj,
            Factorization::Schur,
            BasisMethod::LuFullPivot,
            false,
        )
        .unwrap();
        let dirn = backward_pass(&dn, Factorization::Nullspace, 0.0).unwrap();
        let dirs = backward_pass(&ds, Factorization::Schur, 0.0).unwrap();
        for k in 0..problem.horizon() {
            let pn = &dirn.policies[k];
            let ps = &dirs.policies[k];
            assert!((&pn.pi - &ps.pi).amax() <= 1e-8 * (1.0 + ps.pi.amax()));
            assert!((&pn.gain - &ps.gain).amax() <= 1e-8 * (1.0 + ps.gain.amax()));
            let vn = &dirn.values[k];
            let vs = &dirs.values[k];
            assert!((&vn.vx - &vs.vx).amax() <= 1e-8 * (1.0 + vs.vx.amax()));
            assert!((&vn.vxx - &vs.vxx).amax() <= 1e-8 * (1.0 + vs.vxx.amax()));
        }
    }
}

#[test]
fn backward_pass_decomposition_counts() {
    // Nullspace: one SPD decomposition per node of dimension nz; Schur:
    // dimensions nu then nh per node.
    let mut rng = StdRng::seed_from_u64(7007);
    let dims = common::LqDims { nx: 5, nu: 4, nh: 2, horizon: 6 };
    let (problem, traj) = rand_lq_problem(&mut rng, &dims);
    let data = compute_node_data(
        &problem,
        &traj,
        Factorization::Nullspace,
        BasisMethod::LuFullPivot,
        false,
    )
    .unwrap();
    let dir = backward_pass(&data, Factorization::Nullspace, 0.0).unwrap();
    assert_eq!(dir.stats.spd_dims, vec![2; 6], "nz = nu - nh = 2 per node");

    let data = compute_node_data(
        &problem,
        &traj,
        Factorization::Schur,
        BasisMethod::LuFullPivot,
        false,
    )
    .unwrap();
    let dir = backward_pass(&data, Factorization::Schur, 0.0).unwrap();
    let expect: Vec<usize> = (0..6).flat_map(|_| [4, 2]).collect();
    assert_eq!(dir.stats.spd_dims, expect);
}

#[test]
fn gap_contraction_is_exact_on_linear_models() {
    let mut rng = StdRng::seed_from_u64(8008);
    let dims = common::LqDims { nx: 3, nu: 2, nh: 1, horizon: 8 };
    let (problem, traj) = rand_lq_problem(&mut rng, &dims);
    let data = compute_node_data(
        &problem,
        &traj,
        Factorization::Nullspace,
        BasisMethod::LuFullPivot,
        false,
    )
    .unwrap();
    let dir = backward_pass(&data, Factorization::Nullspace, 0.0).unwrap();
    for alpha in [1.0, 0.5, 0.25] {
        let cand = forward_rollout(&problem, &traj, &data, &dir, alpha, true).unwrap();
        for k in 0..problem.horizon() {
            let model = &problem.nodes[k];
            let gap = difference(
                &problem.manifold,
                &model.dynamics(&cand.trajectory.states[k], &cand.trajectory.controls[k]),
                &cand.trajectory.states[k + 1],
            )
            .unwrap();
            let expect = (1.0 - alpha) * &data.nodes[k].f_gap;
            assert!((&gap - &expect).amax() < 1e-12, "alpha {alpha} node {k}");
        }
        if alpha == 1.0 {
            assert!(cand.max_gap_inf <= 1e-12, "full step must close all gaps");
        }
    }
}

#[test]
fn merit_penalty_never_decreases_within_a_solve() {
    let mut rng = StdRng::seed_from_u64(9009);
    let dims = common::LqDims { nx: 4, nu: 3, nh: 2, horizon: 10 };
    let (problem, traj) = rand_lq_problem(&mut rng, &dims);
    let sol = solve(&problem, &traj, &SolverSettings::default()).unwrap();
    let mut prev = 0.0;
    for rec in &sol.state.iterations {
        assert!(rec.nu >= prev, "nu decreased: {} -> {}", prev, rec.nu);
        prev = rec.nu;
    }
}

#[test]
fn unconstrained_problems_reduce_to_plain_riccati() {
    // nh = 0 at every node: the policy must equal the classical LQR gains
    // computed by an explicit Riccati recursion.
    use nalgebra::{DMatrix, DVector};
    let mut rng = StdRng::seed_from_u64(1111);
    let dims = common::LqDims { nx: 4, nu: 2, nh: 0, horizon: 7 };
    let (problem, traj) = rand_lq_problem(&mut rng, &dims);
    // Feasible rollout so all gaps vanish and the comparison is pure LQR.
    let mut states = vec![problem.x0.clone()];
    for k in 0..problem.horizon() {
        states.push(problem.nodes[k].dynamics(&states[k], &traj.controls[k]));
    }
    let traj = multishoot::Trajectory::new(states, traj.controls.clone());

    let data = compute_node_data(
        &problem,
        &traj,
        Factorization::Nullspace,
        BasisMethod::LuFullPivot,
        false,
    )
    .unwrap();
    let dir = backward_pass(&data, Factorization::Nullspace, 0.0).unwrap();

    // Independent Riccati recursion on the same linearization.
    let n = problem.horizon();
    let mut vxx: DMatrix<f64> = data.terminal_lxx.clone();
    let mut vx: DVector<f64> = data.terminal_lx.clone();
    for k in (0..n).rev() {
        let d = &data.nodes[k];
        let qx = &d.lx + d.fx.transpose() * &vx;
        let qu = &d.lu + d.fu.transpose() * &vx;
        let qxx = &d.lxx + d.fx.transpose() * &vxx * &d.fx;
        let qux = d.lxu.transpose() + d.fu.transpose() * &vxx * &d.fx;
        let quu = &d.luu + d.fu.transpose() * &vxx * &d.fu;
        let quu_inv = quu.clone().try_inverse().unwrap();
        let kff = &quu_inv * &qu;
        let kfb = &quu_inv * &qux;
        assert!((&dir.policies[k].pi - &kff).amax() < 1e-10);
        assert!((&dir.policies[k].gain - &kfb).amax() < 1e-10);
        vx = &qx - qux.transpose() * &kff;
        vxx = &qxx - qux.transpose() * &kfb;
        vxx = 0.5 * (&vxx + vxx.transpose());
    }
}
