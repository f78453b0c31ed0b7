//! Shared test oracles: random equality-constrained LQ problems, a dense
//! solve of the full trajectory KKT system, and the dense quadratic
//! expansion of the cost change along a direction. Everything here is
//! independent of the solver's Riccati path.

use multishoot::lq::{lq_problem_from_nodes, LqNode, LqTerminal};
use multishoot::manifold::State;
use multishoot::model::{linearize_node, Problem, Trajectory};
use nalgebra::{DMatrix, DVector};
use rand::rngs::StdRng;
use rand::Rng;
use std::ops::AddAssign;

pub struct LqDims {
    pub nx: usize,
    pub nu: usize,
    pub nh: usize,
    pub horizon: usize,
}

pub fn rand_dims(rng: &mut StdRng, max_nx: usize, max_nu: usize, max_nh: usize, max_n: usize) -> LqDims {
    let nx = rng.gen_range(2..=max_nx);
    let nu = rng.gen_range(1..=max_nu);
    let nh = rng.gen_range(0..=max_nh.min(nu));
    let horizon = rng.gen_range(1..=max_n);
    LqDims { nx, nu, nh, horizon }
}

fn spd(rng: &mut StdRng, n: usize, scale: f64) -> DMatrix<f64> {
    let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    &m * m.transpose() * scale + DMatrix::identity(n, n)
}

/// Random equality-constrained LQ problem with a random (infeasible)
/// initial trajectory. Constraint Jacobians are regenerated until full row
/// rank with a healthy margin.
pub fn rand_lq_problem(rng: &mut StdRng, dims: &LqDims) -> (Problem, Trajectory) {
    rand_lq_problem_scaled(rng, dims, 1.0)
}

/// Like `rand_lq_problem` but with offsets, gradients and the initial guess
/// scaled by `mag`. Smaller magnitudes keep the double-precision floor of
/// the stopping metric well below 1e-12 after one exact Newton step.
pub fn rand_lq_problem_scaled(rng: &mut StdRng, dims: &LqDims, mag: f64) -> (Problem, Trajectory) {
    let LqDims { nx, nu, nh, horizon } = *dims;
    let mut nodes = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        // Near-unit spectral radius, as dt-discretized dynamics have.
        let a = DMatrix::from_fn(nx, nx, |_, _| rng.gen_range(-0.15..0.15))
            + DMatrix::identity(nx, nx);
        let b = DMatrix::from_fn(nx, nu, |_, _| rng.gen_range(-0.8..0.8));
        let c = DVector::from_fn(nx, |_, _| rng.gen_range(-0.3..0.3) * mag);
        let mut node = LqNode::new(a, b, c).with_cost(
            spd(rng, nx, 0.3),
            DMatrix::from_fn(nx, nu, |_, _| rng.gen_range(-0.2..0.2)),
            spd(rng, nu, 0.3),
            DVector::from_fn(nx, |_, _| rng.gen_range(-1.0..1.0) * mag),
            DVector::from_fn(nu, |_, _| rng.gen_range(-1.0..1.0) * mag),
        );
        if nh > 0 {
            let d = loop {
                let d = DMatrix::from_fn(nh, nu, |_, _| rng.gen_range(-1.0..1.0));
                let smin = d.singular_values().iter().cloned().fold(f64::INFINITY, f64::min);
                if smin > 0.3 {
                    break d;
                }
            };
            node = node.with_constraint(
                DMatrix::from_fn(nh, nx, |_, _| rng.gen_range(-0.6..0.6)),
                d,
                DVector::from_fn(nh, |_, _| rng.gen_range(-0.3..0.3) * mag),
            );
        }
        nodes.push(node);
    }
    let terminal = LqTerminal::new(
        spd(rng, nx, 0.3),
        DVector::from_fn(nx, |_, _| rng.gen_range(-1.0..1.0) * mag),
    );
    let x0 = State::new(DVector::zeros(0), DVector::from_fn(nx, |_, _| rng.gen_range(-1.0..1.0) * mag));
    let problem = lq_problem_from_nodes(nodes, terminal, x0);

    let states = (0..=horizon)
        .map(|_| {
            State::new(DVector::zeros(0), DVector::from_fn(nx, |_, _| rng.gen_range(-1.0..1.0) * mag))
        })
        .collect();
    let controls = (0..horizon)
        .map(|_| DVector::from_fn(nu, |_, _| rng.gen_range(-1.0..1.0) * mag))
        .collect();
    (problem, Trajectory::new(states, controls))
}

/// Solution of the dense trajectory KKT system.
pub struct DenseKkt {
    pub dx: Vec<DVector<f64>>,
    pub du: Vec<DVector<f64>>,
    /// ξ₀..ξ_N: multipliers of the initial-condition and dynamics rows.
    pub xi: Vec<DVector<f64>>,
    /// γ per node.
    pub gamma: Vec<DVector<f64>>,
}

/// Assemble and solve the full KKT system of the linearized problem at the
/// given trajectory by direct dense LU.
pub fn dense_kkt_solve(problem: &Problem, trajectory: &Trajectory) -> DenseKkt {
    let n = problem.horizon();
    let nx = problem.manifold.nx_tangent();
    let data: Vec<_> = (0..n)
        .map(|k| {
            linearize_node(
                problem.nodes[k].as_ref(),
                k,
                &trajectory.states[k],
                &trajectory.states[k + 1],
                &trajectory.controls[k],
            )
            .unwrap()
        })
        .collect();
    let (tlx, tlxx) = problem.terminal.cost_expansion(&trajectory.states[n]);
    let init_gap =
        multishoot::manifold::difference(&problem.manifold, &problem.x0, &trajectory.states[0])
            .unwrap();

    // Variable layout: x blocks then u blocks.
    let x_off: Vec<usize> = (0..=n).map(|k| k * nx).collect();
    let nx_total = (n + 1) * nx;
    let mut u_off = Vec::with_capacity(n);
    let mut acc = nx_total;
    for d in &data {
        u_off.push(acc);
        acc += d.fu.ncols();
    }
    let nvar = acc;
    // Constraint layout: init row, then per node h and dynamics rows.
    let mut c_off_h = Vec::with_capacity(n);
    let mut c_off_f = Vec::with_capacity(n);
    let mut cacc = nx; // init row block
    for d in &data {
        c_off_h.push(cacc);
        cacc += d.hu.nrows();
        c_off_f.push(cacc);
        cacc += nx;
    }
    let ncon = cacc;
    let dim = nvar + ncon;

    let mut kkt = DMatrix::<f64>::zeros(dim, dim);
    let mut rhs = DVector::<f64>::zeros(dim);

    // Hessian blocks and gradient.
    for (k, d) in data.iter().enumerate() {
        let nu = d.fu.ncols();
        kkt.view_mut((x_off[k], x_off[k]), (nx, nx)).add_assign(&d.lxx);
        kkt.view_mut((x_off[k], u_off[k]), (nx, nu)).add_assign(&d.lxu);
        kkt.view_mut((u_off[k], x_off[k]), (nu, nx)).add_assign(&d.lxu.transpose());
        kkt.view_mut((u_off[k], u_off[k]), (nu, nu)).add_assign(&d.luu);
        rhs.rows_mut(x_off[k], nx).add_assign(&(-&d.lx));
        rhs.rows_mut(u_off[k], nu).add_assign(&(-&d.lu));
    }
    kkt.view_mut((x_off[n], x_off[n]), (nx, nx)).add_assign(&tlxx);
    rhs.rows_mut(x_off[n], nx).add_assign(&(-&tlx));

    // Constraint rows (and symmetric transposes).
    let put = |row: usize, col: usize, m: &DMatrix<f64>, kkt: &mut DMatrix<f64>| {
        let r = nvar + row;
        kkt.view_mut((r, col), (m.nrows(), m.ncols())).add_assign(m);
        kkt.view_mut((col, r), (m.ncols(), m.nrows())).add_assign(&m.transpose());
    };
    // init: -I dx0 = -init_gap
    let neg_i = -DMatrix::<f64>::identity(nx, nx);
    put(0, x_off[0], &neg_i, &mut kkt);
    rhs.rows_mut(nvar, nx).add_assign(&(-&init_gap));
    for (k, d) in data.iter().enumerate() {
        let nh = d.hu.nrows();
        if nh > 0 {
            put(c_off_h[k], x_off[k], &d.hx, &mut kkt);
            put(c_off_h[k], u_off[k], &d.hu, &mut kkt);
            rhs.rows_mut(nvar + c_off_h[k], nh).add_assign(&(-&d.h_gap));
        }
        put(c_off_f[k], x_off[k], &d.fx, &mut kkt);
        put(c_off_f[k], u_off[k], &d.fu, &mut kkt);
        put(c_off_f[k], x_off[k + 1], &neg_i, &mut kkt);
        rhs.rows_mut(nvar + c_off_f[k], nx).add_assign(&(-&d.f_gap));
    }

    let sol = kkt.lu().solve(&rhs).expect("dense KKT system is invertible");

    let dx = (0..=n).map(|k| sol.rows(x_off[k], nx).clone_owned()).collect();
    let du = (0..n).map(|k| sol.rows(u_off[k], data[k].fu.ncols()).clone_owned()).collect();
    let mut xi = Vec::with_capacity(n + 1);
    xi.push(sol.rows(nvar, nx).clone_owned());
    for k in 0..n {
        // xi_{k+1} multiplies the k-th dynamics row
        xi.push(sol.rows(nvar + c_off_f[k], nx).clone_owned());
    }
    let gamma = (0..n)
        .map(|k| sol.rows(nvar + c_off_h[k], data[k].hu.nrows()).clone_owned())
        .collect();
    DenseKkt { dx, du, xi, gamma }
}

/// Dense quadratic expansion of the total-cost change for a perturbation
/// (δx, δu) of the trajectory, evaluated from fresh node linearizations.
pub fn dense_cost_change(
    problem: &Problem,
    trajectory: &Trajectory,
    dx: &[DVector<f64>],
    du: &[DVector<f64>],
) -> f64 {
    let n = problem.horizon();
    let mut total = 0.0;
    for k in 0..n {
        let d = linearize_node(
            problem.nodes[k].as_ref(),
            k,
            &trajectory.states[k],
            &trajectory.states[k + 1],
            &trajectory.controls[k],
        )
        .unwrap();
        total += d.lx.dot(&dx[k])
            + d.lu.dot(&du[k])
            + 0.5 * dx[k].dot(&(&d.lxx * &dx[k]))
            + du[k].dot(&(d.lxu.transpose() * &dx[k]))
            + 0.5 * du[k].dot(&(&d.luu * &du[k]));
    }
    let (tlx, tlxx) = problem.terminal.cost_expansion(&trajectory.states[n]);
    total += tlx.dot(&dx[n]) + 0.5 * dx[n].dot(&(&tlxx * &dx[n]));
    total
}

