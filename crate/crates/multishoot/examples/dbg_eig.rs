use multishoot::mpc::map_policy_to_torque;
use multishoot::problems::{builtin_spec, ProblemBuilder, ProblemSpec, FormulationKind};
use multishoot::solver::{solve, SolverSettings};
use multishoot::rigid::contact_forward_dynamics;
use nalgebra::{DMatrix, DVector};

fn main() {
    // Settled stance state from the cyclic gait; solve one window to
    // convergence, then compare closed-loop spectral radii:
    //  (a) solver-internal: fx - fu*Pi per node
    //  (b) torque-mapped on the constrained plant.
    let spec = ProblemSpec::parse(builtin_spec("monoped-hop").unwrap()).unwrap();
    let b = ProblemBuilder::new(spec).unwrap();
    let start = 132; // settled st2 phase (t = 2.64)
    let x0 = {
        let q = DVector::from_vec(vec![-0.011, 0.660, 0.004, 0.522, -0.978]);
        let v = DVector::from_vec(vec![0.0, -0.05, -0.40, 0.7, -0.4]);
        multishoot::manifold::State::new(q, v)
    };
    let problem = b.window(start, 50, x0.clone());
    let guess = b.quasi_static_trajectory(start, 50, &x0);
    let sol = solve(&problem, &guess, &SolverSettings { max_iters: 300, ..Default::default() }).unwrap();
    println!("window solve conv={} iters={}", sol.converged, sol.state.iterations.len());

    let nv = 5;
    let k = 0usize;
    let node = &problem.nodes[k];
    let xs = &sol.trajectory.states[k];
    let us = &sol.trajectory.controls[k];
    let (fx, fu) = node.dynamics_jacobians(xs, us);
    let gain = &sol.policies[k].gain;
    let a_model = &fx - &fu * gain;
    let eig_model = a_model.complex_eigenvalues().iter().map(|c| c.norm()).fold(0.0f64, f64::max);
    println!("model-side closed-loop spectral radius (node 0, dt step): {eig_model:.4}");

    // Torque-mapped on the plant: dx' = A dx + B dtau, tau = -Pi_tau dx
    let contacts = b.contact_set_at(start + k);
    let tp = map_policy_to_torque(
        &b.model, &b.actuation, &contacts, &xs.q, &xs.v,
        &us.rows(0, nv).clone_owned(), &us.rows(nv, 2).clone_owned(),
        &gain.rows(0, nv).clone_owned(), &gain.rows(nv, 2).clone_owned(),
    ).unwrap();
    // plant linearization at (q*, v*) under tau*
    let force = DVector::from_vec(b.actuation.map::<f64>(xs.q.as_slice(), xs.v.as_slice(), tp.pi_tau.as_slice()));
    let fd = contact_forward_dynamics(&b.model, &contacts, &xs.q, &xs.v, &force).unwrap();
    let da_dtau = b.actuation.d_tau(&xs.q);
    let dt = 0.02;
    // x = [q; v]; vdot = vdot(q,v) + dvdot_df * dA/dtau * tau(x)
    let bmat = &fd.dvdot_df * &da_dtau; // nv x ntau
    let mut a_big = DMatrix::zeros(2 * nv, 2 * nv);
    // symplectic euler linearization: v' = v + dt(vdot_q dq + vdot_v dv + B dtau)
    let vq = &fd.dvdot_dq - &bmat * tp.gain_tau.columns(0, nv);
    let vv = &fd.dvdot_dv - &bmat * tp.gain_tau.columns(nv, nv);
    for i in 0..nv {
        for j in 0..nv {
            a_big[(nv + i, j)] = dt * vq[(i, j)];
            a_big[(nv + i, nv + j)] = dt * vv[(i, j)] + if i == j { 1.0 } else { 0.0 };
        }
    }
    for i in 0..nv {
        for j in 0..nv {
            // q' = q + dt v'
            a_big[(i, j)] = if i == j { 1.0 } else { 0.0 } + dt * a_big[(nv + i, j)];
            a_big[(i, nv + j)] = dt * a_big[(nv + i, nv + j)];
        }
    }
    let eig_plant = a_big.complex_eigenvalues().iter().map(|c| c.norm()).fold(0.0f64, f64::max);
    println!("plant-side torque-mapped closed-loop spectral radius: {eig_plant:.4}");
    // and without feedback
    let mut a_open = DMatrix::zeros(2 * nv, 2 * nv);
    for i in 0..nv {
        for j in 0..nv {
            a_open[(nv + i, j)] = dt * fd.dvdot_dq[(i, j)];
            a_open[(nv + i, nv + j)] = dt * fd.dvdot_dv[(i, j)] + if i == j { 1.0 } else { 0.0 };
            a_open[(i, j)] = if i == j { 1.0 } else { 0.0 } + dt * a_open[(nv + i, j)];
            a_open[(i, nv + j)] = dt * a_open[(nv + i, nv + j)];
        }
    }
    let eig_open = a_open.complex_eigenvalues().iter().map(|c| c.norm()).fold(0.0f64, f64::max);
    println!("plant-side open-loop spectral radius: {eig_open:.4}");
    println!("Pi_tau =\n{:.2}", tp.gain_tau);
}
