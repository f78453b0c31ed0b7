use multishoot::mpc::*;
use multishoot::problems::{builtin_spec, FormulationKind, ProblemBuilder, ProblemSpec};
use multishoot::solver::{solve, SolverSettings};

fn main() {
    let spec = ProblemSpec::parse(builtin_spec("monoped-hop").unwrap()).unwrap();
    let b = ProblemBuilder::new(spec).unwrap();
    // Solve the full problem to convergence, then inspect mapped torque
    // gains per node.
    let problem = b.problem();
    let x0 = b.init_state();
    let traj = b.quasi_static_trajectory(0, b.total_nodes(), &x0);
    let settings = SolverSettings { max_iters: 300, ..Default::default() };
    let sol = solve(&problem, &traj, &settings).unwrap();
    println!("converged={} iters={}", sol.converged, sol.state.iterations.len());
    let nv = b.model.nv();
    for k in (0..b.total_nodes()).step_by(5) {
        if b.is_impulse(k) {
            println!("node {k}: impulse");
            continue;
        }
        let contacts = b.contact_set_at(k);
        let nf = contacts.nf();
        let u = &sol.trajectory.controls[k];
        let x = &sol.trajectory.states[k];
        let g = &sol.policies[k].gain;
        let tp = map_policy_to_torque(
            &b.model, &b.actuation, &contacts,
            &x.q, &x.v,
            &u.rows(0, nv).clone_owned(),
            &u.rows(nv, nf).clone_owned(),
            &g.rows(0, nv).clone_owned(),
            &g.rows(nv, nf).clone_owned(),
        ).unwrap();
        println!(
            "node {k:2} ({}): |pi_tau|={:8.2} |Pi_tau|inf={:10.2} |Pi_a|inf={:10.2}",
            if nf > 0 { "stance" } else { "flight" },
            tp.pi_tau.amax(), tp.gain_tau.amax(), g.amax()
        );
    }
}
