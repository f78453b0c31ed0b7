use multishoot::manifold::State;
use multishoot::mpc::map_policy_to_torque;
use multishoot::problems::{builtin_spec, ProblemBuilder, ProblemSpec};
use multishoot::rigid::contact_forward_dynamics;
use multishoot::solver::{solve, SolverSettings};
use nalgebra::DVector;

fn main() {
    // Stance-only monoped balance. Solve, then roll the plant under the
    // node-0 torque policy without replanning, from a perturbed state.
    let mut spec = ProblemSpec::parse(builtin_spec("monoped-hop").unwrap()).unwrap();
    spec.phase = vec![multishoot::problems::spec::PhaseSpec {
        nodes: 50,
        contacts: vec!["foot".into()],
        anchors: Default::default(),
        shifts: Default::default(),
    }];
    spec.mpc = None;
    let b = ProblemBuilder::new(spec).unwrap();
    let problem = b.problem();
    let x0 = b.init_state();
    let traj = b.quasi_static_trajectory(0, 50, &x0);
    let sol = solve(&problem, &traj, &SolverSettings::default()).unwrap();
    println!("stance solve: conv={} iters={}", sol.converged, sol.state.iterations.len());

    let nv = 5;
    let contacts = b.contact_set_at(0);
    let u = &sol.trajectory.controls[0];
    let x_ref = &sol.trajectory.states[0];
    let g = &sol.policies[0].gain;
    for fb in [1.0, 0.0] {
        let tp = map_policy_to_torque(
            &b.model, &b.actuation, &contacts,
            &x_ref.q, &x_ref.v,
            &u.rows(0, nv).clone_owned(), &u.rows(nv, 2).clone_owned(),
            &(fb * g.rows(0, nv).clone_owned()), &(fb * g.rows(nv, 2).clone_owned()),
        ).unwrap();
        // Perturb pitch and pitch rate.
        let mut plant = x0.clone();
        plant.q[2] += 0.05;
        plant.v[2] += 0.3;
        let dt = 0.002;
        let mut worst = 0.0f64;
        for i in 0..250 {
            let tau = tp.torque(&b.manifold, &plant);
            let force = DVector::from_vec(b.actuation.map::<f64>(
                plant.q.as_slice(), plant.v.as_slice(), tau.as_slice()));
            let fd = contact_forward_dynamics(&b.model, &contacts, &plant.q, &plant.v, &force).unwrap();
            let (q, v) = multishoot::manifold::symplectic_euler(&b.manifold, &plant.q, &plant.v, &fd.vdot, dt).unwrap();
            plant = State::new(q, v);
            worst = worst.max(plant.q[2].abs());
            if i % 50 == 0 {
                println!("  fb={fb} t={:.3} pitch={:8.4} z={:7.4} vpitch={:8.4} |tau|={:6.2}", 
                    i as f64 * dt, plant.q[2], plant.q[1], plant.v[2], tau.amax());
            }
        }
        println!("fb={fb}: worst |pitch| {:.4}, final pitch {:.4}", worst, plant.q[2]);
    }
}
