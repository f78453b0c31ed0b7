use multishoot::manifold::{difference, State};
use multishoot::mpc::{closed_loop_simulate, MpcConfig};
use multishoot::problems::{builtin_spec, ProblemBuilder, ProblemSpec};
use multishoot::solver::SolverSettings;
use nalgebra::DVector;

fn main() {
    let spec = ProblemSpec::parse(builtin_spec("monoped-hop").unwrap()).unwrap();
    let b = ProblemBuilder::new(spec).unwrap();
    let mut cfg = MpcConfig::from_spec(b.spec.mpc.as_ref().unwrap());
    cfg.duration = 4.3;
    cfg.feedback = true;
    cfg.disturbances = vec![(2.65, DVector::from_vec(vec![0.05, 0.0, 0.2, 0.0, 0.0]))];
    let trace = closed_loop_simulate(&b, &cfg, &SolverSettings::default()).unwrap();
    println!("completed={} failure={:?}", trace.completed, trace.failure);
    for r in trace.rows.iter() {
        if r.t >= 2.55 && r.t <= 4.25 && ((r.t * 50.0).round() as usize) % 2 == 0 {
            println!(
                "t {:5.2} q=({:7.3},{:6.3},{:7.3},{:6.3},{:6.3}) v_p={:7.3} tau=({:7.2},{:7.2}) h={:9.2e} it={}",
                r.t, r.plant_q[0], r.plant_q[1], r.plant_q[2], r.plant_q[3], r.plant_q[4],
                r.plant_v[2], r.tau[0], r.tau[1], r.h_l1, r.iterations
            );
        }
    }
    let _ = (difference, State::zeros);
}
