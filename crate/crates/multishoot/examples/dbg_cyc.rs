use multishoot::mpc::{closed_loop_simulate, MpcConfig};
use multishoot::problems::{builtin_spec, ProblemBuilder, ProblemSpec};
use multishoot::solver::SolverSettings;

fn main() {
    let spec = ProblemSpec::parse(builtin_spec("monoped-hop").unwrap()).unwrap();
    let b = ProblemBuilder::new(spec).unwrap();
    let mut cfg = MpcConfig::from_spec(b.spec.mpc.as_ref().unwrap());
    cfg.duration = 3.0;
    cfg.disturbances.clear();
    let trace = closed_loop_simulate(&b, &cfg, &SolverSettings::default()).unwrap();
    println!("completed={}", trace.completed);
    let pre: Vec<(f64, f64)> = trace.rows.iter().filter(|r| r.t >= 2.15 && r.t < 2.65)
        .map(|r| (r.t, r.h_l1)).collect();
    let mx = pre.iter().cloned().fold((0.0, 0.0f64), |a, b| if b.1 > a.1 { b } else { a });
    println!("pre-window max h = {:.3e} at t = {:.2}", mx.1, mx.0);
    for r in trace.rows.iter() {
        let phase = r.t % 1.0;
        let ph = if phase < 0.3 { "st1" } else if phase < 0.5 { "fly" } else { "st2" };
        if (r.t * 50.0).round() as usize % 5 == 0 {
            println!(
                "t {:5.2} [{ph}] z={:6.3} pitch={:7.3} hip={:6.2} knee={:6.2} h={:9.2e} f={:9.2e} it={}",
                r.t, r.plant_q[1], r.plant_q[2], r.plant_q[3], r.plant_q[4], r.h_l1, r.f_l1, r.iterations
            );
        }
    }
}
