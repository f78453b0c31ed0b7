use multishoot::mpc::{closed_loop_simulate, MpcConfig};
use multishoot::problems::{builtin_spec, ProblemBuilder, ProblemSpec};
use multishoot::solver::SolverSettings;

fn main() {
    let spec = ProblemSpec::parse(builtin_spec("monoped-hop").unwrap()).unwrap();
    let b = ProblemBuilder::new(spec).unwrap();
    let mut cfg = MpcConfig::from_spec(b.spec.mpc.as_ref().unwrap());
    let arg = std::env::args().nth(1).unwrap_or_default();
    if arg == "nofb" {
        cfg.feedback = false;
    }
    if let Some(d) = std::env::args().nth(2) {
        cfg.duration = d.parse().unwrap();
    }
    let settings = SolverSettings::default();
    let t0 = std::time::Instant::now();
    match closed_loop_simulate(&b, &cfg, &settings) {
        Ok(trace) => {
            println!(
                "completed={} rows={} failure={:?} [{:.1}s wall]",
                trace.completed,
                trace.rows.len(),
                trace.failure,
                t0.elapsed().as_secs_f64()
            );
            let mut max_pitch = 0.0f64;
            let mut max_h = 0.0f64;
            for (i, r) in trace.rows.iter().enumerate() {
                max_pitch = max_pitch.max(r.plant_q[2].abs());
                max_h = max_h.max(r.h_l1);
                if i % 25 == 0 || (r.t - 2.3).abs() < 0.1 {
                    println!(
                        "t {:5.2} base ({:6.3},{:6.3},{:6.3}) v ({:6.2},{:6.2},{:6.2}) f {:9.2e} h {:9.2e} cost {:8.3}",
                        r.t, r.plant_q[0], r.plant_q[1], r.plant_q[2],
                        r.plant_v[0], r.plant_v[1], r.plant_v[2], r.f_l1, r.h_l1, r.cost
                    );
                }
            }
            println!("max |pitch| = {max_pitch:.4}, max h_l1 = {max_h:.3e}");
        }
        Err(e) => println!("ERROR {e}"),
    }
}
