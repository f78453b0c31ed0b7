use multishoot::mpc::{closed_loop_simulate, MpcConfig};
use multishoot::problems::{builtin_spec, ProblemBuilder, ProblemSpec};
use multishoot::solver::SolverSettings;
use nalgebra::DVector;

fn main() {
    // Identical plan; disturb only the plant. Compare post-disturbance
    // attitude excursion with and without feedback gains.
    let spec = ProblemSpec::parse(builtin_spec("monoped-hop").unwrap()).unwrap();
    let b = ProblemBuilder::new(spec).unwrap();
    let t_dist: f64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(0.45);
    for fb in [true, false] {
        let mut cfg = MpcConfig::from_spec(b.spec.mpc.as_ref().unwrap());
        cfg.duration = 3.0;
        cfg.feedback = fb;
        cfg.disturbances = vec![(t_dist, DVector::from_vec(vec![0.4, 0.0, 0.6, 0.0, 0.0]))];
        match closed_loop_simulate(&b, &cfg, &SolverSettings::default()) {
            Ok(trace) => {
                let maxp = trace
                    .rows
                    .iter()
                    .filter(|r| r.t >= t_dist)
                    .map(|r| r.plant_q[2].abs())
                    .fold(0.0f64, f64::max);
                let end = trace.rows.last().unwrap();
                println!(
                    "feedback={fb}: completed={} post-dist max|pitch|={:.4} end pitch={:.4} end z={:.4}",
                    trace.completed, maxp, end.plant_q[2], end.plant_q[1]
                );
            }
            Err(e) => println!("feedback={fb}: ERROR {e}"),
        }
    }
}
