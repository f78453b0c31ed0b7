use multishoot::mpc::{closed_loop_simulate, MpcConfig};
use multishoot::problems::{builtin_spec, ProblemBuilder, ProblemSpec};
use multishoot::solver::SolverSettings;
use nalgebra::DVector;

fn main() {
    let spec = ProblemSpec::parse(builtin_spec("monoped-hop").unwrap()).unwrap();
    let b = ProblemBuilder::new(spec).unwrap();
    for (mag, t_d) in [
        (0.2, 0.65), (0.2, 0.85), (0.2, 1.15),
        (0.4, 0.65), (0.4, 0.85), (0.4, 1.15),
        (0.6, 0.85),
    ] {
        let mut line = format!("dv={mag:.1} t={t_d:.2}:");
        for fb in [true, false] {
            let mut cfg = MpcConfig::from_spec(b.spec.mpc.as_ref().unwrap());
            cfg.duration = 3.0;
            cfg.iters = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(1);
            cfg.feedback = fb;
            cfg.disturbances =
                vec![(t_d, DVector::from_vec(vec![0.5 * mag, 0.0, mag, 0.0, 0.0]))];
            match closed_loop_simulate(&b, &cfg, &SolverSettings::default()) {
                Ok(trace) => {
                    let maxp = trace.rows.iter().filter(|r| r.t >= t_d)
                        .map(|r| r.plant_q[2].abs()).fold(0.0f64, f64::max);
                    line += &format!("  fb={fb}: {} max|p|={maxp:.3}",
                        if trace.completed { "ok " } else { "DIV" });
                }
                Err(e) => line += &format!("  fb={fb}: ERR {e}"),
            }
        }
        println!("{line}");
    }
}
