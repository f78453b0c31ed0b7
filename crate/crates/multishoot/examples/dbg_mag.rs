use multishoot::mpc::{closed_loop_simulate, MpcConfig};
use multishoot::problems::{builtin_spec, ProblemBuilder, ProblemSpec};
use multishoot::solver::SolverSettings;
use nalgebra::DVector;

fn main() {
    let spec = ProblemSpec::parse(builtin_spec("monoped-hop").unwrap()).unwrap();
    let b = ProblemBuilder::new(spec).unwrap();
    for (vx, vp) in [(0.05, 0.10), (0.08, 0.15), (0.05, 0.20), (0.10, 0.15), (0.12, 0.22)] {
        let mut line = format!("dv=({vx:.2},{vp:.2}):");
        for fb in [true, false] {
            let mut cfg = MpcConfig::from_spec(b.spec.mpc.as_ref().unwrap());
            cfg.feedback = fb;
            cfg.disturbances = vec![(2.65, DVector::from_vec(vec![vx, 0.0, vp, 0.0, 0.0]))];
            match closed_loop_simulate(&b, &cfg, &SolverSettings::default()) {
                Ok(trace) => {
                    let maxp = trace.rows.iter().filter(|r| r.t >= 2.65)
                        .map(|r| r.plant_q[2].abs()).fold(0.0f64, f64::max);
                    line += &format!("  fb={fb}:{} max|p|={maxp:.3}",
                        if trace.completed { "ok " } else { "DIV" });
                }
                Err(e) => line += &format!("  fb={fb}: ERR {e}"),
            }
        }
        println!("{line}");
    }
}
