use multishoot::mpc::{closed_loop_simulate, MpcConfig};
use multishoot::problems::{builtin_spec, ProblemBuilder, ProblemSpec};
use multishoot::solver::SolverSettings;

fn main() {
    let spec = ProblemSpec::parse(builtin_spec("monoped-hop").unwrap()).unwrap();
    let b = ProblemBuilder::new(spec).unwrap();
    let mpc_spec = b.spec.mpc.as_ref().unwrap();
    let t_d = mpc_spec.disturbance[0].t;
    for fb in [true, false] {
        let mut cfg = MpcConfig::from_spec(mpc_spec);
        cfg.feedback = fb;
        let trace = closed_loop_simulate(&b, &cfg, &SolverSettings::default()).unwrap();
        let maxp_post = trace.rows.iter().filter(|r| r.t >= t_d)
            .map(|r| r.plant_q[2].abs()).fold(0.0f64, f64::max);
        // spike-and-decay of |h|_1
        let pre: Vec<f64> = trace.rows.iter()
            .filter(|r| r.t >= t_d - 0.5 && r.t < t_d).map(|r| r.h_l1).collect();
        let baseline = pre.iter().cloned().fold(0.0f64, f64::max);
        let spike = trace.rows.iter().filter(|r| r.t >= t_d && r.t <= t_d + 0.1)
            .map(|r| r.h_l1).fold(0.0f64, f64::max);
        let late = trace.rows.iter().filter(|r| r.t >= t_d + 0.8 && r.t <= t_d + 1.0)
            .map(|r| r.h_l1).fold(0.0f64, f64::max);
        println!(
            "fb={fb}: completed={} post-dist max|pitch|={:.4}  h: pre-max={:.3e} spike={:.3e} late={:.3e}",
            trace.completed, maxp_post, baseline, spike, late
        );
    }
}
