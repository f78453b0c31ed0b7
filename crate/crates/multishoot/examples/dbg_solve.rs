use multishoot::problems::{build_problem, builtin_spec, ProblemSpec};
use multishoot::solver::{solve, SolverSettings};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let names: Vec<&str> = if args.len() > 1 {
        args[1..].iter().map(|s| s.as_str()).collect()
    } else {
        vec!["pend", "birotor", "monoped-hop", "biped-walk"]
    };
    for name in names {
        let spec = ProblemSpec::parse(builtin_spec(name).unwrap()).unwrap();
        let (_b, problem, traj) = build_problem(spec).unwrap();
        let settings = SolverSettings { max_iters: 300, ..Default::default() };
        let t0 = std::time::Instant::now();
        match solve(&problem, &traj, &settings) {
            Ok(sol) => {
                println!(
                    "{name}: converged={} iters={} metric={:.3e} cost={:.4} h_l1={:.3e} f_l1={:.3e} [{:.2}s]",
                    sol.converged,
                    sol.state.iterations.len(),
                    sol.stopping_metric,
                    sol.cost,
                    sol.h_l1,
                    sol.f_l1,
                    t0.elapsed().as_secs_f64()
                );
                for r in sol.state.iterations.iter().take(40) {
                    println!(
                        "  it {:3} cost {:12.4} f {:9.2e} h {:9.2e} a {:5.3} mu {:8.1e} nu {:8.1e} m {:9.2e}",
                        r.iter, r.cost, r.f_l1, r.h_l1, r.alpha, r.mu, r.nu, r.metric
                    );
                }
            }
            Err(e) => println!("{name}: ERROR {e}"),
        }
    }
}
