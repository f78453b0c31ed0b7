use multishoot::problems::{builtin_spec, FormulationKind, ProblemBuilder, ProblemSpec};
use multishoot::solver::{solve, Factorization, SolverSettings};

fn main() {
    for name in ["pend", "birotor", "monoped-hop", "biped-walk"] {
        let spec = ProblemSpec::parse(builtin_spec(name).unwrap()).unwrap();
        let b = ProblemBuilder::new(spec).unwrap();
        let x0 = b.init_state();
        for form in [FormulationKind::Condensed, FormulationKind::Redundant, FormulationKind::Forward] {
            for fac in [Factorization::Nullspace, Factorization::Schur] {
                let problem = b.problem_as(form);
                let traj = b.quasi_static_trajectory_as(0, b.total_nodes(), &x0, form);
                let settings = SolverSettings { max_iters: 300, factorization: fac, ..Default::default() };
                let t0 = std::time::Instant::now();
                match solve(&problem, &traj, &settings) {
                    Ok(s) => println!(
                        "{name:12} {form:?}/{fac:?}: conv={} iters={:3} metric={:.2e} cost={:.5} [{:.2}s]",
                        s.converged, s.state.iterations.len(), s.stopping_metric, s.cost,
                        t0.elapsed().as_secs_f64()
                    ),
                    Err(e) => println!("{name:12} {form:?}/{fac:?}: ERROR {e}"),
                }
                if form == FormulationKind::Forward { break; }
            }
        }
    }
}
