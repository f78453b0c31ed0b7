use multishoot::problems::{builtin_spec, FormulationKind, ProblemBuilder, ProblemSpec};
use multishoot::solver::*;

fn main() {
    let spec = ProblemSpec::parse(builtin_spec("birotor").unwrap()).unwrap();
    let b = ProblemBuilder::new(spec).unwrap();
    let x0 = b.init_state();
    let problem = b.problem_as(FormulationKind::Redundant);
    let traj = b.quasi_static_trajectory_as(0, b.total_nodes(), &x0, FormulationKind::Redundant);
    let mut settings = SolverSettings { max_iters: 25, ..Default::default() };
    settings.mu_max = 1e20;
    match solve(&problem, &traj, &settings) {
        Ok(s) => {
            for r in &s.state.iterations {
                println!(
                    "it {:3} cost {:10.4} f {:9.2e} h {:9.2e} a {:6.4} mu {:8.1e} nu {:8.1e} m {:9.2e}",
                    r.iter, r.cost, r.f_l1, r.h_l1, r.alpha, r.mu, r.nu, r.metric
                );
            }
        }
        Err(e) => println!("ERROR {e}"),
    }
    // inspect node data at the initial point: is Quu-or-Qzz the problem?
    let data = compute_node_data(&problem, &traj, Factorization::Nullspace, BasisMethod::LuFullPivot, false).unwrap();
    let d0 = &data.nodes[0];
    println!("node0: nu={} nh={} hu=\n{:.4}", d0.fu.ncols(), d0.hu.nrows(), d0.hu);
    println!("luu diag: {:?}", (0..d0.luu.nrows()).map(|i| d0.luu[(i,i)]).collect::<Vec<_>>());
    match backward_pass(&data, Factorization::Nullspace, 1e-9) {
        Ok(dir) => println!("backward ok, d1={:.3e} d2={:.3e}", dir.d1, dir.d2),
        Err(e) => println!("backward failed at node {}", e.node),
    }
}
