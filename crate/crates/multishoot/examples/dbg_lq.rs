use multishoot::solver::*;
use multishoot::*;
use multishoot::lq::*;
use nalgebra::{DMatrix, DVector};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn main() {
    let mut rng = StdRng::seed_from_u64(4004);
    // replicate the failing case shape
    for trial in 0..10 {
        let nx = rng.gen_range(2..=6usize);
        let nu = rng.gen_range(1..=4usize);
        let nh = rng.gen_range(0..=3usize.min(nu));
        let n = rng.gen_range(1..=15usize);
        let mut nodes = Vec::new();
        for _ in 0..n {
            let a = DMatrix::from_fn(nx, nx, |_, _| rng.gen_range(-0.15..0.15)) + DMatrix::identity(nx, nx);
            let b = DMatrix::from_fn(nx, nu, |_, _| rng.gen_range(-0.8..0.8));
            let c = DVector::from_fn(nx, |_, _| rng.gen_range(-0.3..0.3));
            let m1 = DMatrix::from_fn(nx, nx, |_, _| rng.gen_range(-1.0..1.0));
            let m2 = DMatrix::from_fn(nu, nu, |_, _| rng.gen_range(-1.0..1.0));
            let mut node = LqNode::new(a, b, c).with_cost(
                &m1 * m1.transpose() * 0.3 + DMatrix::identity(nx, nx),
                DMatrix::from_fn(nx, nu, |_, _| rng.gen_range(-0.2..0.2)),
                &m2 * m2.transpose() * 0.3 + DMatrix::identity(nu, nu),
                DVector::from_fn(nx, |_, _| rng.gen_range(-1.0..1.0)),
                DVector::from_fn(nu, |_, _| rng.gen_range(-1.0..1.0)),
            );
            if nh > 0 {
                let d = loop {
                    let d = DMatrix::from_fn(nh, nu, |_, _| rng.gen_range(-1.0..1.0));
                    if d.singular_values().iter().cloned().fold(f64::INFINITY, f64::min) > 0.3 { break d; }
                };
                node = node.with_constraint(
                    DMatrix::from_fn(nh, nx, |_, _| rng.gen_range(-0.6..0.6)),
                    d,
                    DVector::from_fn(nh, |_, _| rng.gen_range(-0.3..0.3)),
                );
            }
            nodes.push(node);
        }
        let m3 = DMatrix::from_fn(nx, nx, |_, _| rng.gen_range(-1.0..1.0));
        let terminal = LqTerminal::new(&m3 * m3.transpose() * 0.3 + DMatrix::identity(nx, nx), DVector::from_fn(nx, |_, _| rng.gen_range(-1.0..1.0)));
        let x0 = State::new(DVector::zeros(0), DVector::from_fn(nx, |_, _| rng.gen_range(-1.0..1.0)));
        let problem = lq_problem_from_nodes(nodes, terminal, x0);
        let states: Vec<State> = (0..=n).map(|_| State::new(DVector::zeros(0), DVector::from_fn(nx, |_, _| rng.gen_range(-1.0..1.0)))).collect();
        let controls: Vec<DVector<f64>> = (0..n).map(|_| DVector::from_fn(nu, |_, _| rng.gen_range(-1.0..1.0))).collect();
        let traj = Trajectory::new(states, controls);

        // manual 2 iterations with introspection
        let mut inc = evaluate_candidate(&problem, traj.clone());
        let mut mu = 1e-9;
        for it in 0..3 {
            let data = compute_node_data(&problem, &inc.trajectory, Factorization::Nullspace, BasisMethod::LuFullPivot, false).unwrap();
            let dir = backward_pass(&data, Factorization::Nullspace, mu).unwrap();
            let dl1 = dir.expected_improvement(1.0);
            let eps = inc.total_eps();
            println!("trial {trial} nx={nx} nu={nu} nh={nh} N={n} iter {it}: eps={eps:.3e} dl1={dl1:.3e} d1={:.3e} d2={:.3e}", dir.d1, dir.d2);
            if stopping_metric(eps, dl1) < 1e-9 { break; }
            let cand = forward_rollout(&problem, &inc.trajectory, &data, &dir, 1.0, true).unwrap();
            inc = cand;
            mu /= 10.0;
        }
        println!();
    }
}
