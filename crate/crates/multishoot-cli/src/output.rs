//! Log serialization and the bench harness.

use std::path::Path;

use multishoot::mpc::TraceRow;
use multishoot::problems::{FormulationKind, ProblemBuilder};
use multishoot::solver::kkt::KktResidual;
use multishoot::solver::{solve, Factorization, IterationRecord, Solution, SolverSettings};
use multishoot::Trajectory;
use serde::Serialize;

pub fn write_iteration_log(
    dir: &Path,
    format: &str,
    log: &[IterationRecord],
) -> Result<(), String> {
    match format {
        "csv" => {
            let mut w = csv::Writer::from_path(dir.join("iterations.csv"))
                .map_err(|e| e.to_string())?;
            for rec in log {
                w.serialize(rec).map_err(|e| e.to_string())?;
            }
            w.flush().map_err(|e| e.to_string())
        }
        "json" => {
            let text = serde_json::to_string_pretty(log).map_err(|e| e.to_string())?;
            std::fs::write(dir.join("iterations.json"), text).map_err(|e| e.to_string())
        }
        other => Err(format!("unknown output format '{other}'")),
    }
}

pub fn write_trajectory(
    dir: &Path,
    builder: &ProblemBuilder,
    traj: &Trajectory,
) -> Result<(), String> {
    let mut w =
        csv::Writer::from_path(dir.join("trajectory.csv")).map_err(|e| e.to_string())?;
    let nv = builder.model.nv();
    let mut header = vec!["t".to_string()];
    header.extend((0..nv).map(|i| format!("q{i}")));
    header.extend((0..nv).map(|i| format!("v{i}")));
    header.push("u".to_string());
    w.write_record(&header).map_err(|e| e.to_string())?;
    for (k, x) in traj.states.iter().enumerate() {
        let mut rec = vec![format!("{}", k as f64 * builder.spec.dt)];
        rec.extend(x.q.iter().map(|v| format!("{v}")));
        rec.extend(x.v.iter().map(|v| format!("{v}")));
        let u = if k < traj.controls.len() {
            traj.controls[k].iter().map(|v| format!("{v:.9}")).collect::<Vec<_>>().join(" ")
        } else {
            String::new()
        };
        rec.push(u);
        w.write_record(&rec).map_err(|e| e.to_string())?;
    }
    w.flush().map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct SolveSummary {
    problem: String,
    converged: bool,
    iterations: usize,
    final_cost: f64,
    final_h_l1: f64,
    final_f_l1: f64,
    stopping_metric: f64,
    kkt_residual: f64,
    kkt_grad: f64,
    wall_time: f64,
}

pub fn write_solve_summary(
    dir: &Path,
    builder: &ProblemBuilder,
    sol: &Solution,
    kkt: &KktResidual,
    wall_time: f64,
) -> Result<(), String> {
    let summary = SolveSummary {
        problem: builder.spec.name.clone(),
        converged: sol.converged,
        iterations: sol.state.iterations.len(),
        final_cost: sol.cost,
        final_h_l1: sol.h_l1,
        final_f_l1: sol.f_l1,
        stopping_metric: sol.stopping_metric,
        kkt_residual: kkt.residual_inf,
        kkt_grad: kkt.grad_inf,
        wall_time,
    };
    let text = serde_json::to_string_pretty(&summary).map_err(|e| e.to_string())?;
    std::fs::write(dir.join("summary.json"), text).map_err(|e| e.to_string())
}

pub fn write_trace(dir: &Path, format: &str, rows: &[TraceRow]) -> Result<(), String> {
    match format {
        "csv" => {
            let mut w = csv::Writer::from_path(dir.join("trace.csv")).map_err(|e| e.to_string())?;
            w.write_record([
                "t",
                "plant_state",
                "tau",
                "cost",
                "f_l1",
                "h_l1",
                "iterations",
                "solve_time",
            ])
            .map_err(|e| e.to_string())?;
            for r in rows {
                let state = r
                    .plant_q
                    .iter()
                    .chain(r.plant_v.iter())
                    .map(|v| format!("{v:.9}"))
                    .collect::<Vec<_>>()
                    .join(" ");
                let tau =
                    r.tau.iter().map(|v| format!("{v:.9}")).collect::<Vec<_>>().join(" ");
                w.write_record([
                    format!("{:.6}", r.t),
                    state,
                    tau,
                    format!("{:.9}", r.cost),
                    format!("{:.9e}", r.f_l1),
                    format!("{:.9e}", r.h_l1),
                    format!("{}", r.iterations),
                    format!("{:.6}", r.solve_time),
                ])
                .map_err(|e| e.to_string())?;
            }
            w.flush().map_err(|e| e.to_string())
        }
        "json" => {
            let text = serde_json::to_string_pretty(rows).map_err(|e| e.to_string())?;
            std::fs::write(dir.join("trace.json"), text).map_err(|e| e.to_string())
        }
        other => Err(format!("unknown output format '{other}'")),
    }
}

/// One bench table row.
#[derive(Serialize)]
pub struct BenchRow {
    pub problem: String,
    pub formulation: String,
    pub factorization: String,
    pub trials: usize,
    pub mean_wall: f64,
    pub std_wall: f64,
    pub mean_derivatives: f64,
    pub mean_backward: f64,
    pub mean_forward: f64,
    pub iterations: usize,
    pub final_cost: f64,
    pub converged: bool,
    /// Set when this variant's final cost disagrees with the reference
    /// variant; its timing is excluded from comparisons.
    pub flagged: bool,
}

impl BenchRow {
    pub fn render(&self) -> String {
        format!(
            "{:12} {:10} {:10} mean {:8.4}s ± {:7.4}s (deriv {:7.4} backward {:7.4} forward {:7.4}) iters {:3} cost {:.6}{}{}",
            self.problem,
            self.formulation,
            self.factorization,
            self.mean_wall,
            self.std_wall,
            self.mean_derivatives,
            self.mean_backward,
            self.mean_forward,
            self.iterations,
            self.final_cost,
            if self.converged { "" } else { " NOT-CONVERGED" },
            if self.flagged { " FLAGGED" } else { "" }
        )
    }
}

/// Repeated-trial timing per (formulation × factorization) from identical
/// seeded initializations; a warm-up run per variant is excluded.
pub fn run_bench(
    builder: &ProblemBuilder,
    formulations: &[FormulationKind],
    settings: &SolverSettings,
    trials: usize,
    seed: u64,
) -> Result<Vec<BenchRow>, String> {
    let mut rows = Vec::new();
    for &form in formulations {
        let problem = builder.problem_as(form);
        let x0 = builder.init_state();
        let mut guess = builder.quasi_static_trajectory_as(0, builder.total_nodes(), &x0, form);
        if seed != 0 {
            use rand::{Rng, SeedableRng};
            let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
            for u in &mut guess.controls {
                for v in u.iter_mut() {
                    *v += rng.gen_range(-0.5..0.5);
                }
            }
        }
        let mut reference_cost: Option<f64> = None;
        for fac in [Factorization::Nullspace, Factorization::Schur] {
            let s = SolverSettings { factorization: fac, ..settings.clone() };
            // Warm-up (excluded from timing).
            let warm = solve(&problem, &guess, &s).map_err(|e| e.to_string())?;
            let mut walls = Vec::with_capacity(trials);
            let mut t_deriv = 0.0;
            let mut t_back = 0.0;
            let mut t_fwd = 0.0;
            for _ in 0..trials {
                let t0 = std::time::Instant::now();
                let sol = solve(&problem, &guess, &s).map_err(|e| e.to_string())?;
                walls.push(t0.elapsed().as_secs_f64());
                for rec in &sol.state.iterations {
                    t_deriv += rec.t_derivatives;
                    t_back += rec.t_backward;
                    t_fwd += rec.t_forward;
                }
            }
            let n = walls.len() as f64;
            let mean = walls.iter().sum::<f64>() / n;
            let var = walls.iter().map(|w| (w - mean) * (w - mean)).sum::<f64>() / n;
            let flagged = match reference_cost {
                Some(c0) => (warm.cost - c0).abs() > 1e-6 * (1.0 + c0.abs()),
                None => {
                    reference_cost = Some(warm.cost);
                    false
                }
            };
            rows.push(BenchRow {
                problem: builder.spec.name.clone(),
                formulation: format!("{form:?}").to_lowercase(),
                factorization: format!("{fac:?}").to_lowercase(),
                trials,
                mean_wall: mean,
                std_wall: var.sqrt(),
                mean_derivatives: t_deriv / n,
                mean_backward: t_back / n,
                mean_forward: t_fwd / n,
                iterations: warm.state.iterations.len(),
                final_cost: warm.cost,
                converged: warm.converged,
                flagged,
            });
        }
    }
    Ok(rows)
}

pub fn write_bench(dir: &Path, format: &str, rows: &[BenchRow]) -> Result<(), String> {
    match format {
        "csv" => {
            let mut w = csv::Writer::from_path(dir.join("bench.csv")).map_err(|e| e.to_string())?;
            for r in rows {
                w.serialize(r).map_err(|e| e.to_string())?;
            }
            w.flush().map_err(|e| e.to_string())
        }
        "json" => {
            let text = serde_json::to_string_pretty(&rows).map_err(|e| e.to_string())?;
            std::fs::write(dir.join("bench.json"), text).map_err(|e| e.to_string())
        }
        other => Err(format!("unknown output format '{other}'")),
    }
}
