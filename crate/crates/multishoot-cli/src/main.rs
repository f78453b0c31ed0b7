//! Command-line entry points: solve benchmark problems, run closed-loop
//! MPC simulations, and benchmark the factorization variants.

mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use multishoot::mpc::{closed_loop_simulate, MpcConfig};
use multishoot::problems::{builtin_names, builtin_spec, FormulationKind, ProblemBuilder, ProblemSpec};
use multishoot::solver::kkt::kkt_residual;
use multishoot::solver::{solve, Factorization, SolverSettings};
use multishoot::BasisMethod;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

#[derive(Parser)]
#[command(
    name = "multishoot",
    about = "Equality-constrained DDP trajectory optimization",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a benchmark problem and write its iteration log, trajectory
    /// and KKT certificate.
    Solve(SolveArgs),
    /// Run a receding-horizon closed-loop simulation and write the trace.
    Mpc(MpcArgs),
    /// Time the factorization variants over repeated trials.
    Bench(BenchArgs),
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Builtin problem name (pend, birotor, monoped-hop, biped-walk).
    #[arg(long, conflicts_with = "spec")]
    problem: Option<String>,
    /// Path to a problem spec file.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Override the node duration; phase node counts are rescaled to keep
    /// the schedule duration.
    #[arg(long)]
    dt: Option<f64>,
    /// Override the total node count; phases are rescaled proportionally.
    #[arg(long)]
    nodes: Option<usize>,
    /// condensed | redundant | forward
    #[arg(long)]
    formulation: Option<String>,
    /// nullspace | schur
    #[arg(long)]
    factorization: Option<String>,
    /// lu-full-pivot | qr-col-pivot
    #[arg(long)]
    basis: Option<String>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Worker threads for the derivative stage (1 = sequential).
    #[arg(long)]
    threads: Option<usize>,
    /// Seed for the initial-trajectory perturbation (0 = quasi-static).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory (default: $MULTISHOOT_OUT or ".").
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv | json
    #[arg(long, default_value = "csv")]
    format: String,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct MpcArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Disable the mapped feedback gains (feed-forward only).
    #[arg(long)]
    no_feedback: bool,
    /// Override the simulated duration in seconds.
    #[arg(long)]
    duration: Option<f64>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Trials per variant (one warm-up run is excluded).
    #[arg(long, default_value_t = 50)]
    trials: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Solve(a) => cmd_solve(&a),
        Command::Mpc(a) => cmd_mpc(&a),
        Command::Bench(a) => cmd_bench(&a),
    };
    match code {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn load_spec(common: &CommonArgs) -> Result<ProblemSpec, String> {
    let text = match (&common.problem, &common.spec) {
        (Some(name), None) => builtin_spec(name)
            .ok_or_else(|| {
                format!("unknown problem '{name}'; builtins: {}", builtin_names().join(", "))
            })?
            .to_string(),
        (None, Some(path)) => std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?,
        _ => return Err("give exactly one of --problem or --spec".into()),
    };
    let mut spec = ProblemSpec::parse(&text).map_err(|e| e.to_string())?;
    if let Some(form) = &common.formulation {
        spec.formulation = match form.as_str() {
            "condensed" => FormulationKind::Condensed,
            "redundant" => FormulationKind::Redundant,
            "forward" => FormulationKind::Forward,
            other => return Err(format!("unknown formulation '{other}'")),
        };
    }
    if let Some(dt) = common.dt {
        if dt <= 0.0 {
            return Err("dt must be positive".into());
        }
        let scale = spec.dt / dt;
        for ph in &mut spec.phase {
            ph.nodes = ((ph.nodes as f64 * scale).round() as usize).max(1);
        }
        spec.dt = dt;
    }
    if let Some(n) = common.nodes {
        let total: usize = spec.phase.iter().map(|p| p.nodes).sum();
        if total == 0 || n == 0 {
            return Err("node count must be positive".into());
        }
        let scale = n as f64 / total as f64;
        for ph in &mut spec.phase {
            ph.nodes = ((ph.nodes as f64 * scale).round() as usize).max(1);
        }
    }
    spec.validate().map_err(|e| e.to_string())?;
    Ok(spec)
}

fn settings_of(common: &CommonArgs) -> Result<SolverSettings, String> {
    let mut s = SolverSettings::default();
    if let Some(t) = common.tol {
        s.tol = t;
    }
    if let Some(m) = common.max_iters {
        s.max_iters = m;
    }
    if let Some(f) = &common.factorization {
        s.factorization = match f.as_str() {
            "nullspace" => Factorization::Nullspace,
            "schur" => Factorization::Schur,
            other => return Err(format!("unknown factorization '{other}'")),
        };
    }
    if let Some(b) = &common.basis {
        s.basis_method = match b.as_str() {
            "lu-full-pivot" => BasisMethod::LuFullPivot,
            "qr-col-pivot" => BasisMethod::QrColPivot,
            other => return Err(format!("unknown basis method '{other}'")),
        };
    }
    let threads = configured_threads(common);
    s.parallel_derivatives = threads != 1;
    s.validate()?;
    Ok(s)
}

fn configured_threads(common: &CommonArgs) -> usize {
    let available = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    // Mirror the reference setup: default to the available cores, capped at 8.
    let threads = common.threads.unwrap_or_else(|| available.min(8));
    #[cfg(feature = "parallel")]
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    threads
}

fn out_dir(common: &CommonArgs) -> PathBuf {
    common
        .out
        .clone()
        .or_else(|| std::env::var_os("MULTISHOOT_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

/// Quasi-static initial guess, optionally perturbed by seeded control noise.
fn initial_guess(
    builder: &ProblemBuilder,
    seed: u64,
) -> multishoot::Trajectory {
    let x0 = builder.init_state();
    let mut traj = builder.quasi_static_trajectory(0, builder.total_nodes(), &x0);
    if seed != 0 {
        let mut rng = StdRng::seed_from_u64(seed);
        for u in &mut traj.controls {
            for v in u.iter_mut() {
                *v += rng.gen_range(-1.0..1.0);
            }
        }
    }
    traj
}

fn cmd_solve(args: &SolveArgs) -> Result<ExitCode, String> {
    let spec = load_spec(&args.common)?;
    let settings = settings_of(&args.common)?;
    let builder = ProblemBuilder::new(spec).map_err(|e| e.to_string())?;
    let problem = builder.problem();
    let guess = initial_guess(&builder, args.common.seed);

    let t0 = std::time::Instant::now();
    let sol = solve(&problem, &guess, &settings).map_err(|e| e.to_string())?;
    let wall = t0.elapsed().as_secs_f64();
    let kkt = kkt_residual(&problem, &sol).map_err(|e| e.to_string())?;

    let dir = out_dir(&args.common);
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    output::write_iteration_log(&dir, &args.common.format, &sol.state.iterations)?;
    output::write_trajectory(&dir, &builder, &sol.trajectory)?;
    output::write_solve_summary(&dir, &builder, &sol, &kkt, wall)?;

    println!(
        "{}: converged={} iterations={} cost={:.6} metric={:.3e} |h|1={:.3e} kkt={:.3e} [{:.2}s]",
        builder.spec.name,
        sol.converged,
        sol.state.iterations.len(),
        sol.cost,
        sol.stopping_metric,
        sol.h_l1,
        kkt.residual_inf,
        wall
    );
    Ok(if sol.converged { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn cmd_mpc(args: &MpcArgs) -> Result<ExitCode, String> {
    let spec = load_spec(&args.common)?;
    let settings = settings_of(&args.common)?;
    let builder = ProblemBuilder::new(spec).map_err(|e| e.to_string())?;
    let Some(mpc_spec) = builder.spec.mpc.clone() else {
        return Err("spec has no [mpc] section".into());
    };
    let mut config = MpcConfig::from_spec(&mpc_spec);
    if args.no_feedback {
        config.feedback = false;
    }
    if let Some(d) = args.duration {
        config.duration = d;
    }
    let trace = closed_loop_simulate(&builder, &config, &settings).map_err(|e| e.to_string())?;

    let dir = out_dir(&args.common);
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    output::write_trace(&dir, &args.common.format, &trace.rows)?;

    println!(
        "{}: completed={} steps={}{}",
        builder.spec.name,
        trace.completed,
        trace.rows.len(),
        trace.failure.as_ref().map(|f| format!(" ({f})")).unwrap_or_default()
    );
    Ok(if trace.completed { ExitCode::SUCCESS } else { ExitCode::from(3) })
}

fn cmd_bench(args: &BenchArgs) -> Result<ExitCode, String> {
    let threads = configured_threads(&args.common);
    if threads == 1 {
        eprintln!(
            "warning: single-threaded run; the parallel derivative stage is \
             disabled and the nullspace mode loses its concurrency advantage"
        );
    }
    let spec = load_spec(&args.common)?;
    let settings = settings_of(&args.common)?;
    let builder = ProblemBuilder::new(spec).map_err(|e| e.to_string())?;

    let formulations: Vec<FormulationKind> = match args.common.formulation.as_deref() {
        Some(_) => vec![builder.spec.formulation],
        None => vec![FormulationKind::Condensed, FormulationKind::Redundant],
    };
    let rows = output::run_bench(&builder, &formulations, &settings, args.trials, args.common.seed)?;
    let dir = out_dir(&args.common);
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    output::write_bench(&dir, &args.common.format, &rows)?;
    for r in &rows {
        println!("{}", r.render());
    }
    Ok(ExitCode::SUCCESS)
}
