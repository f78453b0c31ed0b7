//! Feasibility-driven rollout, merit function, Goldstein-style acceptance
//! and the Levenberg-Marquardt regularization rules.

use nalgebra::DVector;

use crate::manifold::{difference, integrate};
use crate::model::{Problem, Trajectory};
use crate::solver::data::ProblemData;
use crate::solver::{Direction, SolverSettings};

/// A trial trajectory with its evaluated cost and infeasibility totals.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub trajectory: Trajectory,
    pub cost: f64,
    /// ℓ1 of all kinematic gaps, initial-condition slot included.
    pub f_l1: f64,
    /// ℓ1 of all constraint residuals.
    pub h_l1: f64,
    /// Largest |f̄| entry over all post-rollout gaps.
    pub max_gap_inf: f64,
}

impl Candidate {
    pub fn total_eps(&self) -> f64 {
        self.f_l1 + self.h_l1
    }
}

/// Nonlinear rollout at step length `alpha`: gaps contract by (1 − α).
///
/// With `feasibility_driven` false the rollout closes every gap (classical
/// DDP forward pass), which is the ablation mode.
pub fn forward_rollout(
    problem: &Problem,
    trajectory: &Trajectory,
    data: &ProblemData,
    direction: &Direction,
    alpha: f64,
    feasibility_driven: bool,
) -> Option<Candidate> {
    debug_assert!(alpha > 0.0 && alpha <= 1.0);
    let n = problem.horizon();
    let spec = &problem.manifold;
    let mut states = Vec::with_capacity(n + 1);
    let mut controls = Vec::with_capacity(n);

    let x0 = if feasibility_driven {
        integrate(spec, &problem.x0, &((alpha - 1.0) * &data.init_gap)).ok()?
    } else {
        problem.x0.clone()
    };
    states.push(x0);

    for k in 0..n {
        let dx = difference(spec, &states[k], &trajectory.states[k]).ok()?;
        let pol = &direction.policies[k];
        let u = &trajectory.controls[k] - alpha * &pol.pi - &pol.gain * &dx;
        if !u.iter().all(|v| v.is_finite()) {
            return None;
        }
        let f_next = problem.nodes[k].dynamics(&states[k], &u);
        let x_next = if feasibility_driven {
            integrate(spec, &f_next, &((alpha - 1.0) * &data.nodes[k].f_gap)).ok()?
        } else {
            f_next
        };
        if !x_next.is_finite() {
            return None;
        }
        states.push(x_next);
        controls.push(u);
    }
    Some(evaluate_candidate(problem, Trajectory::new(states, controls)))
}

/// Evaluate cost, constraint residuals and gaps of a trajectory.
pub fn evaluate_candidate(problem: &Problem, mut trajectory: Trajectory) -> Candidate {
    let n = problem.horizon();
    let spec = &problem.manifold;
    let mut cost = 0.0;
    let mut f_l1 = 0.0;
    let mut h_l1 = 0.0;
    let mut max_gap_inf: f64 = 0.0;

    let init_gap = difference(spec, &problem.x0, &trajectory.states[0])
        .expect("trajectory dimensions match problem");
    f_l1 += init_gap.iter().map(|x| x.abs()).sum::<f64>();
    max_gap_inf = max_gap_inf.max(init_gap.amax());

    for k in 0..n {
        let model = problem.nodes[k].as_ref();
        let x = &trajectory.states[k];
        let u = &trajectory.controls[k];
        cost += model.cost(x, u);
        let gap = difference(spec, &model.dynamics(x, u), &trajectory.states[k + 1])
            .expect("consistent dimensions");
        let h = model.constraint(x, u);
        let gf: f64 = gap.iter().map(|v| v.abs()).sum();
        let gh: f64 = h.iter().map(|v| v.abs()).sum();
        f_l1 += gf;
        h_l1 += gh;
        if gap.len() > 0 {
            max_gap_inf = max_gap_inf.max(gap.amax());
        }
        trajectory.infeasibility[k] = gf + gh;
    }
    cost += problem.terminal.cost(&trajectory.states[n]);
    Candidate { trajectory, cost, f_l1, h_l1, max_gap_inf }
}

/// Merit value φ = Σ ℓ + ν ε over the nodes plus the terminal cost.
pub fn merit_value(cost: f64, total_eps: f64, nu: f64) -> f64 {
    cost + nu * total_eps
}

/// Penalty update ν ← max(ν, |Δℓ(1)| / ((1 − ρ) Σε)); skipped on iterates
/// that are feasible up to evaluation noise (Σε ≤ 1e-11), where the ratio
/// is meaningless and would produce astronomic penalties.
pub fn merit_penalty_update(nu: f64, dl1_full: f64, total_eps: f64, rho: f64) -> f64 {
    if total_eps <= 1e-11 {
        return nu;
    }
    nu.max(dl1_full.abs() / ((1.0 - rho) * total_eps))
}

/// Goldstein-style acceptance. `d_phi` is the printed directional-derivative
/// surrogate ΔΦ = Δℓ(α) + α Σε (taken verbatim; a textbook ℓ1-merit
/// derivative would subtract α ν Σε instead).
pub fn accept_step(
    phi_old: f64,
    phi_new: f64,
    d_phi: f64,
    dl_alpha: f64,
    settings: &SolverSettings,
) -> bool {
    let change = phi_new - phi_old;
    if d_phi <= 0.0 {
        change <= settings.eta1 * d_phi
    } else {
        change <= settings.eta2 * dl_alpha
    }
}

/// Regularization events of §IV-F.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegularizationEvent {
    CholeskyFailure,
    SmallStep,
    LowCurvatureOptimality,
    LargeStep,
}

/// Apply the Levenberg-Marquardt update μ ← βⁱμ or μ/βᵈ with clamps.
pub fn update_regularization(mu: f64, event: RegularizationEvent, settings: &SolverSettings) -> f64 {
    let mu = match event {
        RegularizationEvent::CholeskyFailure
        | RegularizationEvent::SmallStep
        | RegularizationEvent::LowCurvatureOptimality => mu * settings.beta_inc,
        RegularizationEvent::LargeStep => mu / settings.beta_dec,
    };
    mu.clamp(settings.mu_min, settings.mu_max)
}

/// Convergence measure max(Σε, |Δℓ(1)|).
pub fn stopping_metric(total_eps: f64, dl1_full: f64) -> f64 {
    total_eps.max(dl1_full.abs())
}

/// Total infeasibility of an evaluated trajectory against its problem,
/// including the initial-condition gap.
pub fn total_infeasibility(problem: &Problem, trajectory: &Trajectory) -> f64 {
    evaluate_candidate(problem, trajectory.clone()).total_eps()
}

#[allow(unused)]
fn unused(_: &DVector<f64>) {}
