//! Receding-horizon loop: warm starting, the joint-effort feedback-policy
//! mapping, and a disturbance-injecting closed-loop plant simulation.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{ModelError, SolveError};
use crate::manifold::{difference, State};
use crate::model::Trajectory;
use crate::problems::{MpcSpec, ProblemBuilder};
use crate::rigid::dynamics::bias_force;
use crate::rigid::dynamics::contact_jacobian;
use crate::rigid::{
    contact_forward_dynamics, impulse_dynamics, mass_matrix, ActuationModel, ContactSet,
    PlanarModel,
};
use crate::solver::{solve, Solution, SolverSettings};

/// Receding-horizon configuration.
#[derive(Debug, Clone)]
pub struct MpcConfig {
    pub horizon: usize,
    /// Control period in seconds; must not exceed the node duration.
    pub control_period: f64,
    /// Major-iteration budget per MPC step.
    pub iters: usize,
    pub plant_substeps: usize,
    pub duration: f64,
    /// Apply the mapped feedback gains (false = feed-forward only).
    pub feedback: bool,
    /// Actuator saturation applied to the commanded joint efforts.
    pub tau_limit: Option<f64>,
    /// (time, velocity jump) impulses on the plant.
    pub disturbances: Vec<(f64, DVector<f64>)>,
}

impl MpcConfig {
    pub fn from_spec(spec: &MpcSpec) -> Self {
        Self {
            horizon: spec.horizon,
            control_period: 1.0 / spec.control_hz,
            iters: spec.iters,
            plant_substeps: spec.plant_substeps,
            duration: spec.duration,
            feedback: spec.feedback,
            tau_limit: spec.tau_limit,
            disturbances: spec
                .disturbance
                .iter()
                .map(|d| (d.t, DVector::from_vec(d.dv.clone())))
                .collect(),
        }
    }

    pub fn validate(&self, node_dt: f64) -> Result<(), ModelError> {
        if self.iters == 0 {
            return Err(ModelError::Invalid("iteration budget must be >= 1".into()));
        }
        if self.control_period > node_dt + 1e-12 {
            return Err(ModelError::Invalid("control period exceeds node duration".into()));
        }
        Ok(())
    }
}

/// Joint-effort policy of one node: τ(x̂) = π_τ + Π_τ (x* ⊖ x̂).
///
/// The node reference (q*, v*) advances along the plan over the node
/// duration (`next_ref`); tracking the frozen start state instead would
/// make the feedback fight the planned motion itself.
#[derive(Debug, Clone)]
pub struct TorquePolicy {
    pub pi_tau: DVector<f64>,
    pub gain_tau: DMatrix<f64>,
    pub q_ref: DVector<f64>,
    pub v_ref: DVector<f64>,
    /// Reference at the end of the node interval, when known.
    pub next_ref: Option<(DVector<f64>, DVector<f64>)>,
}

impl TorquePolicy {
    pub fn torque(
        &self,
        manifold: &crate::manifold::ManifoldSpec,
        plant_state: &State,
    ) -> DVector<f64> {
        self.torque_at(manifold, plant_state, 0.0)
    }

    /// Torque at fraction `s` in [0, 1] of the node interval.
    pub fn torque_at(
        &self,
        manifold: &crate::manifold::ManifoldSpec,
        plant_state: &State,
        s: f64,
    ) -> DVector<f64> {
        let ref0 = State::new(self.q_ref.clone(), self.v_ref.clone());
        let reference = match &self.next_ref {
            Some((q1, v1)) if s > 0.0 => {
                let ref1 = State::new(q1.clone(), v1.clone());
                let step = difference(manifold, &ref1, &ref0).expect("matching dimensions");
                crate::manifold::integrate(manifold, &ref0, &(s * step))
                    .expect("matching dimensions")
            }
            _ => ref0,
        };
        let dx = difference(manifold, &reference, plant_state).expect("matching dimensions");
        &self.pi_tau + &self.gain_tau * dx
    }
}



/// Map a condensed-formulation node policy into the joint-effort space:
/// π_τ = (A*_τ)† (M(q*) a* + b(q*, v*) − J_cᵀ(q*) λ*) and
/// Π_τ = (A*_τ)† (M(q*) Π_a − J_cᵀ(q*) Π_λ), evaluated at the node's
/// reference (q*, v*) with its reference inputs (a*, λ*).
#[allow(clippy::too_many_arguments)]
pub fn map_policy_to_torque(
    model: &PlanarModel,
    actuation: &ActuationModel,
    contacts: &ContactSet,
    q_ref: &DVector<f64>,
    v_ref: &DVector<f64>,
    acc_ref: &DVector<f64>,
    force_ref: &DVector<f64>,
    gain_acc: &DMatrix<f64>,
    gain_force: &DMatrix<f64>,
) -> Result<TorquePolicy, ModelError> {
    let d = actuation.d_tau(q_ref);
    let svals = d.singular_values();
    let smin = svals.iter().cloned().fold(f64::INFINITY, f64::min);
    let smax = svals.iter().cloned().fold(0.0f64, f64::max);
    if smin <= 0.0 || smax / smin > 1e12 {
        return Err(ModelError::Invalid("actuation map ill-conditioned at reference".into()));
    }
    let pinv = crate::factor::pseudo_inverse(&d);
    let m = mass_matrix(model, q_ref);
    let b = bias_force(model, q_ref, v_ref);
    let jc_t = contact_jacobian(model, contacts, q_ref).transpose();
    let pi_tau = &pinv * (&m * acc_ref + &b - &jc_t * force_ref);
    let gain_tau = &pinv * (&m * gain_acc - &jc_t * gain_force);
    Ok(TorquePolicy {
        pi_tau,
        gain_tau,
        q_ref: q_ref.clone(),
        v_ref: v_ref.clone(),
        next_ref: None,
    })
}

/// Shift the previous solution by `n_shift` nodes to warm-start the next
/// window: the last state is repeated for unseen nodes, unseen controls are
/// quasi-static, the new initial-state mismatch is absorbed by the f̄₀ gap.
pub fn warm_start_shift(
    builder: &ProblemBuilder,
    previous: &Trajectory,
    new_window_start: usize,
    n_shift: usize,
    formulation: crate::problems::FormulationKind,
) -> Trajectory {
    let n = previous.horizon();
    let mut states = Vec::with_capacity(n + 1);
    let mut controls = Vec::with_capacity(n);
    for k in n_shift..=n {
        states.push(previous.states[k].clone());
    }
    for k in n_shift..n {
        controls.push(previous.controls[k].clone());
    }
    let last_state = previous.states[n].clone();
    for i in 0..n_shift {
        states.push(last_state.clone());
        let abs_k = new_window_start + (n - n_shift) + i;
        controls.push(builder.quasi_static_control(abs_k, &last_state, formulation));
    }
    Trajectory::new(states, controls)
}

/// One row of the closed-loop trace.
#[derive(Debug, Clone, Serialize)]
pub struct TraceRow {
    pub t: f64,
    pub plant_q: Vec<f64>,
    pub plant_v: Vec<f64>,
    pub tau: Vec<f64>,
    pub cost: f64,
    pub f_l1: f64,
    pub h_l1: f64,
    pub iterations: usize,
    pub solve_time: f64,
}

pub struct Trace {
    pub rows: Vec<TraceRow>,
    pub completed: bool,
    pub failure: Option<String>,
}

/// Run the receding-horizon loop against a plant integrating the same
/// rigid-body model at a finer step. Deterministic: identical inputs give
/// identical traces.
pub fn closed_loop_simulate(
    builder: &ProblemBuilder,
    config: &MpcConfig,
    settings: &SolverSettings,
) -> Result<Trace, SolveError> {
    let dt = builder.spec.dt;
    config.validate(dt).map_err(SolveError::Model)?;
    let formulation = crate::problems::FormulationKind::Condensed;
    let manifold = builder.manifold.clone();
    let model = builder.model.clone();
    let actuation = builder.actuation.clone();
    let nv = model.nv();

    let steps = (config.duration / config.control_period).round() as usize;
    let plant_dt = config.control_period / config.plant_substeps as f64;

    let mut plant = builder.init_state();
    let mut plant_active = active_frames(builder, 0);
    // The plant's ground model: contacts stick where they land. Anchors are
    // set at touchdown and held with positional stabilization.
    let mut plant_contacts = anchored_contacts(builder, 0, &plant);
    let mut disturbances = config.disturbances.clone();
    disturbances.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut next_disturbance = 0;

    let mut rows = Vec::with_capacity(steps);
    let mut prev: Option<(Trajectory, usize)> = None;
    let mut last_policy: Option<TorquePolicy> = None;
    let mut mu_carry = settings.mu0;

    for step in 0..steps {
        let t = step as f64 * config.control_period;
        let start_node = (t / dt + 1e-9).floor() as usize;

        let problem = builder.window(start_node, config.horizon, plant.clone());
        let guess = match &prev {
            Some((traj, prev_start)) => {
                let shift = start_node - prev_start;
                warm_start_shift(builder, traj, start_node, shift, formulation)
            }
            None => builder.quasi_static_trajectory(start_node, config.horizon, &plant),
        };
        let step_settings = SolverSettings {
            max_iters: config.iters,
            mu0: mu_carry,
            ..settings.clone()
        };
        let t0 = std::time::Instant::now();
        // A failed solve must not kill the loop: keep the previous policy
        // and let the divergence check decide.
        let sol = match solve(&problem, &guess, &step_settings) {
            Ok(s) => Some(s),
            Err(_) => None,
        };
        let solve_time = t0.elapsed().as_secs_f64();
        let (policy, sol_stats) = match &sol {
            Some(s) => {
                mu_carry = s.state.mu.max(step_settings.mu_min).min(1e-3);
                match head_torque_policy(builder, s, start_node, config.feedback) {
                    Ok(p) => (Some(p), Some((s.cost, s.f_l1, s.h_l1, s.state.iterations.len()))),
                    Err(_) => (None, None),
                }
            }
            None => (None, None),
        };
        let policy = match (policy, &last_policy) {
            (Some(p), _) => {
                last_policy = Some(p.clone());
                p
            }
            (None, Some(prev)) => prev.clone(),
            (None, None) => {
                return Ok(Trace {
                    rows,
                    completed: false,
                    failure: Some(format!("no usable policy at t = {t:.3}")),
                });
            }
        };
        let (cost, f_l1, h_l1, iterations) =
            sol_stats.unwrap_or((f64::NAN, f64::NAN, f64::NAN, 0));

        rows.push(TraceRow {
            t,
            plant_q: plant.q.iter().cloned().collect(),
            plant_v: plant.v.iter().cloned().collect(),
            tau: policy.pi_tau.iter().cloned().collect(),
            cost,
            f_l1,
            h_l1,
            iterations,
            solve_time,
        });

        // Advance the plant over one control period.
        for sub in 0..config.plant_substeps {
            let t_abs = t + sub as f64 * plant_dt;
            while next_disturbance < disturbances.len()
                && disturbances[next_disturbance].0 <= t_abs + 0.5 * plant_dt
            {
                plant.v += &disturbances[next_disturbance].1;
                // A push borne through planted feet must stay consistent
                // with the contact constraint: project the velocity jump
                // through the contact impulse map.
                if plant_contacts.nf() > 0 {
                    let r = impulse_dynamics(&model, &plant_contacts, &plant.q, &plant.v)
                        .map_err(SolveError::Model)?;
                    plant.v = r.v_plus;
                }
                next_disturbance += 1;
            }
            // Contact-gain transitions in the plant reset velocities and
            // re-anchor the gained contacts where the feet actually land.
            let node_now = (t_abs / dt + 1e-9).floor() as usize;
            let active_now = active_frames(builder, node_now);
            if active_now != plant_active {
                let gained = active_now.iter().any(|f| !plant_active.contains(f));
                plant_contacts = anchored_contacts(builder, node_now, &plant);
                if gained {
                    let r = impulse_dynamics(&model, &plant_contacts, &plant.q, &plant.v)
                        .map_err(SolveError::Model)?;
                    plant.v = r.v_plus;
                }
                plant_active = active_now;
            }

            let s_frac = (sub as f64 + 0.5) / config.plant_substeps as f64;
            let mut tau = policy.torque_at(&manifold, &plant, s_frac);
            if let Some(lim) = config.tau_limit {
                for v in tau.iter_mut() {
                    *v = v.clamp(-lim, lim);
                }
            }
            let force = DVector::from_vec(actuation.map::<f64>(
                plant.q.as_slice(),
                plant.v.as_slice(),
                tau.as_slice(),
            ));
            let fd = contact_forward_dynamics(&model, &plant_contacts, &plant.q, &plant.v, &force)
                .map_err(SolveError::Model)?;
            let (q_next, v_next) = crate::manifold::symplectic_euler(
                &manifold, &plant.q, &plant.v, &fd.vdot, plant_dt,
            )
            .map_err(SolveError::Model)?;
            plant = State::new(q_next, v_next);
            if !plant.is_finite() || plant.v.amax() > 1e4 || plant.q.amax() > 1e4 {
                return Ok(Trace {
                    rows,
                    completed: false,
                    failure: Some(format!("plant diverged at t = {t_abs:.3}")),
                });
            }
        }
        let _ = nv;
        if let Some(s) = sol {
            prev = Some((s.trajectory, start_node));
        }
    }
    Ok(Trace { rows, completed: true, failure: None })
}

fn active_frames(builder: &ProblemBuilder, abs_node: usize) -> Vec<usize> {
    builder.active_frame_indices(abs_node)
}

/// Plant contact set at a node, anchored at the feet's current world
/// positions with stiff positional stabilization (ground stiction).
fn anchored_contacts(builder: &ProblemBuilder, abs_node: usize, plant: &State) -> ContactSet {
    let mut set = builder.contact_set_at(abs_node);
    for f in &mut set.frames {
        let st = crate::rigid::dynamics::point_state(&builder.model, f, &plant.q, &plant.v);
        f.anchor = st.p;
    }
    set.baumgarte = (400.0, 40.0);
    set
}

/// Torque policy of one window node.
fn node_torque_policy(
    builder: &ProblemBuilder,
    sol: &Solution,
    start_node: usize,
    k: usize,
    feedback: bool,
) -> Result<TorquePolicy, SolveError> {
    let nv = builder.model.nv();
    let contacts = builder.contact_set_at(start_node + k);
    let nf = contacts.nf();
    let u = &sol.trajectory.controls[k];
    let acc_ref = u.rows(0, nv).clone_owned();
    let force_ref = u.rows(nv, nf).clone_owned();
    let x_ref = &sol.trajectory.states[k];
    let nx = builder.manifold.nx_tangent();
    let (gain_acc, gain_force) = if feedback && !sol.policies.is_empty() {
        let g = &sol.policies[k].gain;
        (g.rows(0, nv).clone_owned(), g.rows(nv, nf).clone_owned())
    } else {
        (DMatrix::zeros(nv, nx), DMatrix::zeros(nf, nx))
    };
    let mut policy = map_policy_to_torque(
        &builder.model,
        &builder.actuation,
        &contacts,
        &x_ref.q,
        &x_ref.v,
        &acc_ref,
        &force_ref,
        &gain_acc,
        &gain_force,
    )
    .map_err(SolveError::Model)?;
    if k + 1 <= sol.trajectory.horizon() {
        let x1 = &sol.trajectory.states[k + 1];
        policy.next_ref = Some((x1.q.clone(), x1.v.clone()));
    }
    Ok(policy)
}

/// Policy applied over the control interval: the window's first
/// non-impulse node, held for the node duration.
fn head_torque_policy(
    builder: &ProblemBuilder,
    sol: &Solution,
    start_node: usize,
    feedback: bool,
) -> Result<TorquePolicy, SolveError> {
    let n = sol.trajectory.horizon();
    let mut k = 0;
    while builder.is_impulse(start_node + k) && k + 1 < n {
        k += 1;
    }
    node_torque_policy(builder, sol, start_node, k, feedback)
}
