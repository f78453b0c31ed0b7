//! Problem assembly: schedule expansion, node construction, swing
//! references and the quasi-static initial guess.

use std::sync::Arc;

use nalgebra::DVector;

use crate::error::ModelError;
use crate::manifold::{ManifoldSpec, State};
use crate::model::{NodeModel, Problem, Trajectory};
use crate::rigid::{recover_torque, ActuationModel, ContactFrame, ContactSet, PlanarModel};

use super::node::{
    ImpulseNode, KinodynamicNode, NodeBounds, NodeFormulation, NodeWeights, SwingTarget,
    TrackingTerminal,
};
use super::spec::{FormulationKind, ProblemSpec, ResolvedModel};
use super::swing::swing_profile;

/// Expanded schedule and shared handles; builds problem windows at any
/// offset of the (optionally cyclic) schedule.
pub struct ProblemBuilder {
    pub spec: ProblemSpec,
    pub model: Arc<PlanarModel>,
    pub actuation: Arc<ActuationModel>,
    pub manifold: ManifoldSpec,
    frames: Vec<(String, ContactFrame)>,
    /// Per cycle node: active flags per frame.
    active: Vec<Vec<bool>>,
    /// Per cycle node: anchor per frame (last commanded placement).
    anchors: Vec<Vec<[f64; 2]>>,
    cycle_len: usize,
    cyclic: bool,
    stride: [f64; 2],
    formulation: FormulationKind,
}

impl ProblemBuilder {
    pub fn new(spec: ProblemSpec) -> Result<Self, ModelError> {
        spec.validate()?;
        let ResolvedModel { planar, actuation, contacts } = spec.resolve_model()?;
        let manifold = ManifoldSpec::new(planar.nv(), planar.nv(), planar.wrap_indices());
        let frames: Vec<(String, ContactFrame)> =
            contacts.into_iter().map(|c| (c.name, c.frame)).collect();

        let nf = frames.len();
        // Default anchor of every frame: its world position at the initial
        // posture. Phase entries override (absolute) or shift it.
        let init_state = State::new(
            DVector::from_vec(spec.init_q.clone()),
            DVector::from_vec(spec.init_v.clone()),
        );
        let init_anchor: Vec<[f64; 2]> = frames
            .iter()
            .map(|(_, f)| {
                crate::rigid::dynamics::point_state(&planar, f, &init_state.q, &init_state.v).p
            })
            .collect();
        let mut active = Vec::new();
        let mut anchors = Vec::new();
        let mut current = init_anchor.clone();
        for ph in &spec.phase {
            for (name, pos) in &ph.anchors {
                let idx = frames.iter().position(|(n, _)| n == name).unwrap();
                current[idx] = *pos;
            }
            for (name, shift) in &ph.shifts {
                let idx = frames.iter().position(|(n, _)| n == name).unwrap();
                current[idx] = [init_anchor[idx][0] + shift[0], init_anchor[idx][1] + shift[1]];
            }
            let flags: Vec<bool> =
                frames.iter().map(|(n, _)| ph.contacts.contains(n)).collect();
            for _ in 0..ph.nodes {
                active.push(flags.clone());
                anchors.push(current.clone());
            }
        }
        let cycle_len = active.len();
        let (cyclic, stride) = match &spec.mpc {
            Some(m) => (m.cycle, m.stride),
            None => (false, [0.0, 0.0]),
        };
        let formulation = spec.formulation;
        let _ = nf;
        Ok(Self {
            spec,
            model: Arc::new(planar),
            actuation: Arc::new(actuation),
            manifold,
            frames,
            active,
            anchors,
            cycle_len,
            cyclic,
            stride,
            formulation,
        })
    }

    pub fn total_nodes(&self) -> usize {
        self.cycle_len
    }

    pub fn frame_names(&self) -> Vec<&str> {
        self.frames.iter().map(|(n, _)| n.as_str()).collect()
    }

    fn slot(&self, k: usize) -> (usize, usize) {
        if self.cyclic {
            (k / self.cycle_len, k % self.cycle_len)
        } else {
            (0, k.min(self.cycle_len - 1))
        }
    }

    fn is_active(&self, frame: usize, k: usize) -> bool {
        let (_, i) = self.slot(k);
        self.active[i][frame]
    }

    fn anchor_at(&self, frame: usize, k: usize) -> [f64; 2] {
        let (c, i) = self.slot(k);
        let a = self.anchors[i][frame];
        [a[0] + c as f64 * self.stride[0], a[1] + c as f64 * self.stride[1]]
    }

    /// Active contact set (with current anchors) at absolute node k.
    pub fn contact_set_at(&self, k: usize) -> ContactSet {
        self.active_set(k)
    }

    /// Indices of the frames active at absolute node k.
    pub fn active_frame_indices(&self, k: usize) -> Vec<usize> {
        (0..self.frames.len()).filter(|&f| self.is_active(f, k)).collect()
    }

    /// A contact-gain transition happens at node k when some frame becomes
    /// active that was not active at k − 1.
    pub fn is_impulse(&self, k: usize) -> bool {
        if k == 0 || (!self.cyclic && k >= self.cycle_len) {
            return false;
        }
        (0..self.frames.len())
            .any(|f| self.is_active(f, k) && !self.is_active(f, k - 1))
    }

    fn active_set(&self, k: usize) -> ContactSet {
        let mut frames = Vec::new();
        for (f, (_, frame)) in self.frames.iter().enumerate() {
            if self.is_active(f, k) {
                let mut fr = frame.clone();
                fr.anchor = self.anchor_at(f, k);
                frames.push(fr);
            }
        }
        ContactSet { frames, baumgarte: (0.0, 50.0) }
    }

    fn swing_targets(&self, k: usize) -> Vec<SwingTarget> {
        let dt = self.spec.dt;
        let mut out = Vec::new();
        for (f, (_, frame)) in self.frames.iter().enumerate() {
            if self.is_active(f, k) {
                continue;
            }
            // Last stance node before k and next stance node after k, within
            // one cycle of search.
            let span = self.cycle_len;
            let start = (1..=span.min(k)).find(|&d| self.is_active(f, k - d)).map(|d| k - d);
            let horizon_limit = if self.cyclic { k + span } else { self.cycle_len.saturating_sub(1) };
            let end = ((k + 1)..=horizon_limit).find(|&j| self.is_active(f, j));
            let (p_ref, v_ref) = match (start, end) {
                (Some(s), Some(e)) => {
                    let dur = (e - s) as f64 * dt;
                    let t = (k - s) as f64 * dt;
                    swing_profile(
                        self.anchor_at(f, s),
                        self.anchor_at(f, e),
                        self.spec.swing_apex,
                        dur,
                        t,
                    )
                }
                (_, Some(e)) => (self.anchor_at(f, e), [0.0, 0.0]),
                (Some(s), None) => (self.anchor_at(f, s), [0.0, 0.0]),
                (None, None) => (self.anchor_at(f, k), [0.0, 0.0]),
            };
            out.push(SwingTarget { frame: frame.clone(), p_ref, v_ref });
        }
        out
    }

    fn weights(&self) -> NodeWeights {
        let w = &self.spec.weights;
        let q_ref = DVector::from_vec(
            self.spec.nominal_q.clone().unwrap_or_else(|| self.spec.init_q.clone()),
        );
        NodeWeights {
            q: DVector::from_vec(w.q.clone()),
            q_ref,
            v: DVector::from_vec(w.v.clone()),
            acc: w.acc,
            tau: w.tau,
            force: w.force,
            w_cone: w.cone,
            w_state: w.state_barrier,
            w_control: w.control_barrier,
            w_cpos: w.contact_pos,
            w_cvel: w.contact_vel,
        }
    }

    fn bounds(&self, node_nu: usize, accel_block: usize) -> NodeBounds {
        let b = &self.spec.bounds;
        let expand_u = |v: &Option<Vec<f64>>, fill: f64| -> Option<DVector<f64>> {
            v.as_ref().map(|bl| {
                let mut out = DVector::from_element(node_nu, fill);
                for (i, &x) in bl.iter().enumerate().take(accel_block) {
                    out[i] = x;
                }
                out
            })
        };
        NodeBounds {
            x_lower: b.x_lower.as_ref().map(|v| DVector::from_vec(v.clone())),
            x_upper: b.x_upper.as_ref().map(|v| DVector::from_vec(v.clone())),
            u_lower: expand_u(&b.u_lower, f64::NEG_INFINITY),
            u_upper: expand_u(&b.u_upper, f64::INFINITY),
        }
    }

    fn make_node(&self, k: usize, formulation: FormulationKind) -> Arc<dyn NodeModel> {
        if self.is_impulse(k) {
            return Arc::new(ImpulseNode {
                manifold: self.manifold.clone(),
                model: self.model.clone(),
                impact: self.active_set(k),
            });
        }
        let form = match formulation {
            FormulationKind::Condensed => NodeFormulation::Condensed,
            FormulationKind::Redundant => NodeFormulation::Redundant,
            FormulationKind::Forward => NodeFormulation::Forward,
        };
        let active = self.active_set(k);
        let node = KinodynamicNode {
            manifold: self.manifold.clone(),
            model: self.model.clone(),
            actuation: self.actuation.clone(),
            swing: self.swing_targets(k),
            formulation: form,
            dt: self.spec.dt,
            weights: self.weights(),
            bounds: NodeBounds::default(),
            friction: self.spec.cone.as_ref().map(|c| c.mu),
            active,
        };
        let nu = node.nu();
        let accel_block = match form {
            NodeFormulation::Forward => self.actuation.ntau(),
            _ => self.model.nv(),
        };
        let node = KinodynamicNode { bounds: self.bounds(nu, accel_block), ..node };
        Arc::new(node)
    }

    fn terminal(&self) -> Arc<TrackingTerminal> {
        let nv = self.model.nv();
        let goal_q = self
            .spec
            .goal
            .as_ref()
            .and_then(|g| g.q.clone())
            .or_else(|| self.spec.nominal_q.clone())
            .unwrap_or_else(|| self.spec.init_q.clone());
        let goal_v = self
            .spec
            .goal
            .as_ref()
            .and_then(|g| g.v.clone())
            .unwrap_or_else(|| vec![0.0; nv]);
        Arc::new(TrackingTerminal {
            manifold: self.manifold.clone(),
            q_ref: DVector::from_vec(goal_q),
            v_ref: DVector::from_vec(goal_v),
            wq: DVector::from_vec(self.spec.weights.q_terminal.clone()),
            wv: DVector::from_vec(self.spec.weights.v_terminal.clone()),
        })
    }

    /// Build the window [start, start + n) of the schedule as a problem
    /// anchored at `x0`.
    pub fn window(&self, start: usize, n: usize, x0: State) -> Problem {
        self.window_as(start, n, x0, self.formulation)
    }

    pub fn window_as(
        &self,
        start: usize,
        n: usize,
        x0: State,
        formulation: FormulationKind,
    ) -> Problem {
        let nodes = (start..start + n).map(|k| self.make_node(k, formulation)).collect();
        Problem { manifold: self.manifold.clone(), x0, nodes, terminal: self.terminal() }
    }

    /// The whole schedule as one problem, anchored at the spec's initial
    /// state.
    pub fn problem(&self) -> Problem {
        self.window(0, self.cycle_len, self.init_state())
    }

    pub fn problem_as(&self, formulation: FormulationKind) -> Problem {
        self.window_as(0, self.cycle_len, self.init_state(), formulation)
    }

    pub fn init_state(&self) -> State {
        State::new(
            DVector::from_vec(self.spec.init_q.clone()),
            DVector::from_vec(self.spec.init_v.clone()),
        )
    }

    /// Quasi-static controls for node k at posture `x`: zero accelerations,
    /// weight equally distributed over the active contacts, torques from
    /// the actuated inverse-dynamics rows.
    pub fn quasi_static_control(
        &self,
        k: usize,
        x: &State,
        formulation: FormulationKind,
    ) -> DVector<f64> {
        if self.is_impulse(k) {
            return DVector::zeros(0);
        }
        let nv = self.model.nv();
        let active = self.active_set(k);
        let nf = active.nf();
        let weight = -self.total_mass() * self.model.gravity[1];
        let n_active = active.frames.len().max(1);
        let mut lambda = DVector::zeros(nf);
        let mut off = 0;
        for f in &active.frames {
            lambda[off + f.rows - 1] = weight / n_active as f64;
            off += f.rows;
        }
        let zeros = DVector::zeros(nv);
        match formulation {
            FormulationKind::Condensed => {
                let mut u = DVector::zeros(nv + nf);
                u.rows_mut(nv, nf).copy_from(&lambda);
                u
            }
            FormulationKind::Redundant => {
                let ntau = self.actuation.ntau();
                let nf_swing: usize = self
                    .frames
                    .iter()
                    .enumerate()
                    .filter(|(f, _)| !self.is_active(*f, k))
                    .map(|(_, (_, fr))| fr.rows)
                    .sum();
                let tau =
                    recover_torque(&self.model, &self.actuation, &active, &x.q, &zeros, &zeros, &lambda)
                        .unwrap_or_else(|_| DVector::zeros(ntau));
                let mut u = DVector::zeros(nv + ntau + nf + nf_swing);
                u.rows_mut(nv, ntau).copy_from(&tau);
                u.rows_mut(nv + ntau, nf).copy_from(&lambda);
                u
            }
            FormulationKind::Forward => {
                recover_torque(&self.model, &self.actuation, &active, &x.q, &zeros, &zeros, &lambda)
                    .unwrap_or_else(|_| DVector::zeros(self.actuation.ntau()))
            }
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.model.base_mass + self.model.links.iter().map(|l| l.mass).sum::<f64>()
    }

    /// Constant-state quasi-static initial guess over [start, start + n).
    pub fn quasi_static_trajectory(&self, start: usize, n: usize, x0: &State) -> Trajectory {
        self.quasi_static_trajectory_as(start, n, x0, self.formulation)
    }

    pub fn quasi_static_trajectory_as(
        &self,
        start: usize,
        n: usize,
        x0: &State,
        formulation: FormulationKind,
    ) -> Trajectory {
        let states = vec![x0.clone(); n + 1];
        let controls =
            (start..start + n).map(|k| self.quasi_static_control(k, x0, formulation)).collect();
        Trajectory::new(states, controls)
    }
}

/// Build the spec's full problem together with its quasi-static guess.
pub fn build_problem(spec: ProblemSpec) -> Result<(ProblemBuilder, Problem, Trajectory), ModelError> {
    let builder = ProblemBuilder::new(spec)?;
    let problem = builder.problem();
    let x0 = builder.init_state();
    let traj = builder.quasi_static_trajectory(0, builder.total_nodes(), &x0);
    Ok((builder, problem, traj))
}
