//! Node models assembled from the rigid-body kernel.
//!
//! The kinodynamic node pairs the symplectic-Euler integrator with a
//! condensed or redundant inverse-dynamics equality constraint; impulse
//! nodes reset velocities at contact-gain transitions; the forward node is
//! the contact-forward-dynamics baseline without stagewise constraints.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::manifold::{wrap_angle, ManifoldSpec, State};
use crate::model::{CostExpansion, NodeModel, TerminalModel};
use crate::rigid::dynamics::point_state;
use crate::rigid::{
    assemble_condensed, assemble_redundant, contact_forward_dynamics, impulse_dynamics,
    ActuationModel, ContactFrame, ContactSet, PlanarModel,
};

use super::costs::{barrier_cost, friction_cone_penalty, planar_cone, weighted_tracking};

/// How the node encodes the dynamics feasibility.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeFormulation {
    /// u = (a, λ); under-actuation rows + contact rows.
    Condensed,
    /// u = (a, τ, λ_active, λ_swing); full inverse-dynamics rows, contact
    /// rows and zero-force rows for swing feet.
    Redundant,
    /// u = τ; dynamics integrate the contact forward dynamics, no h.
    Forward,
}

/// Swing-foot tracking reference for one node.
#[derive(Debug, Clone)]
pub struct SwingTarget {
    pub frame: ContactFrame,
    pub p_ref: [f64; 2],
    pub v_ref: [f64; 2],
}

/// Cost weights of one node (running costs are dt-scaled by the builder).
#[derive(Debug, Clone)]
pub struct NodeWeights {
    pub q: DVector<f64>,
    pub q_ref: DVector<f64>,
    pub v: DVector<f64>,
    pub acc: f64,
    pub tau: f64,
    pub force: f64,
    pub w_cone: f64,
    pub w_state: f64,
    pub w_control: f64,
    pub w_cpos: f64,
    pub w_cvel: f64,
}

/// Optional box bounds entering as quadratic barriers.
#[derive(Debug, Clone, Default)]
pub struct NodeBounds {
    pub x_lower: Option<DVector<f64>>,
    pub x_upper: Option<DVector<f64>>,
    pub u_lower: Option<DVector<f64>>,
    pub u_upper: Option<DVector<f64>>,
}

pub struct KinodynamicNode {
    pub manifold: ManifoldSpec,
    pub model: Arc<PlanarModel>,
    pub actuation: Arc<ActuationModel>,
    pub active: ContactSet,
    pub swing: Vec<SwingTarget>,
    pub formulation: NodeFormulation,
    pub dt: f64,
    pub weights: NodeWeights,
    pub bounds: NodeBounds,
    pub friction: Option<f64>,
}

impl KinodynamicNode {
    fn nv(&self) -> usize {
        self.model.nv()
    }

    fn nf_active(&self) -> usize {
        self.active.nf()
    }

    fn nf_swing(&self) -> usize {
        self.swing.iter().map(|s| s.frame.rows).sum()
    }

    /// Control layout offsets: (acceleration, torque, active forces, swing
    /// forces).
    fn u_layout(&self) -> (usize, usize, usize, usize) {
        let nv = self.nv();
        match self.formulation {
            NodeFormulation::Condensed => (0, nv, nv, nv + self.nf_active()),
            NodeFormulation::Redundant => {
                let nt = self.actuation.ntau();
                (0, nv, nv + nt, nv + nt + self.nf_active())
            }
            NodeFormulation::Forward => (0, 0, 0, 0),
        }
    }

    fn split_u<'a>(&self, u: &'a DVector<f64>) -> (DVector<f64>, DVector<f64>, DVector<f64>, &'a DVector<f64>) {
        let (a0, t0, l0, s0) = self.u_layout();
        let nv = self.nv();
        let a = u.rows(a0, nv).clone_owned();
        let tau = u.rows(t0, l0 - t0).clone_owned();
        let lam = u.rows(l0, s0 - l0).clone_owned();
        (a, tau, lam, u)
    }

    fn accel_of(&self, u: &DVector<f64>, x: &State) -> DVector<f64> {
        match self.formulation {
            NodeFormulation::Forward => {
                let force = DVector::from_vec(self.actuation.map::<f64>(
                    x.q.as_slice(),
                    x.v.as_slice(),
                    u.as_slice(),
                ));
                contact_forward_dynamics(&self.model, &self.active, &x.q, &x.v, &force)
                    .map(|fd| fd.vdot)
                    .unwrap_or_else(|_| DVector::from_element(self.nv(), f64::NAN))
            }
            _ => u.rows(0, self.nv()).clone_owned(),
        }
    }
}

impl NodeModel for KinodynamicNode {
    fn manifold(&self) -> &ManifoldSpec {
        &self.manifold
    }

    fn nu(&self) -> usize {
        match self.formulation {
            NodeFormulation::Condensed => self.nv() + self.nf_active(),
            NodeFormulation::Redundant => {
                self.nv() + self.actuation.ntau() + self.nf_active() + self.nf_swing()
            }
            NodeFormulation::Forward => self.actuation.ntau(),
        }
    }

    fn nh(&self) -> usize {
        match self.formulation {
            NodeFormulation::Condensed => self.actuation.n_underactuated() + self.nf_active(),
            NodeFormulation::Redundant => self.nv() + self.nf_active() + self.nf_swing(),
            NodeFormulation::Forward => 0,
        }
    }

    fn cost(&self, x: &State, u: &DVector<f64>) -> f64 {
        self.cost_terms(x, u).0
    }

    fn cost_expansion(&self, x: &State, u: &DVector<f64>) -> CostExpansion {
        self.cost_terms(x, u).1
    }

    fn dynamics(&self, x: &State, u: &DVector<f64>) -> State {
        let a = self.accel_of(u, x);
        let v_next = &x.v + &a * self.dt;
        let mut q_next = &x.q + &v_next * self.dt;
        for &i in &self.manifold.wrap_indices {
            q_next[i] = wrap_angle(q_next[i]);
        }
        State::new(q_next, v_next)
    }

    fn dynamics_jacobians(&self, x: &State, u: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        let nv = self.nv();
        let nu = self.nu();
        let dt = self.dt;
        let mut fx = DMatrix::zeros(2 * nv, 2 * nv);
        let mut fu = DMatrix::zeros(2 * nv, nu);
        match self.formulation {
            NodeFormulation::Forward => {
                // v' = v + vdot(q, v, tau) dt; q' = q + v' dt.
                let force = DVector::from_vec(self.actuation.map::<f64>(
                    x.q.as_slice(),
                    x.v.as_slice(),
                    u.as_slice(),
                ));
                let fd = contact_forward_dynamics(&self.model, &self.active, &x.q, &x.v, &force)
                    .expect("forward dynamics solvable at linearization point");
                let da_dtau = self.actuation.d_tau(&x.q);
                let da_dq = self.actuation.d_q(&x.q, u);
                let da_dv = self.actuation.d_v(&x.q, u);
                let dvdot_dq = &fd.dvdot_dq + &fd.dvdot_df * &da_dq;
                let dvdot_dv = &fd.dvdot_dv + &fd.dvdot_df * &da_dv;
                let dvdot_du = &fd.dvdot_df * &da_dtau;
                // v-rows
                let vq = &dvdot_dq * dt;
                let vv = DMatrix::identity(nv, nv) + &dvdot_dv * dt;
                let vu = &dvdot_du * dt;
                // q-rows
                for r in 0..nv {
                    for c in 0..nv {
                        fx[(r, c)] = if r == c { 1.0 } else { 0.0 } + vq[(r, c)] * dt;
                        fx[(r, nv + c)] = vv[(r, c)] * dt;
                        fx[(nv + r, c)] = vq[(r, c)];
                        fx[(nv + r, nv + c)] = vv[(r, c)];
                    }
                    for c in 0..nu {
                        fu[(r, c)] = vu[(r, c)] * dt;
                        fu[(nv + r, c)] = vu[(r, c)];
                    }
                }
            }
            _ => {
                // q' = q + v dt + a dt²; v' = v + a dt.
                for i in 0..nv {
                    fx[(i, i)] = 1.0;
                    fx[(i, nv + i)] = dt;
                    fx[(nv + i, nv + i)] = 1.0;
                    fu[(i, i)] = dt * dt;
                    fu[(nv + i, i)] = dt;
                }
            }
        }
        (fx, fu)
    }

    fn constraint(&self, x: &State, u: &DVector<f64>) -> DVector<f64> {
        match self.formulation {
            NodeFormulation::Forward => DVector::zeros(0),
            NodeFormulation::Condensed => {
                let (a, _, lam, _) = self.split_u(u);
                assemble_condensed(&self.model, &self.actuation, &self.active, &x.q, &x.v, &a, &lam)
                    .h
            }
            NodeFormulation::Redundant => {
                let (a, tau, lam, full) = self.split_u(u);
                let blocks = assemble_redundant(
                    &self.model,
                    &self.actuation,
                    &self.active,
                    &x.q,
                    &x.v,
                    &a,
                    &tau,
                    &lam,
                );
                let nswing = self.nf_swing();
                let mut h = DVector::zeros(blocks.h.len() + nswing);
                h.rows_mut(0, blocks.h.len()).copy_from(&blocks.h);
                let (_, _, _, s0) = self.u_layout();
                for i in 0..nswing {
                    h[blocks.h.len() + i] = full[s0 + i];
                }
                h
            }
        }
    }

    fn constraint_jacobians(&self, x: &State, u: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        let nv = self.nv();
        let nu = self.nu();
        match self.formulation {
            NodeFormulation::Forward => (DMatrix::zeros(0, 2 * nv), DMatrix::zeros(0, nu)),
            NodeFormulation::Condensed => {
                let (a, _, lam, _) = self.split_u(u);
                let blocks = assemble_condensed(
                    &self.model,
                    &self.actuation,
                    &self.active,
                    &x.q,
                    &x.v,
                    &a,
                    &lam,
                );
                (blocks.hx, blocks.hu)
            }
            NodeFormulation::Redundant => {
                let (a, tau, lam, _) = self.split_u(u);
                let blocks = assemble_redundant(
                    &self.model,
                    &self.actuation,
                    &self.active,
                    &x.q,
                    &x.v,
                    &a,
                    &tau,
                    &lam,
                );
                let nh0 = blocks.h.len();
                let nswing = self.nf_swing();
                let mut hx = DMatrix::zeros(nh0 + nswing, 2 * nv);
                hx.view_mut((0, 0), (nh0, 2 * nv)).copy_from(&blocks.hx);
                let mut hu = DMatrix::zeros(nh0 + nswing, nu);
                hu.view_mut((0, 0), (nh0, blocks.hu.ncols())).copy_from(&blocks.hu);
                let (_, _, _, s0) = self.u_layout();
                for i in 0..nswing {
                    hu[(nh0 + i, s0 + i)] = 1.0;
                }
                (hx, hu)
            }
        }
    }

    fn sparse_fu_cols(&self) -> Option<usize> {
        match self.formulation {
            NodeFormulation::Forward => None,
            _ => Some(self.nv()),
        }
    }
}

impl KinodynamicNode {
    fn cost_terms(&self, x: &State, u: &DVector<f64>) -> (f64, CostExpansion) {
        let nv = self.nv();
        let nu = self.nu();
        let dt = self.dt;
        let w = &self.weights;
        let mut cost = 0.0;
        let mut lx = DVector::zeros(2 * nv);
        let mut lu = DVector::zeros(nu);
        let mut lxx = DMatrix::zeros(2 * nv, 2 * nv);
        let lxu = DMatrix::zeros(2 * nv, nu);
        let mut luu = DMatrix::zeros(nu, nu);

        // Posture tracking on the shortest-arc configuration error.
        let mut qerr = DVector::zeros(nv);
        for i in 0..nv {
            qerr[i] = x.q[i] - w.q_ref[i];
        }
        for &i in &self.manifold.wrap_indices {
            qerr[i] = wrap_angle(qerr[i]);
        }
        let t = weighted_tracking(&qerr, &DVector::zeros(nv), &(dt * &w.q));
        cost += t.value;
        lx.rows_mut(0, nv).add_scaled(&t.grad, 1.0);
        lxx.view_mut((0, 0), (nv, nv)).add_scaled_mat(&t.hess, 1.0);

        let t = weighted_tracking(&x.v, &DVector::zeros(nv), &(dt * &w.v));
        cost += t.value;
        lx.rows_mut(nv, nv).add_scaled(&t.grad, 1.0);
        lxx.view_mut((nv, nv), (nv, nv)).add_scaled_mat(&t.hess, 1.0);

        // Control regularization per block.
        let (a0, t0, l0, s0) = self.u_layout();
        let blocks: [(usize, usize, f64); 4] = match self.formulation {
            NodeFormulation::Forward => [(0, nu, w.tau), (0, 0, 0.0), (0, 0, 0.0), (0, 0, 0.0)],
            NodeFormulation::Condensed => {
                [(a0, nv, w.acc), (l0, s0 - l0, w.force), (0, 0, 0.0), (0, 0, 0.0)]
            }
            NodeFormulation::Redundant => [
                (a0, nv, w.acc),
                (t0, l0 - t0, w.tau),
                (l0, s0 - l0, w.force),
                (s0, nu - s0, w.force),
            ],
        };
        for (off, len, wgt) in blocks {
            for i in off..off + len {
                cost += dt * wgt * u[i] * u[i];
                lu[i] += 2.0 * dt * wgt * u[i];
                luu[(i, i)] += 2.0 * dt * wgt;
            }
        }

        // Friction-cone penalty on each active 2-row contact force.
        if let Some(mu) = self.friction {
            if w.w_cone > 0.0 && self.formulation != NodeFormulation::Forward {
                let (cmat, cvec) = planar_cone(mu);
                let mut off = l0;
                for f in &self.active.frames {
                    if f.rows == 2 {
                        let lam = u.rows(off, 2).clone_owned();
                        let t = friction_cone_penalty(&lam, &cmat, &cvec, dt * w.w_cone);
                        cost += t.value;
                        lu.rows_mut(off, 2).add_scaled(&t.grad, 1.0);
                        luu.view_mut((off, off), (2, 2)).add_scaled_mat(&t.hess, 1.0);
                    }
                    off += f.rows;
                }
            }
        }

        // State bounds barrier on [q; v].
        if w.w_state > 0.0 && (self.bounds.x_lower.is_some() || self.bounds.x_upper.is_some()) {
            let xv = {
                let mut s = DVector::zeros(2 * nv);
                s.rows_mut(0, nv).copy_from(&x.q);
                s.rows_mut(nv, nv).copy_from(&x.v);
                s
            };
            let t = barrier_cost(
                &xv,
                self.bounds.x_lower.as_ref(),
                self.bounds.x_upper.as_ref(),
                dt * w.w_state,
            );
            cost += t.value;
            lx += &t.grad;
            lxx += &t.hess;
        }
        if w.w_control > 0.0 && (self.bounds.u_lower.is_some() || self.bounds.u_upper.is_some()) {
            let t = barrier_cost(
                u,
                self.bounds.u_lower.as_ref(),
                self.bounds.u_upper.as_ref(),
                dt * w.w_control,
            );
            cost += t.value;
            lu += &t.grad;
            luu += &t.hess;
        }

        // Swing-foot placement and velocity tracking through the kinematics.
        for s in &self.swing {
            let (term, gq, gv, hqq, hqv, hvv) = swing_cost(
                &self.model,
                &s.frame,
                &x.q,
                &x.v,
                s.p_ref,
                s.v_ref,
                dt * w.w_cpos,
                dt * w.w_cvel,
            );
            cost += term;
            lx.rows_mut(0, nv).add_scaled(&gq, 1.0);
            lx.rows_mut(nv, nv).add_scaled(&gv, 1.0);
            lxx.view_mut((0, 0), (nv, nv)).add_scaled_mat(&hqq, 1.0);
            lxx.view_mut((0, nv), (nv, nv)).add_scaled_mat(&hqv, 1.0);
            lxx.view_mut((nv, 0), (nv, nv)).add_scaled_mat(&hqv.transpose(), 1.0);
            lxx.view_mut((nv, nv), (nv, nv)).add_scaled_mat(&hvv, 1.0);
        }

        (cost, CostExpansion { lx, lu, lxx, lxu, luu })
    }
}

/// Tracking cost of one foot point: w_p ‖p − p_ref‖² + w_v ‖ṗ − ṗ_ref‖²,
/// Gauss-Newton through the point kinematics.
#[allow(clippy::too_many_arguments)]
fn swing_cost(
    model: &PlanarModel,
    frame: &ContactFrame,
    q: &DVector<f64>,
    v: &DVector<f64>,
    p_ref: [f64; 2],
    v_ref: [f64; 2],
    w_pos: f64,
    w_vel: f64,
) -> (f64, DVector<f64>, DVector<f64>, DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let nv = model.nv();
    let st = point_state(model, frame, q, v);
    let mut cost = 0.0;
    let mut gq = DVector::zeros(nv);
    let mut gv = DVector::zeros(nv);
    let mut hqq = DMatrix::zeros(nv, nv);
    let mut hqv = DMatrix::zeros(nv, nv);
    let mut hvv = DMatrix::zeros(nv, nv);
    for axis in 0..2 {
        let ep = st.p[axis] - p_ref[axis];
        cost += w_pos * ep * ep;
        let jp = st.dp_dq.row(axis);
        for i in 0..nv {
            gq[i] += 2.0 * w_pos * ep * jp[i];
            for j in 0..nv {
                hqq[(i, j)] += 2.0 * w_pos * jp[i] * jp[j];
            }
        }
        let ev = st.pdot[axis] - v_ref[axis];
        cost += w_vel * ev * ev;
        let jvq = st.dpdot_dq.row(axis);
        let jvv = st.dpdot_dv.row(axis);
        for i in 0..nv {
            gq[i] += 2.0 * w_vel * ev * jvq[i];
            gv[i] += 2.0 * w_vel * ev * jvv[i];
            for j in 0..nv {
                hqq[(i, j)] += 2.0 * w_vel * jvq[i] * jvq[j];
                hqv[(i, j)] += 2.0 * w_vel * jvq[i] * jvv[j];
                hvv[(i, j)] += 2.0 * w_vel * jvv[i] * jvv[j];
            }
        }
    }
    (cost, gq, gv, hqq, hqv, hvv)
}

/// Contact-gain transition: q' = q, v' = impulse map, no controls.
pub struct ImpulseNode {
    pub manifold: ManifoldSpec,
    pub model: Arc<PlanarModel>,
    /// Contacts gaining support at this node.
    pub impact: ContactSet,
}

impl NodeModel for ImpulseNode {
    fn manifold(&self) -> &ManifoldSpec {
        &self.manifold
    }

    fn nu(&self) -> usize {
        0
    }

    fn nh(&self) -> usize {
        0
    }

    fn cost(&self, _x: &State, _u: &DVector<f64>) -> f64 {
        0.0
    }

    fn cost_expansion(&self, _x: &State, _u: &DVector<f64>) -> CostExpansion {
        let nx = self.manifold.nx_tangent();
        CostExpansion {
            lx: DVector::zeros(nx),
            lu: DVector::zeros(0),
            lxx: DMatrix::zeros(nx, nx),
            lxu: DMatrix::zeros(nx, 0),
            luu: DMatrix::zeros(0, 0),
        }
    }

    fn dynamics(&self, x: &State, _u: &DVector<f64>) -> State {
        match impulse_dynamics(&self.model, &self.impact, &x.q, &x.v) {
            Ok(r) => State::new(x.q.clone(), r.v_plus),
            Err(_) => State::new(
                x.q.clone(),
                DVector::from_element(x.v.len(), f64::NAN),
            ),
        }
    }

    fn dynamics_jacobians(&self, x: &State, _u: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        let nv = self.model.nv();
        let r = impulse_dynamics(&self.model, &self.impact, &x.q, &x.v)
            .expect("impulse KKT solvable at linearization point");
        let mut fx = DMatrix::zeros(2 * nv, 2 * nv);
        for i in 0..nv {
            fx[(i, i)] = 1.0;
        }
        fx.view_mut((nv, 0), (nv, nv)).copy_from(&r.dv_dq);
        fx.view_mut((nv, nv), (nv, nv)).copy_from(&r.dv_dvm);
        (fx, DMatrix::zeros(2 * nv, 0))
    }
}

/// Terminal posture/velocity tracking.
pub struct TrackingTerminal {
    pub manifold: ManifoldSpec,
    pub q_ref: DVector<f64>,
    pub v_ref: DVector<f64>,
    pub wq: DVector<f64>,
    pub wv: DVector<f64>,
}

impl TerminalModel for TrackingTerminal {
    fn cost(&self, x: &State) -> f64 {
        self.expansion(x).0
    }

    fn cost_expansion(&self, x: &State) -> (DVector<f64>, DMatrix<f64>) {
        let (_, lx, lxx) = self.expansion(x);
        (lx, lxx)
    }
}

impl TrackingTerminal {
    fn expansion(&self, x: &State) -> (f64, DVector<f64>, DMatrix<f64>) {
        let nv = self.v_ref.len();
        let mut qerr = &x.q - &self.q_ref;
        for &i in &self.manifold.wrap_indices {
            qerr[i] = wrap_angle(qerr[i]);
        }
        let tq = weighted_tracking(&qerr, &DVector::zeros(nv), &self.wq);
        let tv = weighted_tracking(&x.v, &self.v_ref, &self.wv);
        let mut lx = DVector::zeros(2 * nv);
        lx.rows_mut(0, nv).copy_from(&tq.grad);
        lx.rows_mut(nv, nv).copy_from(&tv.grad);
        let mut lxx = DMatrix::zeros(2 * nv, 2 * nv);
        lxx.view_mut((0, 0), (nv, nv)).copy_from(&tq.hess);
        lxx.view_mut((nv, nv), (nv, nv)).copy_from(&tv.hess);
        (tq.value + tv.value, lx, lxx)
    }
}

trait AddScaled {
    fn add_scaled(&mut self, v: &DVector<f64>, s: f64);
}

impl<S: nalgebra::storage::StorageMut<f64, nalgebra::Dyn, nalgebra::U1>> AddScaled
    for nalgebra::Matrix<f64, nalgebra::Dyn, nalgebra::U1, S>
{
    fn add_scaled(&mut self, v: &DVector<f64>, s: f64) {
        for i in 0..v.len() {
            self[i] += s * v[i];
        }
    }
}

trait AddScaledMat {
    fn add_scaled_mat(&mut self, m: &DMatrix<f64>, s: f64);
}

impl<S: nalgebra::storage::StorageMut<f64, nalgebra::Dyn, nalgebra::Dyn>> AddScaledMat
    for nalgebra::Matrix<f64, nalgebra::Dyn, nalgebra::Dyn, S>
{
    fn add_scaled_mat(&mut self, m: &DMatrix<f64>, s: f64) {
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                self[(r, c)] += s * m[(r, c)];
            }
        }
    }
}
