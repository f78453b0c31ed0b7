//! Per-node model interface and the discrete problem container.
//!
//! A problem is N node models plus a terminal cost model and an initial
//! state. Node models expose cost, kinematic dynamics f, equality constraint
//! h and their first derivatives in tangent coordinates; the solver never
//! touches manifold charts directly.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::ModelError;
use crate::manifold::{difference, ManifoldSpec, State};

/// First derivatives of the stage cost, Gauss-Newton Hessian blocks.
#[derive(Debug, Clone)]
pub struct CostExpansion {
    pub lx: DVector<f64>,
    pub lu: DVector<f64>,
    pub lxx: DMatrix<f64>,
    pub lxu: DMatrix<f64>,
    pub luu: DMatrix<f64>,
}

/// One node of a discrete optimal control problem.
///
/// Jacobians are expressed on tangent coordinates: the ⊕/⊖ chart Jacobians
/// are folded in by the implementation (identity for the angle-wrap charts
/// this crate provides). Implementations must be safe for concurrent reads.
pub trait NodeModel: Send + Sync {
    fn manifold(&self) -> &ManifoldSpec;
    fn nu(&self) -> usize;
    fn nh(&self) -> usize;

    fn cost(&self, x: &State, u: &DVector<f64>) -> f64;
    fn cost_expansion(&self, x: &State, u: &DVector<f64>) -> CostExpansion;

    /// Kinematic integrator f(x, u).
    fn dynamics(&self, x: &State, u: &DVector<f64>) -> State;
    /// (f_x, f_u) on tangent coordinates.
    fn dynamics_jacobians(&self, x: &State, u: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>);

    /// Equality constraint h(x, u); empty vector when nh = 0.
    fn constraint(&self, x: &State, u: &DVector<f64>) -> DVector<f64> {
        let _ = (x, u);
        DVector::zeros(0)
    }
    fn constraint_jacobians(&self, x: &State, u: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        let _ = (x, u);
        (DMatrix::zeros(0, self.manifold().nx_tangent()), DMatrix::zeros(0, self.nu()))
    }

    /// Width of the leading f_a block when f_u = [f_a 0] (functional
    /// sparsity of inverse-dynamics inputs). None means dense f_u.
    fn sparse_fu_cols(&self) -> Option<usize> {
        None
    }
}

/// Terminal node: cost only.
pub trait TerminalModel: Send + Sync {
    fn cost(&self, x: &State) -> f64;
    /// (l_x, L_xx) at x.
    fn cost_expansion(&self, x: &State) -> (DVector<f64>, DMatrix<f64>);
}

/// Discrete problem: initial state, N node models, terminal model.
pub struct Problem {
    pub manifold: ManifoldSpec,
    pub x0: State,
    pub nodes: Vec<Arc<dyn NodeModel>>,
    pub terminal: Arc<dyn TerminalModel>,
}

impl Problem {
    pub fn horizon(&self) -> usize {
        self.nodes.len()
    }
}

/// Linearization of one node around (x, u), with the gap against the stored
/// next state.
#[derive(Debug, Clone)]
pub struct NodeData {
    pub cost_value: f64,
    pub lx: DVector<f64>,
    pub lu: DVector<f64>,
    pub lxx: DMatrix<f64>,
    pub lxu: DMatrix<f64>,
    pub luu: DMatrix<f64>,
    pub fx: DMatrix<f64>,
    pub fu: DMatrix<f64>,
    pub hx: DMatrix<f64>,
    pub hu: DMatrix<f64>,
    /// f(x, u) ⊖ x'.
    pub f_gap: DVector<f64>,
    /// h(x, u).
    pub h_gap: DVector<f64>,
    /// Width of the leading f_a block when f_u = [f_a 0].
    pub sparse_fu_cols: Option<usize>,
}

impl NodeData {
    pub fn is_finite(&self) -> bool {
        let dv = |v: &DVector<f64>| v.iter().all(|x| x.is_finite());
        let dm = |m: &DMatrix<f64>| m.iter().all(|x| x.is_finite());
        self.cost_value.is_finite()
            && dv(&self.lx)
            && dv(&self.lu)
            && dm(&self.lxx)
            && dm(&self.lxu)
            && dm(&self.luu)
            && dm(&self.fx)
            && dm(&self.fu)
            && dm(&self.hx)
            && dm(&self.hu)
            && dv(&self.f_gap)
            && dv(&self.h_gap)
    }
}

/// Populate the full linearization of `model` at (x, u), with the dynamics
/// gap measured against `x_next`.
pub fn linearize_node(
    model: &dyn NodeModel,
    node_index: usize,
    x: &State,
    x_next: &State,
    u: &DVector<f64>,
) -> Result<NodeData, ModelError> {
    let spec = model.manifold();
    let cost_value = model.cost(x, u);
    let exp = model.cost_expansion(x, u);
    let (fx, fu) = model.dynamics_jacobians(x, u);
    let f_next = model.dynamics(x, u);
    let f_gap = difference(spec, &f_next, x_next)?;
    let (hx, hu) = model.constraint_jacobians(x, u);
    let h_gap = model.constraint(x, u);
    let data = NodeData {
        cost_value,
        lx: exp.lx,
        lu: exp.lu,
        lxx: exp.lxx,
        lxu: exp.lxu,
        luu: exp.luu,
        fx,
        fu,
        hx,
        hu,
        f_gap,
        h_gap,
        sparse_fu_cols: model.sparse_fu_cols(),
    };
    if !data.is_finite() {
        return Err(ModelError::NonFinite { node: node_index });
    }
    Ok(data)
}

/// State sequence, control sequence and per-node infeasibility measures.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub states: Vec<State>,
    pub controls: Vec<DVector<f64>>,
    /// Per node: ‖f̄ₖ‖₁ + ‖h̄ₖ‖₁ with f̄ₖ the node's own dynamics gap.
    pub infeasibility: Vec<f64>,
}

impl Trajectory {
    pub fn new(states: Vec<State>, controls: Vec<DVector<f64>>) -> Self {
        assert_eq!(states.len(), controls.len() + 1, "|states| must equal |controls| + 1");
        let n = controls.len();
        Self { states, controls, infeasibility: vec![0.0; n] }
    }

    pub fn horizon(&self) -> usize {
        self.controls.len()
    }

    pub fn is_finite(&self) -> bool {
        self.states.iter().all(State::is_finite)
            && self.controls.iter().all(|u| u.iter().all(|x| x.is_finite()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lq::{lq_problem_from_nodes, LqNode, LqTerminal};
    use approx::assert_abs_diff_eq;
    use nalgebra::{DMatrix, DVector};

    #[test]
    fn linearize_linear_quadratic_node_is_exact() {
        let nx = 3;
        let nu = 2;
        let a = DMatrix::from_row_slice(nx, nx, &[1.0, 0.1, 0.0, 0.0, 1.0, 0.2, 0.0, 0.0, 0.9]);
        let b = DMatrix::from_row_slice(nx, nu, &[0.0, 0.0, 0.5, 0.0, 0.0, 1.0]);
        let c_mat = DMatrix::from_row_slice(1, nx, &[1.0, -1.0, 0.0]);
        let d_mat = DMatrix::from_row_slice(1, nu, &[1.0, 2.0]);
        let node = LqNode::new(a.clone(), b.clone(), DVector::zeros(nx))
            .with_constraint(c_mat.clone(), d_mat.clone(), DVector::zeros(1));
        let x = State::new(DVector::zeros(0), DVector::from_vec(vec![0.4, -0.2, 1.0]));
        let u = DVector::from_vec(vec![0.3, -0.1]);
        let x_next = node.dynamics(&x, &u);
        let data = linearize_node(&node, 0, &x, &x_next, &u).unwrap();
        assert_eq!(data.fx, a);
        assert_eq!(data.fu, b);
        assert_eq!(data.hx, c_mat);
        assert_eq!(data.hu, d_mat);
        // feasible rollout point -> zero gap
        assert!(data.f_gap.amax() <= 1e-14);
    }

    #[test]
    fn trajectory_length_invariant() {
        let spec = ManifoldSpec::euclidean(2);
        let states = vec![State::zeros(&spec); 4];
        let controls = vec![DVector::zeros(1); 3];
        let t = Trajectory::new(states, controls);
        assert_eq!(t.horizon(), 3);
    }

    #[test]
    fn problem_container_dimensions() {
        let mut nodes: Vec<LqNode> = Vec::new();
        for _ in 0..3 {
            nodes.push(LqNode::new(
                DMatrix::identity(2, 2),
                DMatrix::identity(2, 2),
                DVector::zeros(2),
            ));
        }
        let p = lq_problem_from_nodes(
            nodes,
            LqTerminal::identity(2),
            State::new(DVector::zeros(0), DVector::zeros(2)),
        );
        assert_eq!(p.horizon(), 3);
        assert_eq!(p.manifold.nx_tangent(), 2);
    }

    #[test]
    fn nonfinite_model_output_is_reported_with_node_index() {
        let node = LqNode::new(
            DMatrix::from_vec(1, 1, vec![f64::NAN]),
            DMatrix::identity(1, 1),
            DVector::zeros(1),
        );
        let x = State::new(DVector::zeros(0), DVector::from_vec(vec![1.0]));
        let u = DVector::from_vec(vec![0.0]);
        let err = linearize_node(&node, 7, &x, &x, &u).unwrap_err();
        assert_eq!(err, ModelError::NonFinite { node: 7 });
    }

    #[test]
    fn finite_difference_jacobians_match_on_random_smooth_nodes() {
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let mut rng = StdRng::seed_from_u64(17);
        for _ in 0..100 {
            let nx = rng.gen_range(1..5);
            let nu = rng.gen_range(1..4);
            let nh = rng.gen_range(0..=nu.min(nx));
            let a = DMatrix::from_fn(nx, nx, |_, _| rng.gen_range(-1.0..1.0));
            let b = DMatrix::from_fn(nx, nu, |_, _| rng.gen_range(-1.0..1.0));
            let mut node =
                LqNode::new(a, b, DVector::from_fn(nx, |_, _| rng.gen_range(-0.5..0.5)));
            if nh > 0 {
                node = node.with_constraint(
                    DMatrix::from_fn(nh, nx, |_, _| rng.gen_range(-1.0..1.0)),
                    DMatrix::from_fn(nh, nu, |_, _| rng.gen_range(-1.0..1.0)),
                    DVector::from_fn(nh, |_, _| rng.gen_range(-0.5..0.5)),
                );
            }
            let x = State::new(DVector::zeros(0), DVector::from_fn(nx, |_, _| rng.gen_range(-1.0..1.0)));
            let u = DVector::from_fn(nu, |_, _| rng.gen_range(-1.0..1.0));
            let x_next = node.dynamics(&x, &u);
            let data = linearize_node(&node, 0, &x, &x_next, &u).unwrap();

            let spec = node.manifold().clone();
            let eps = 1e-6;
            for i in 0..nx {
                let mut dxp = DVector::zeros(nx);
                dxp[i] = eps;
                let xp = crate::manifold::integrate(&spec, &x, &dxp).unwrap();
                dxp[i] = -eps;
                let xm = crate::manifold::integrate(&spec, &x, &dxp).unwrap();
                let col = difference(&spec, &node.dynamics(&xp, &u), &node.dynamics(&xm, &u))
                    .unwrap()
                    / (2.0 * eps);
                for r in 0..nx {
                    assert_abs_diff_eq!(
                        data.fx[(r, i)],
                        col[r],
                        epsilon = 1e-5 * (1.0 + col[r].abs())
                    );
                }
                if nh > 0 {
                    let colh = (node.constraint(&xp, &u) - node.constraint(&xm, &u)) / (2.0 * eps);
                    for r in 0..nh {
                        assert_abs_diff_eq!(
                            data.hx[(r, i)],
                            colh[r],
                            epsilon = 1e-5 * (1.0 + colh[r].abs())
                        );
                    }
                }
            }
        }
    }
}
