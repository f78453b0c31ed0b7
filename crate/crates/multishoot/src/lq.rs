//! Linear-quadratic node models.
//!
//! Useful as solver benchmarks and as exact references in tests: on these
//! problems the backward pass is an exact Newton step.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::manifold::{ManifoldSpec, State};
use crate::model::{CostExpansion, NodeModel, Problem, TerminalModel};

/// f = A x + B u + c with quadratic cost and optional linear constraint
/// h = C x + D u + e, on a Euclidean manifold.
#[derive(Debug, Clone)]
pub struct LqNode {
    spec: ManifoldSpec,
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DVector<f64>,
    pub lxx: DMatrix<f64>,
    pub lxu: DMatrix<f64>,
    pub luu: DMatrix<f64>,
    pub lx: DVector<f64>,
    pub lu: DVector<f64>,
    pub hc: DMatrix<f64>,
    pub hd: DMatrix<f64>,
    pub he: DVector<f64>,
}

impl LqNode {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DVector<f64>) -> Self {
        let nx = a.nrows();
        let nu = b.ncols();
        Self {
            spec: ManifoldSpec::euclidean(nx),
            a,
            b,
            c,
            lxx: DMatrix::identity(nx, nx),
            lxu: DMatrix::zeros(nx, nu),
            luu: DMatrix::identity(nu, nu),
            lx: DVector::zeros(nx),
            lu: DVector::zeros(nu),
            hc: DMatrix::zeros(0, nx),
            hd: DMatrix::zeros(0, nu),
            he: DVector::zeros(0),
        }
    }

    pub fn with_cost(
        mut self,
        lxx: DMatrix<f64>,
        lxu: DMatrix<f64>,
        luu: DMatrix<f64>,
        lx: DVector<f64>,
        lu: DVector<f64>,
    ) -> Self {
        self.lxx = lxx;
        self.lxu = lxu;
        self.luu = luu;
        self.lx = lx;
        self.lu = lu;
        self
    }

    pub fn with_constraint(mut self, c: DMatrix<f64>, d: DMatrix<f64>, e: DVector<f64>) -> Self {
        self.hc = c;
        self.hd = d;
        self.he = e;
        self
    }
}

impl NodeModel for LqNode {
    fn manifold(&self) -> &ManifoldSpec {
        &self.spec
    }

    fn nu(&self) -> usize {
        self.b.ncols()
    }

    fn nh(&self) -> usize {
        self.hd.nrows()
    }

    fn cost(&self, x: &State, u: &DVector<f64>) -> f64 {
        let x = &x.v;
        0.5 * (x.dot(&(&self.lxx * x)) + u.dot(&(&self.luu * u)))
            + u.dot(&(self.lxu.transpose() * x))
            + self.lx.dot(x)
            + self.lu.dot(u)
    }

    fn cost_expansion(&self, x: &State, u: &DVector<f64>) -> CostExpansion {
        let xv = &x.v;
        CostExpansion {
            lx: &self.lx + &self.lxx * xv + &self.lxu * u,
            lu: &self.lu + self.lxu.transpose() * xv + &self.luu * u,
            lxx: self.lxx.clone(),
            lxu: self.lxu.clone(),
            luu: self.luu.clone(),
        }
    }

    fn dynamics(&self, x: &State, u: &DVector<f64>) -> State {
        State::new(DVector::zeros(0), &self.a * &x.v + &self.b * u + &self.c)
    }

    fn dynamics_jacobians(&self, _x: &State, _u: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        (self.a.clone(), self.b.clone())
    }

    fn constraint(&self, x: &State, u: &DVector<f64>) -> DVector<f64> {
        if self.nh() == 0 {
            return DVector::zeros(0);
        }
        &self.hc * &x.v + &self.hd * u + &self.he
    }

    fn constraint_jacobians(&self, _x: &State, _u: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        (self.hc.clone(), self.hd.clone())
    }
}

/// Quadratic terminal cost ½ xᵀ Lxx x + lxᵀ x.
#[derive(Debug, Clone)]
pub struct LqTerminal {
    pub lxx: DMatrix<f64>,
    pub lx: DVector<f64>,
}

impl LqTerminal {
    pub fn new(lxx: DMatrix<f64>, lx: DVector<f64>) -> Self {
        Self { lxx, lx }
    }

    pub fn identity(nx: usize) -> Self {
        Self { lxx: DMatrix::identity(nx, nx), lx: DVector::zeros(nx) }
    }
}

impl TerminalModel for LqTerminal {
    fn cost(&self, x: &State) -> f64 {
        0.5 * x.v.dot(&(&self.lxx * &x.v)) + self.lx.dot(&x.v)
    }

    fn cost_expansion(&self, x: &State) -> (DVector<f64>, DMatrix<f64>) {
        (&self.lx + &self.lxx * &x.v, self.lxx.clone())
    }
}

/// Assemble a Problem from LQ nodes sharing one state dimension.
pub fn lq_problem_from_nodes(nodes: Vec<LqNode>, terminal: LqTerminal, x0: State) -> Problem {
    let manifold = nodes.first().expect("at least one node").manifold().clone();
    Problem {
        manifold,
        x0,
        nodes: nodes.into_iter().map(|n| Arc::new(n) as Arc<dyn NodeModel>).collect(),
        terminal: Arc::new(terminal),
    }
}
