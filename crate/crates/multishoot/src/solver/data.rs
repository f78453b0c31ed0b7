//! Derivative stage: per-node linearization and the value-independent
//! nullspace precomputations (Alg. lines that may run in parallel).

use nalgebra::{DMatrix, DVector};

use crate::error::ModelError;
use crate::factor::{basis_decompose, square_solve, BasisMethod, BasisPair};
use crate::manifold::difference;
use crate::model::{linearize_node, NodeData, Problem, Trajectory};
use crate::solver::Factorization;

/// Value-independent per-node products for the nullspace path.
#[derive(Debug, Clone, Default)]
pub struct NodePrecomp {
    pub basis: Option<BasisPair>,
    /// Ψ = Y (h_u Y)^-1, nu × nh.
    pub psi: Option<DMatrix<f64>>,
    /// Ψ h̄.
    pub psi_h: Option<DVector<f64>>,
    /// Ψ h_x.
    pub psi_hx: Option<DMatrix<f64>>,
}

/// Linearized problem data for one iterate.
pub struct ProblemData {
    pub nodes: Vec<NodeData>,
    pub precomp: Vec<NodePrecomp>,
    /// x̃₀ ⊖ x₀.
    pub init_gap: DVector<f64>,
    /// Terminal cost gradient and Hessian.
    pub terminal_lx: DVector<f64>,
    pub terminal_lxx: DMatrix<f64>,
    pub cost: f64,
    pub f_l1: f64,
    pub h_l1: f64,
}

impl ProblemData {
    pub fn total_eps(&self) -> f64 {
        self.f_l1 + self.h_l1
    }
}

fn node_work(
    problem: &Problem,
    trajectory: &Trajectory,
    factorization: Factorization,
    basis_method: BasisMethod,
    k: usize,
) -> Result<(NodeData, NodePrecomp), ModelError> {
    let model = problem.nodes[k].as_ref();
    let data = linearize_node(
        model,
        k,
        &trajectory.states[k],
        &trajectory.states[k + 1],
        &trajectory.controls[k],
    )?;
    let mut pre = NodePrecomp::default();
    let nh = data.hu.nrows();
    if factorization == Factorization::Nullspace && nh > 0 {
        let basis = basis_decompose(&data.hu, basis_method);
        if basis.rank < nh {
            return Err(ModelError::RankDeficient { node: k, rank: basis.rank, nh });
        }
        let hu_y = &data.hu * &basis.y;
        let psi = &basis.y
            * square_solve(&hu_y, &DMatrix::identity(nh, nh)).map_err(|_| {
                ModelError::RankDeficient { node: k, rank: basis.rank, nh }
            })?;
        pre.psi_h = Some(&psi * &data.h_gap);
        pre.psi_hx = Some(&psi * &data.hx);
        pre.psi = Some(psi);
        pre.basis = Some(basis);
    }
    Ok((data, pre))
}

/// Linearize every node of the incumbent trajectory and run the
/// value-independent decompositions. Nodes are independent; with the
/// `parallel` feature enabled and `parallel = true` they are processed by
/// rayon into disjoint slots (all reductions stay serial for determinism).
pub fn compute_node_data(
    problem: &Problem,
    trajectory: &Trajectory,
    factorization: Factorization,
    basis_method: BasisMethod,
    parallel: bool,
) -> Result<ProblemData, ModelError> {
    let n = problem.horizon();
    assert_eq!(trajectory.horizon(), n, "trajectory horizon must match problem");

    #[cfg(feature = "parallel")]
    let results: Vec<Result<(NodeData, NodePrecomp), ModelError>> = if parallel {
        use rayon::prelude::*;
        (0..n)
            .into_par_iter()
            .map(|k| node_work(problem, trajectory, factorization, basis_method, k))
            .collect()
    } else {
        (0..n).map(|k| node_work(problem, trajectory, factorization, basis_method, k)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<(NodeData, NodePrecomp), ModelError>> = {
        let _ = parallel;
        (0..n).map(|k| node_work(problem, trajectory, factorization, basis_method, k)).collect()
    };

    let mut nodes = Vec::with_capacity(n);
    let mut precomp = Vec::with_capacity(n);
    for r in results {
        let (d, p) = r?;
        nodes.push(d);
        precomp.push(p);
    }

    let init_gap = difference(&problem.manifold, &problem.x0, &trajectory.states[0])?;
    let (terminal_lx, terminal_lxx) = problem.terminal.cost_expansion(&trajectory.states[n]);
    let mut cost = problem.terminal.cost(&trajectory.states[n]);
    let mut f_l1 = init_gap.iter().map(|x| x.abs()).sum::<f64>();
    let mut h_l1 = 0.0;
    for d in &nodes {
        cost += d.cost_value;
        f_l1 += d.f_gap.iter().map(|x| x.abs()).sum::<f64>();
        h_l1 += d.h_gap.iter().map(|x| x.abs()).sum::<f64>();
    }
    if !cost.is_finite() || !terminal_lx.iter().all(|x| x.is_finite()) {
        return Err(ModelError::NonFinite { node: n });
    }
    Ok(ProblemData { nodes, precomp, init_gap, terminal_lx, terminal_lxx, cost, f_l1, h_l1 })
}
