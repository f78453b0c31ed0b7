//! Backward Riccati recursion under the nullspace or Schur-complement
//! resolution of the per-node saddle system.

use std::ops::AddAssign;

use nalgebra::{DMatrix, DVector};

use crate::factor::{DecompStats, SpdFactor};
use crate::model::NodeData;
use crate::solver::data::ProblemData;
use crate::solver::{Factorization, KnotPolicy, ValueModel};

/// Local approximation of the action-value function at one node.
#[derive(Debug, Clone)]
pub struct QBlocks {
    pub qx: DVector<f64>,
    pub qu: DVector<f64>,
    pub qxx: DMatrix<f64>,
    pub qux: DMatrix<f64>,
    pub quu: DMatrix<f64>,
}

/// Search direction over the whole horizon: policies, value models and the
/// exact expected-improvement coefficients (Δℓ(α) = α d1 + ½ α² d2).
pub struct Direction {
    pub policies: Vec<KnotPolicy>,
    /// N + 1 entries, terminal included.
    pub values: Vec<ValueModel>,
    pub d1: f64,
    pub d2: f64,
    /// Constraint-multiplier estimate γ at δx = 0, per node (empty when nh = 0).
    pub gamma0: Vec<DVector<f64>>,
    pub stats: DecompStats,
}

impl Direction {
    /// Exact predicted change of the total cost at step length α (negative
    /// means predicted decrease).
    pub fn expected_improvement(&self, alpha: f64) -> f64 {
        alpha * self.d1 + 0.5 * alpha * alpha * self.d2
    }
}

/// Backward-pass failure: a Cholesky decomposition failed at `node`. The
/// solve loop reacts by increasing the regularization.
#[derive(Debug, Clone, Copy)]
pub struct BackwardFailure {
    pub node: usize,
}

/// Q-blocks per the gap-deflected recursion, exploiting f_u = [f_a 0]
/// sparsity when the node declares it. `mu` adds the banded regularization
/// (μ I on the next-state tangent block and μ I on L_uu).
pub fn action_value(data: &NodeData, next: &ValueModel, mu: f64) -> QBlocks {
    let nx = data.fx.ncols();
    let nu = data.fu.ncols();
    let na = data.sparse_fu_cols.unwrap_or(nu).min(nu);

    // Gap-deflected value gradient, unregularized curvature.
    let vx_plus = &next.vx + &next.vxx * &data.f_gap;
    let mut vxx_reg = next.vxx.clone();
    for i in 0..vxx_reg.nrows() {
        vxx_reg[(i, i)] += mu;
    }

    let fa = data.fu.columns(0, na);
    let fat_vxp = fa.transpose() * &vx_plus;
    let vxx_fx = &vxx_reg * &data.fx;
    let fat_vxx_fx = fa.transpose() * &vxx_fx;
    let fat_vxx_fa = fa.transpose() * &vxx_reg * fa;

    let mut qu = data.lu.clone();
    qu.rows_mut(0, na).add_assign(&fat_vxp);
    let mut qux = data.lxu.transpose();
    qux.view_mut((0, 0), (na, nx)).add_assign(&fat_vxx_fx);
    let mut quu = data.luu.clone();
    quu.view_mut((0, 0), (na, na)).add_assign(&fat_vxx_fa);
    for i in 0..nu {
        quu[(i, i)] += mu;
    }

    QBlocks {
        qx: &data.lx + data.fx.transpose() * &vx_plus,
        qu,
        qxx: &data.lxx + data.fx.transpose() * &vxx_fx,
        qux,
        quu,
    }
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Run the backward recursion over `data` with regularization `mu`.
///
/// One SPD decomposition per node in nullspace mode (dimension nz), two in
/// Schur mode (dimensions nu and nh); dimensions are recorded in the
/// returned stats. Any decomposition failure aborts with the node index.
pub fn backward_pass(
    data: &ProblemData,
    factorization: Factorization,
    mu: f64,
) -> Result<Direction, BackwardFailure> {
    let n = data.nodes.len();
    let mut stats = DecompStats::default();
    let mut values = vec![
        ValueModel {
            dv1: 0.0,
            dv2: 0.0,
            vx: DVector::zeros(0),
            vxx: DMatrix::zeros(0, 0)
        };
        n + 1
    ];
    values[n] = ValueModel {
        dv1: 0.0,
        dv2: 0.0,
        vx: data.terminal_lx.clone(),
        vxx: data.terminal_lxx.clone(),
    };
    let mut policies = vec![KnotPolicy { pi: DVector::zeros(0), gain: DMatrix::zeros(0, 0) }; n];
    let mut gamma0 = vec![DVector::zeros(0); n];

    // Exact first-order coefficient d1 = gᵀ δw(1), accumulated by an extra
    // linear backward recursion alongside the value recursion.
    let mut g1 = data.terminal_lx.clone();
    let mut w1 = 0.0;
    // Full-step predicted change Δℓ(1) = Σ(dv1 + ½ dv2) + gap terms.
    let mut dl_full = 0.0;

    for k in (0..n).rev() {
        let nd = &data.nodes[k];
        let q = action_value(nd, &values[k + 1], mu);
        let nu = q.qu.len();
        let nh = nd.hu.nrows();

        let (pi, gain, quu_pi);
        if nh == 0 {
            let chol = SpdFactor::new(q.quu.clone()).map_err(|_| BackwardFailure { node: k })?;
            stats.record(nu);
            pi = chol.solve_vec(&q.qu);
            gain = chol.solve_mat(&q.qux);
            quu_pi = &q.quu * &pi;
        } else {
            match factorization {
                Factorization::Nullspace => {
                    let pre = &data.precomp[k];
                    let basis = pre.basis.as_ref().expect("basis precomputed for nh > 0");
                    let z = &basis.z;
                    let nz = z.ncols();
                    let qzu = z.transpose() * &q.quu;
                    let qzz = &qzu * z;
                    let chol =
                        SpdFactor::new(qzz).map_err(|_| BackwardFailure { node: k })?;
                    stats.record(nz);
                    let k_n = chol.solve_vec(&(z.transpose() * &q.qu));
                    let gain_n = chol.solve_mat(&(z.transpose() * &q.qux));
                    // Q̃zz = I - Z Qzz^-1 Qzu
                    let qtzz = DMatrix::identity(nu, nu) - z * chol.solve_mat(&qzu);
                    let psi_h = pre.psi_h.as_ref().unwrap();
                    let psi_hx = pre.psi_hx.as_ref().unwrap();
                    pi = z * k_n + &qtzz * psi_h;
                    gain = z * gain_n + &qtzz * psi_hx;
                    quu_pi = &q.quu * &pi;
                    // Multiplier estimate at δx = 0 from the stationarity rows
                    // (least squares; the reduced system never forms γ).
                    let hu_hut = &nd.hu * nd.hu.transpose();
                    let rhs = &nd.hu * (&quu_pi - &q.qu);
                    gamma0[k] = hu_hut
                        .lu()
                        .solve(&rhs)
                        .unwrap_or_else(|| DVector::zeros(nh));
                }
                Factorization::Schur => {
                    let chol =
                        SpdFactor::new(q.quu.clone()).map_err(|_| BackwardFailure { node: k })?;
                    stats.record(nu);
                    let k_free = chol.solve_vec(&q.qu);
                    let gain_free = chol.solve_mat(&q.qux);
                    let psi_s = chol.solve_mat(&nd.hu.transpose());
                    let schur = &nd.hu * &psi_s;
                    let chol_s =
                        SpdFactor::new(schur).map_err(|_| BackwardFailure { node: k })?;
                    stats.record(nh);
                    let k_s = &nd.h_gap - &nd.hu * &k_free;
                    let gain_s = &nd.hx - &nd.hu * &gain_free;
                    let g0 = chol_s.solve_vec(&k_s);
                    let gx = chol_s.solve_mat(&gain_s);
                    pi = &k_free + &psi_s * &g0;
                    gain = &gain_free + &psi_s * &gx;
                    quu_pi = &q.quu * &pi;
                    gamma0[k] = g0;
                }
            }
        }

        let dv1 = -pi.dot(&q.qu);
        let dv2 = pi.dot(&quu_pi);
        let vx = &q.qx + gain.transpose() * (&quu_pi - &q.qu) - q.qux.transpose() * &pi;
        let mut vxx = &q.qxx + gain.transpose() * &q.quu * &gain
            - gain.transpose() * &q.qux
            - q.qux.transpose() * &gain;
        symmetrize(&mut vxx);

        dl_full += dv1 + 0.5 * dv2;
        // d1 recursion: g1_k = lx - Πᵀ lu + (fx - fu Π)ᵀ g1_{k+1}
        let fu_pi = &nd.fu * &pi;
        w1 += -nd.lu.dot(&pi) + g1.dot(&(&nd.f_gap - &fu_pi));
        g1 = &nd.lx - gain.transpose() * &nd.lu + (&nd.fx - &nd.fu * &gain).transpose() * &g1;

        values[k] = ValueModel { dv1, dv2, vx, vxx };
        policies[k] = KnotPolicy { pi, gain };
    }

    // Gap contributions to Δℓ(1): Σ_{k=0..N} f̄ₖᵀ(Vxₖ + ½ Vxxₖ f̄ₖ) where
    // f̄₀ is the initial-condition gap and f̄ₖ₊₁ node k's dynamics gap.
    let gap_term = |g: &DVector<f64>, v: &ValueModel| g.dot(&v.vx) + 0.5 * g.dot(&(&v.vxx * g));
    dl_full += gap_term(&data.init_gap, &values[0]);
    for k in 0..n {
        dl_full += gap_term(&data.nodes[k].f_gap, &values[k + 1]);
    }

    let d1 = w1 + g1.dot(&data.init_gap);
    let d2 = 2.0 * (dl_full - d1);
    Ok(Direction { policies, values, d1, d2, gamma0, stats })
}
