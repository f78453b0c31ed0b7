//! Quadratic barrier and penalty cost terms.

use nalgebra::{DMatrix, DVector};

/// Scalar value with gradient and Hessian against one vector argument.
pub struct CostTerm {
    pub value: f64,
    pub grad: DVector<f64>,
    pub hess: DMatrix<f64>,
}

/// Two-sided quadratic barrier w Σ max(0, violation)²; zero strictly inside
/// the bounds and continuously differentiable at them. Missing bounds are
/// unbounded sides.
pub fn barrier_cost(
    value: &DVector<f64>,
    lower: Option<&DVector<f64>>,
    upper: Option<&DVector<f64>>,
    weight: f64,
) -> CostTerm {
    let n = value.len();
    let mut cost = 0.0;
    let mut grad = DVector::zeros(n);
    let mut hess = DMatrix::zeros(n, n);
    for i in 0..n {
        if let Some(ub) = upper {
            let viol = value[i] - ub[i];
            if viol > 0.0 {
                cost += weight * viol * viol;
                grad[i] += 2.0 * weight * viol;
                hess[(i, i)] += 2.0 * weight;
            }
        }
        if let Some(lb) = lower {
            let viol = lb[i] - value[i];
            if viol > 0.0 {
                cost += weight * viol * viol;
                grad[i] -= 2.0 * weight * viol;
                hess[(i, i)] += 2.0 * weight;
            }
        }
    }
    CostTerm { value: cost, grad, hess }
}

/// Linearized friction cone C λ ≥ c penalized on violated facets:
/// w Σ min(0, {Cλ − c}ᵢ)².
pub fn friction_cone_penalty(
    lambda: &DVector<f64>,
    c_mat: &DMatrix<f64>,
    c_vec: &DVector<f64>,
    weight: f64,
) -> CostTerm {
    let n = lambda.len();
    let mut cost = 0.0;
    let mut grad = DVector::zeros(n);
    let mut hess = DMatrix::zeros(n, n);
    let r = c_mat * lambda - c_vec;
    for i in 0..r.len() {
        if r[i] < 0.0 {
            let row = c_mat.row(i);
            cost += weight * r[i] * r[i];
            for a in 0..n {
                grad[a] += 2.0 * weight * r[i] * row[a];
                for b in 0..n {
                    hess[(a, b)] += 2.0 * weight * row[a] * row[b];
                }
            }
        }
    }
    CostTerm { value: cost, grad, hess }
}

/// Planar linearized cone for one 2-row contact force (λx, λz):
/// |λx| ≤ μ λz and λz ≥ 0.
pub fn planar_cone(mu: f64) -> (DMatrix<f64>, DVector<f64>) {
    let c = DMatrix::from_row_slice(3, 2, &[-1.0, mu, 1.0, mu, 0.0, 1.0]);
    (c, DVector::zeros(3))
}

/// Weighted quadratic tracking Σ wᵢ (xᵢ − rᵢ)² with diagonal Hessian.
pub fn weighted_tracking(x: &DVector<f64>, reference: &DVector<f64>, w: &DVector<f64>) -> CostTerm {
    let n = x.len();
    let mut cost = 0.0;
    let mut grad = DVector::zeros(n);
    let mut hess = DMatrix::zeros(n, n);
    for i in 0..n {
        let e = x[i] - reference[i];
        cost += w[i] * e * e;
        grad[i] = 2.0 * w[i] * e;
        hess[(i, i)] = 2.0 * w[i];
    }
    CostTerm { value: cost, grad, hess }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn barrier_zero_inside_bounds() {
        let v = DVector::from_vec(vec![0.2, -0.5]);
        let lb = DVector::from_vec(vec![-1.0, -1.0]);
        let ub = DVector::from_vec(vec![1.0, 1.0]);
        let t = barrier_cost(&v, Some(&lb), Some(&ub), 3.0);
        assert_eq!(t.value, 0.0);
        assert_eq!(t.grad.amax(), 0.0);
    }

    #[test]
    fn barrier_hand_value() {
        // value 1.5, upper 1.0, weight 2 -> cost 0.5, gradient 2
        let v = DVector::from_vec(vec![1.5]);
        let ub = DVector::from_vec(vec![1.0]);
        let t = barrier_cost(&v, None, Some(&ub), 2.0);
        assert_abs_diff_eq!(t.value, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(t.grad[0], 2.0, epsilon = 1e-15);
    }

    #[test]
    fn barrier_gradient_continuous_at_boundary() {
        let ub = DVector::from_vec(vec![1.0]);
        for eps in [1e-3, 1e-6, 1e-9] {
            let v = DVector::from_vec(vec![1.0 + eps]);
            let t = barrier_cost(&v, None, Some(&ub), 5.0);
            assert!(t.grad[0] <= 10.0 * eps + 1e-12);
        }
    }

    #[test]
    fn cone_inside_boundary_and_violation() {
        let (c, cv) = planar_cone(0.7);
        // well inside: pure vertical force
        let t = friction_cone_penalty(&DVector::from_vec(vec![0.0, 10.0]), &c, &cv, 2.0);
        assert_eq!(t.value, 0.0);
        // on a facet: lam_x = mu lam_z exactly
        let t = friction_cone_penalty(&DVector::from_vec(vec![7.0, 10.0]), &c, &cv, 2.0);
        assert_eq!(t.value, 0.0);
        assert_eq!(t.grad.amax(), 0.0);
        // pure tangential force violates both x-facets
        let lam = DVector::from_vec(vec![3.0, 0.0]);
        let t = friction_cone_penalty(&lam, &c, &cv, 2.0);
        // facets: -3, +3... only -3 violated among the x rows, plus z row 0
        assert_abs_diff_eq!(t.value, 2.0 * 9.0, epsilon = 1e-12);
    }

    #[test]
    fn cone_gradient_matches_finite_differences() {
        let (c, cv) = planar_cone(0.5);
        let lam = DVector::from_vec(vec![2.0, 1.0]);
        let t = friction_cone_penalty(&lam, &c, &cv, 1.5);
        let h = 1e-7;
        for i in 0..2 {
            let mut lp = lam.clone();
            lp[i] += h;
            let mut lm = lam.clone();
            lm[i] -= h;
            let fd = (friction_cone_penalty(&lp, &c, &cv, 1.5).value
                - friction_cone_penalty(&lm, &c, &cv, 1.5).value)
                / (2.0 * h);
            assert_abs_diff_eq!(t.grad[i], fd, epsilon = 1e-5);
        }
    }
}
