//! Actuation models mapping joint-effort inputs to generalized forces,
//! including a nonsquare thrust map.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::factor::pseudo_inverse;

use super::scalar::Real;

/// τ → generalized-force map A(q, v, τ) and its derivatives.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ActuationModel {
    /// A = τ on all nv coordinates (fixed-base, fully actuated).
    FullyActuated { nv: usize },
    /// Floating base with torque inputs on the joints only: A = [0₃; τ].
    BaseUnactuated { nv: usize },
    /// Selected joints actuated (fixed base): A places τ on `actuated`.
    SelectedJoints { nv: usize, actuated: Vec<usize> },
    /// Two rotor thrusts on a floating planar body: body-frame vertical
    /// force τ₁ + τ₂ and pitch torque arm (τ₂ − τ₁). ∂A/∂τ is 3 × 2.
    Birotor { arm: f64 },
}

impl ActuationModel {
    pub fn nv(&self) -> usize {
        match self {
            Self::FullyActuated { nv } | Self::BaseUnactuated { nv } | Self::SelectedJoints { nv, .. } => *nv,
            Self::Birotor { .. } => 3,
        }
    }

    pub fn ntau(&self) -> usize {
        match self {
            Self::FullyActuated { nv } => *nv,
            Self::BaseUnactuated { nv } => nv - 3,
            Self::SelectedJoints { actuated, .. } => actuated.len(),
            Self::Birotor { .. } => 2,
        }
    }

    pub fn n_underactuated(&self) -> usize {
        self.nv() - self.ntau()
    }

    /// A(q, v, τ) as generalized forces.
    pub fn map<T: Real>(&self, q: &[T], _v: &[T], tau: &[T]) -> Vec<T> {
        let zero = T::constant(0.0);
        match self {
            Self::FullyActuated { nv } => {
                debug_assert_eq!(tau.len(), *nv);
                tau.to_vec()
            }
            Self::BaseUnactuated { nv } => {
                let mut out = vec![zero; *nv];
                out[3..].copy_from_slice(tau);
                out
            }
            Self::SelectedJoints { nv, actuated } => {
                let mut out = vec![zero; *nv];
                for (i, &j) in actuated.iter().enumerate() {
                    out[j] = tau[i];
                }
                out
            }
            Self::Birotor { arm } => {
                let theta = q[2];
                let thrust = tau[0] + tau[1];
                let l = T::constant(*arm);
                vec![-theta.sin() * thrust, theta.cos() * thrust, l * (tau[1] - tau[0])]
            }
        }
    }

    /// ∂A/∂τ (nv × nτ).
    pub fn d_tau(&self, q: &DVector<f64>) -> DMatrix<f64> {
        let nv = self.nv();
        let ntau = self.ntau();
        match self {
            Self::FullyActuated { .. } => DMatrix::identity(nv, nv),
            Self::BaseUnactuated { .. } => {
                let mut m = DMatrix::zeros(nv, ntau);
                for i in 0..ntau {
                    m[(3 + i, i)] = 1.0;
                }
                m
            }
            Self::SelectedJoints { actuated, .. } => {
                let mut m = DMatrix::zeros(nv, ntau);
                for (i, &j) in actuated.iter().enumerate() {
                    m[(j, i)] = 1.0;
                }
                m
            }
            Self::Birotor { arm } => {
                let (s, c) = q[2].sin_cos();
                DMatrix::from_row_slice(3, 2, &[-s, -s, c, c, -arm, *arm])
            }
        }
    }

    /// ∂A/∂q (nv × nv) at (q, τ); zero except for configuration-dependent
    /// maps.
    pub fn d_q(&self, q: &DVector<f64>, tau: &DVector<f64>) -> DMatrix<f64> {
        let nv = self.nv();
        match self {
            Self::Birotor { .. } => {
                let (s, c) = q[2].sin_cos();
                let thrust = tau[0] + tau[1];
                let mut m = DMatrix::zeros(nv, nv);
                m[(0, 2)] = -c * thrust;
                m[(1, 2)] = -s * thrust;
                m
            }
            _ => DMatrix::zeros(nv, nv),
        }
    }

    /// ∂A/∂v (nv × nv); zero for every provided map.
    pub fn d_v(&self, _q: &DVector<f64>, _tau: &DVector<f64>) -> DMatrix<f64> {
        let nv = self.nv();
        DMatrix::zeros(nv, nv)
    }

    /// Selection projector S = I − (∂A/∂τ)(∂A/∂τ)† onto the under-actuated
    /// subspace.
    pub fn selection(&self, q: &DVector<f64>) -> DMatrix<f64> {
        let d = self.d_tau(q);
        let nv = self.nv();
        DMatrix::identity(nv, nv) - &d * pseudo_inverse(&d)
    }

    /// Full-row-rank basis Uᵀ of the under-actuated subspace (n_ua × nv),
    /// generic so its configuration dependence differentiates exactly.
    pub fn underactuated_rows<T: Real>(&self, q: &[T]) -> Vec<Vec<T>> {
        let zero = T::constant(0.0);
        let one = T::constant(1.0);
        match self {
            Self::FullyActuated { .. } => Vec::new(),
            Self::BaseUnactuated { nv } => (0..3)
                .map(|r| {
                    let mut row = vec![zero; *nv];
                    row[r] = one;
                    row
                })
                .collect(),
            Self::SelectedJoints { nv, actuated } => (0..*nv)
                .filter(|j| !actuated.contains(j))
                .map(|j| {
                    let mut row = vec![zero; *nv];
                    row[j] = one;
                    row
                })
                .collect(),
            Self::Birotor { .. } => {
                // Normal of span{(-s, c, -arm), (-s, c, arm)} via their cross
                // product: (cos θ, sin θ, 0).
                let theta = q[2];
                vec![vec![theta.cos(), theta.sin(), zero]]
            }
        }
    }

    pub fn validate(&self, nv: usize) -> Result<(), ModelError> {
        if self.nv() != nv {
            return Err(ModelError::DimensionMismatch {
                what: "actuation model",
                expected: nv,
                got: self.nv(),
            });
        }
        Ok(())
    }
}

/// Joint efforts realizing the actuated rows of a generalized force:
/// τ = (∂A/∂τ)† f.
pub fn torque_from_force(
    actuation: &ActuationModel,
    q: &DVector<f64>,
    force: &DVector<f64>,
) -> Result<DVector<f64>, ModelError> {
    let d = actuation.d_tau(q);
    let pinv = pseudo_inverse(&d);
    let svals = d.singular_values();
    let smin = svals.iter().cloned().fold(f64::INFINITY, f64::min);
    let smax = svals.iter().cloned().fold(0.0f64, f64::max);
    if actuation.ntau() > 0 && (smin <= 0.0 || smax / smin > 1e12) {
        return Err(ModelError::Invalid("actuation map is ill-conditioned".into()));
    }
    Ok(&pinv * force)
}
