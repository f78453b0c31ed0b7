//! State manifold with angle-wrapped coordinates.
//!
//! States are pairs (q, v) where selected configuration coordinates live on
//! the circle and are kept in (-pi, pi]. Tangent increments are plain vectors
//! of dimension nq + nv; `integrate` and `difference` are the ⊕/⊖ operators
//! the solver uses, with shortest-arc differencing on wrapped coordinates.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Dimensions and wrapped-coordinate layout of a state space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifoldSpec {
    /// Configuration dimension.
    pub nq: usize,
    /// Generalized-velocity dimension.
    pub nv: usize,
    /// Indices into q that wrap to (-pi, pi].
    pub wrap_indices: Vec<usize>,
}

impl ManifoldSpec {
    pub fn new(nq: usize, nv: usize, wrap_indices: Vec<usize>) -> Self {
        debug_assert!(wrap_indices.iter().all(|&i| i < nq));
        Self { nq, nv, wrap_indices }
    }

    /// Euclidean space of dimension n (no configuration block, no wrapping).
    pub fn euclidean(n: usize) -> Self {
        Self { nq: 0, nv: n, wrap_indices: Vec::new() }
    }

    /// Dimension of the point representation.
    pub fn nx_point(&self) -> usize {
        self.nq + self.nv
    }

    /// Dimension of tangent increments.
    pub fn nx_tangent(&self) -> usize {
        self.nq + self.nv
    }
}

/// A point on the state manifold: configuration and generalized velocity.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub q: DVector<f64>,
    pub v: DVector<f64>,
}

impl State {
    pub fn new(q: DVector<f64>, v: DVector<f64>) -> Self {
        Self { q, v }
    }

    pub fn zeros(spec: &ManifoldSpec) -> Self {
        Self { q: DVector::zeros(spec.nq), v: DVector::zeros(spec.nv) }
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().all(|x| x.is_finite()) && self.v.iter().all(|x| x.is_finite())
    }

    /// Stacked [q; v] copy, mostly for logging.
    pub fn to_vector(&self) -> DVector<f64> {
        let mut out = DVector::zeros(self.q.len() + self.v.len());
        out.rows_mut(0, self.q.len()).copy_from(&self.q);
        out.rows_mut(self.q.len(), self.v.len()).copy_from(&self.v);
        out
    }
}

/// Wrap an angle to (-pi, pi]; ties at the branch cut resolve to +pi.
///
/// In-range angles are returned unchanged so wrapping is exact there.
pub fn wrap_angle(theta: f64) -> f64 {
    if theta > -std::f64::consts::PI && theta <= std::f64::consts::PI {
        return theta;
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    let y = (theta + std::f64::consts::PI).rem_euclid(two_pi);
    if y == 0.0 {
        std::f64::consts::PI
    } else {
        y - std::f64::consts::PI
    }
}

/// x ⊕ dx. Wrapped coordinates are re-normalized to (-pi, pi].
pub fn integrate(spec: &ManifoldSpec, x: &State, dx: &DVector<f64>) -> Result<State, ModelError> {
    if dx.len() != spec.nx_tangent() {
        return Err(ModelError::DimensionMismatch {
            what: "tangent increment",
            expected: spec.nx_tangent(),
            got: dx.len(),
        });
    }
    let mut q = &x.q + dx.rows(0, spec.nq);
    for &i in &spec.wrap_indices {
        q[i] = wrap_angle(q[i]);
    }
    let v = &x.v + dx.rows(spec.nq, spec.nv);
    Ok(State::new(q, v))
}

/// x1 ⊖ x0, with shortest-arc differencing on wrapped coordinates.
pub fn difference(spec: &ManifoldSpec, x1: &State, x0: &State) -> Result<DVector<f64>, ModelError> {
    if x1.q.len() != spec.nq || x0.q.len() != spec.nq || x1.v.len() != spec.nv || x0.v.len() != spec.nv {
        return Err(ModelError::DimensionMismatch {
            what: "state",
            expected: spec.nx_point(),
            got: x1.q.len() + x1.v.len(),
        });
    }
    let mut dx = DVector::zeros(spec.nx_tangent());
    for i in 0..spec.nq {
        dx[i] = x1.q[i] - x0.q[i];
    }
    for &i in &spec.wrap_indices {
        dx[i] = wrap_angle(dx[i]);
    }
    for i in 0..spec.nv {
        dx[spec.nq + i] = x1.v[i] - x0.v[i];
    }
    Ok(dx)
}

/// Symplectic Euler step: v' = v + a dt, q' = q ⊕ v' dt.
///
/// Returned q is wrapped per `wrap_indices`.
pub fn symplectic_euler(
    spec: &ManifoldSpec,
    q: &DVector<f64>,
    v: &DVector<f64>,
    a: &DVector<f64>,
    dt: f64,
) -> Result<(DVector<f64>, DVector<f64>), ModelError> {
    if dt <= 0.0 {
        return Err(ModelError::NonPositiveDt(dt));
    }
    let v_next = v + a * dt;
    let mut q_next = q + &v_next * dt;
    for &i in &spec.wrap_indices {
        q_next[i] = wrap_angle(q_next[i]);
    }
    Ok((q_next, v_next))
}
