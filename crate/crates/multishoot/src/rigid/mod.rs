//! Desk-scale planar rigid-body kernel.
//!
//! Serial trees of revolute/prismatic links with an optional floating
//! planar base (x, z, pitch), recursive inverse dynamics with exact
//! derivatives, point-contact kinematics with Baumgarte stabilization,
//! impulse dynamics, a forward contact-dynamics baseline, and the
//! redundant/condensed inverse-dynamics constraint assemblies.

pub mod actuation;
pub mod dynamics;
pub mod kinematics;
pub mod model;
pub mod scalar;

pub use actuation::ActuationModel;
pub use dynamics::{
    assemble_condensed, assemble_redundant, contact_forward_dynamics, contact_kinematics,
    impulse_dynamics, mass_matrix, recover_torque, rnea, rnea_derivatives, ConstraintBlocks,
    ContactKinematics, ForwardDynamics, ImpulseResult,
};
pub use model::{BaseKind, ContactFrame, ContactSet, JointKind, Link, PlanarModel};
pub use scalar::{Dual, Real};
