//! Benchmark problem builders (inverse-dynamics and forward-dynamics
//! variants) and the barrier/penalty cost terms of the MPC formulation.

pub mod build;
pub mod costs;
pub mod models;
pub mod node;
pub mod spec;
pub mod swing;

pub use build::{build_problem, ProblemBuilder};
pub use costs::{barrier_cost, friction_cone_penalty, planar_cone, weighted_tracking, CostTerm};
pub use node::{ImpulseNode, KinodynamicNode, NodeFormulation, TrackingTerminal};
pub use spec::{builtin_names, builtin_spec, FormulationKind, MpcSpec, ProblemSpec};
