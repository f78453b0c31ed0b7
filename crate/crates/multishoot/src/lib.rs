//! Trajectory optimization by equality-constrained differential dynamic
//! programming, with interchangeable nullspace and Schur-complement
//! resolutions of the per-node saddle system, a feasibility-driven
//! multiple-shooting search, a planar rigid-body kernel providing
//! inverse-dynamics constraints, and a receding-horizon MPC harness.

pub mod error;
pub mod factor;
pub mod lq;
pub mod manifold;
pub mod model;
pub mod mpc;
pub mod problems;
pub mod rigid;
pub mod solver;

pub use error::{FactorError, ModelError, SolveError};
pub use manifold::{difference, integrate, symplectic_euler, ManifoldSpec, State};
pub use model::{linearize_node, NodeData, NodeModel, Problem, TerminalModel, Trajectory};
pub use factor::BasisMethod;
pub use solver::{solve, Factorization, KnotPolicy, Solution, SolverSettings, ValueModel};
