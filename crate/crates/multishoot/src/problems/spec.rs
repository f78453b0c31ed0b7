//! Problem spec files: a TOML schema naming the model, contact schedule,
//! cost weights, bounds and (optionally) the closed-loop MPC setup.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::rigid::{ActuationModel, ContactFrame, PlanarModel};

use super::models;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum FormulationKind {
    #[default]
    Condensed,
    Redundant,
    Forward,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NamedContact {
    pub name: String,
    #[serde(flatten)]
    pub frame: ContactFrame,
}

/// Inline model description (the alternative to a builtin name).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CustomModel {
    pub planar: PlanarModel,
    pub actuation: ActuationModel,
    #[serde(default)]
    pub contact: Vec<NamedContact>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelRef {
    Builtin(String),
    Custom(Box<CustomModel>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhaseSpec {
    pub nodes: usize,
    #[serde(default)]
    pub contacts: Vec<String>,
    /// Absolute contact placements effective from this phase on.
    #[serde(default)]
    pub anchors: BTreeMap<String, [f64; 2]>,
    /// Placements relative to the frame position at the initial posture.
    #[serde(default)]
    pub shifts: BTreeMap<String, [f64; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightsSpec {
    pub q: Vec<f64>,
    pub v: Vec<f64>,
    pub q_terminal: Vec<f64>,
    pub v_terminal: Vec<f64>,
    #[serde(default)]
    pub acc: f64,
    #[serde(default)]
    pub tau: f64,
    #[serde(default)]
    pub force: f64,
    #[serde(default)]
    pub cone: f64,
    #[serde(default)]
    pub state_barrier: f64,
    #[serde(default)]
    pub control_barrier: f64,
    #[serde(default)]
    pub contact_pos: f64,
    #[serde(default)]
    pub contact_vel: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct BoundsSpec {
    pub x_lower: Option<Vec<f64>>,
    pub x_upper: Option<Vec<f64>>,
    /// Acceleration-block bounds (condensed/redundant) or torque bounds
    /// (forward).
    pub u_lower: Option<Vec<f64>>,
    pub u_upper: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConeSpec {
    pub mu: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GoalSpec {
    pub q: Option<Vec<f64>>,
    pub v: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DisturbanceSpec {
    /// Simulation time of the impulse.
    pub t: f64,
    /// Velocity jump applied to the plant state (length nv).
    pub dv: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MpcSpec {
    pub horizon: usize,
    pub control_hz: f64,
    #[serde(default = "default_iters")]
    pub iters: usize,
    #[serde(default = "default_substeps")]
    pub plant_substeps: usize,
    pub duration: f64,
    /// Repeat the phase schedule cyclically.
    #[serde(default = "default_true")]
    pub cycle: bool,
    /// Anchor shift per schedule cycle.
    #[serde(default)]
    pub stride: [f64; 2],
    #[serde(default = "default_true")]
    pub feedback: bool,
    /// Plant-side actuator saturation.
    pub tau_limit: Option<f64>,
    #[serde(default)]
    pub disturbance: Vec<DisturbanceSpec>,
}

fn default_iters() -> usize {
    1
}

fn default_substeps() -> usize {
    4
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub name: String,
    pub model: ModelRef,
    #[serde(default)]
    pub formulation: FormulationKind,
    pub dt: f64,
    pub init_q: Vec<f64>,
    pub init_v: Vec<f64>,
    /// Posture reference; defaults to init_q.
    pub nominal_q: Option<Vec<f64>>,
    pub phase: Vec<PhaseSpec>,
    pub weights: WeightsSpec,
    #[serde(default)]
    pub bounds: BoundsSpec,
    pub cone: Option<ConeSpec>,
    #[serde(default = "default_apex")]
    pub swing_apex: f64,
    pub goal: Option<GoalSpec>,
    pub mpc: Option<MpcSpec>,
}

fn default_apex() -> f64 {
    0.08
}

/// Resolved model: dynamics, actuation and the named contact frames.
pub struct ResolvedModel {
    pub planar: PlanarModel,
    pub actuation: ActuationModel,
    pub contacts: Vec<NamedContact>,
}

impl ProblemSpec {
    pub fn parse(text: &str) -> Result<Self, ModelError> {
        toml::from_str(text).map_err(|e| ModelError::Invalid(format!("spec parse error: {e}")))
    }

    pub fn resolve_model(&self) -> Result<ResolvedModel, ModelError> {
        let resolved = match &self.model {
            ModelRef::Builtin(name) => builtin_model(name)?,
            ModelRef::Custom(c) => ResolvedModel {
                planar: c.planar.clone(),
                actuation: c.actuation.clone(),
                contacts: c.contact.clone(),
            },
        };
        resolved.planar.validate()?;
        resolved.actuation.validate(resolved.planar.nv())?;
        Ok(resolved)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let model = self.resolve_model()?;
        let nv = model.planar.nv();
        if self.dt <= 0.0 {
            return Err(ModelError::Invalid("dt must be positive".into()));
        }
        if self.phase.is_empty() || self.phase.iter().all(|p| p.nodes == 0) {
            return Err(ModelError::Invalid("schedule needs at least one node".into()));
        }
        let dim = |v: &Vec<f64>, what: &str| {
            if v.len() != nv {
                return Err(ModelError::Invalid(format!(
                    "{what} has length {}, model has nv = {nv}",
                    v.len()
                )));
            }
            Ok(())
        };
        dim(&self.init_q, "init_q")?;
        dim(&self.init_v, "init_v")?;
        dim(&self.weights.q, "weights.q")?;
        dim(&self.weights.v, "weights.v")?;
        dim(&self.weights.q_terminal, "weights.q_terminal")?;
        dim(&self.weights.v_terminal, "weights.v_terminal")?;
        if let Some(nq) = &self.nominal_q {
            dim(nq, "nominal_q")?;
        }
        for ph in &self.phase {
            for c in &ph.contacts {
                if !model.contacts.iter().any(|f| &f.name == c) {
                    return Err(ModelError::Invalid(format!("unknown contact frame '{c}'")));
                }
            }
            for name in ph.anchors.keys().chain(ph.shifts.keys()) {
                if !model.contacts.iter().any(|f| &f.name == name) {
                    return Err(ModelError::Invalid(format!("anchor for unknown frame '{name}'")));
                }
            }
        }
        if let (Some(l), Some(u)) = (&self.bounds.x_lower, &self.bounds.x_upper) {
            if l.iter().zip(u).any(|(a, b)| a > b) {
                return Err(ModelError::Invalid("state bounds out of order".into()));
            }
        }
        if let Some(mpc) = &self.mpc {
            if mpc.iters == 0 {
                return Err(ModelError::Invalid("mpc iteration budget must be >= 1".into()));
            }
            if mpc.control_hz * self.dt < 1.0 - 1e-9 {
                return Err(ModelError::Invalid(
                    "control period must not exceed the node duration".into(),
                ));
            }
            for d in &mpc.disturbance {
                if d.dv.len() != nv {
                    return Err(ModelError::Invalid(format!(
                        "disturbance dv has length {}, model has nv = {nv}",
                        d.dv.len()
                    )));
                }
            }
        }
        Ok(())
    }
}

fn builtin_model(name: &str) -> Result<ResolvedModel, ModelError> {
    match name {
        "double-pendulum" | "pend" => {
            let (planar, actuation) = models::double_pendulum();
            Ok(ResolvedModel { planar, actuation, contacts: vec![] })
        }
        "birotor" | "quad" => {
            let (planar, actuation) = models::birotor();
            Ok(ResolvedModel { planar, actuation, contacts: vec![] })
        }
        "monoped" => {
            let (planar, actuation, contacts) = models::monoped();
            Ok(ResolvedModel {
                planar,
                actuation,
                contacts: vec![NamedContact {
                    name: "foot".into(),
                    frame: contacts.frames[0].clone(),
                }],
            })
        }
        "biped" => {
            let (planar, actuation, contacts) = models::biped();
            Ok(ResolvedModel {
                planar,
                actuation,
                contacts: vec![
                    NamedContact { name: "left".into(), frame: contacts.frames[0].clone() },
                    NamedContact { name: "right".into(), frame: contacts.frames[1].clone() },
                ],
            })
        }
        other => Err(ModelError::Invalid(format!("unknown builtin model '{other}'"))),
    }
}

/// Problem specs shipped with the crate, loadable by name.
pub fn builtin_spec(name: &str) -> Option<&'static str> {
    match name {
        "pend" => Some(include_str!("../../../../problems/pend.toml")),
        "birotor" => Some(include_str!("../../../../problems/birotor.toml")),
        "monoped-hop" => Some(include_str!("../../../../problems/monoped-hop.toml")),
        "biped-walk" => Some(include_str!("../../../../problems/biped-walk.toml")),
        _ => None,
    }
}

pub fn builtin_names() -> &'static [&'static str] {
    &["pend", "birotor", "monoped-hop", "biped-walk"]
}
