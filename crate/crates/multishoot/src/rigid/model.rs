//! Planar model description: base, links, contacts.

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BaseKind {
    #[default]
    Fixed,
    /// 3 DoF: x, z, pitch.
    FloatingPlanar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JointKind {
    Revolute,
    Prismatic,
}

/// One link of the tree. `parent = None` attaches to the base (or to the
/// world for a fixed base).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Link {
    pub parent: Option<usize>,
    pub joint: JointKind,
    /// Joint origin in the parent frame.
    pub attach: [f64; 2],
    /// Prismatic translation axis in the link frame (ignored for revolute).
    #[serde(default = "default_axis")]
    pub axis: [f64; 2],
    pub mass: f64,
    /// Center of mass in the link frame.
    pub com: [f64; 2],
    /// Rotational inertia about the center of mass.
    pub inertia: f64,
}

fn default_axis() -> [f64; 2] {
    [1.0, 0.0]
}

/// Planar rigid-body tree at desk scale.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanarModel {
    pub base: BaseKind,
    /// Base body parameters (used when the base floats).
    #[serde(default)]
    pub base_mass: f64,
    #[serde(default)]
    pub base_com: [f64; 2],
    #[serde(default)]
    pub base_inertia: f64,
    #[serde(default)]
    pub links: Vec<Link>,
    #[serde(default = "default_gravity")]
    pub gravity: [f64; 2],
}

fn default_gravity() -> [f64; 2] {
    [0.0, -9.81]
}

impl PlanarModel {
    pub fn fixed_base(links: Vec<Link>) -> Self {
        Self {
            base: BaseKind::Fixed,
            base_mass: 0.0,
            base_com: [0.0; 2],
            base_inertia: 0.0,
            links,
            gravity: default_gravity(),
        }
    }

    pub fn floating_base(mass: f64, com: [f64; 2], inertia: f64, links: Vec<Link>) -> Self {
        Self {
            base: BaseKind::FloatingPlanar,
            base_mass: mass,
            base_com: com,
            base_inertia: inertia,
            links,
            gravity: default_gravity(),
        }
    }

    pub fn base_dofs(&self) -> usize {
        match self.base {
            BaseKind::Fixed => 0,
            BaseKind::FloatingPlanar => 3,
        }
    }

    /// Generalized-velocity dimension (= configuration dimension here).
    pub fn nv(&self) -> usize {
        self.base_dofs() + self.links.len()
    }

    /// Actuated-joint count (joints, excluding the floating base).
    pub fn nj(&self) -> usize {
        self.links.len()
    }

    /// Configuration coordinates living on the circle: the base pitch and
    /// every revolute joint angle.
    pub fn wrap_indices(&self) -> Vec<usize> {
        let mut w = Vec::new();
        if self.base == BaseKind::FloatingPlanar {
            w.push(2);
        }
        let off = self.base_dofs();
        for (i, l) in self.links.iter().enumerate() {
            if l.joint == JointKind::Revolute {
                w.push(off + i);
            }
        }
        w
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.base == BaseKind::FloatingPlanar && self.base_mass <= 0.0 {
            return Err(ModelError::Invalid("floating base must have positive mass".into()));
        }
        for (i, l) in self.links.iter().enumerate() {
            if l.mass <= 0.0 {
                return Err(ModelError::Invalid(format!("link {i} mass must be positive")));
            }
            if l.inertia < 0.0 {
                return Err(ModelError::Invalid(format!("link {i} inertia must be nonnegative")));
            }
            if let Some(p) = l.parent {
                if p >= i {
                    return Err(ModelError::Invalid(format!(
                        "link {i} parent {p} must precede it (topological order)"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// One point-contact frame: a point fixed on a link (or on the base body
/// when `link` is None).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContactFrame {
    pub link: Option<usize>,
    /// Contact point in the body frame.
    pub offset: [f64; 2],
    /// 1 = vertical point contact (z row only), 2 = planar point contact.
    pub rows: usize,
    /// Holonomic anchor (contact placement); position error is measured
    /// against it for Baumgarte stabilization.
    pub anchor: [f64; 2],
}

/// Active contacts with shared Baumgarte gains.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ContactSet {
    pub frames: Vec<ContactFrame>,
    /// (kp [1/s²], kd [1/s]); defaults (0, 50).
    #[serde(default = "default_gains")]
    pub baumgarte: (f64, f64),
}

fn default_gains() -> (f64, f64) {
    (0.0, 50.0)
}

impl ContactSet {
    pub fn empty() -> Self {
        Self { frames: Vec::new(), baumgarte: default_gains() }
    }

    pub fn nf(&self) -> usize {
        self.frames.iter().map(|f| f.rows).sum()
    }

    pub fn validate(&self, model: &PlanarModel) -> Result<(), ModelError> {
        for f in &self.frames {
            match f.link {
                Some(i) if i >= model.links.len() => {
                    return Err(ModelError::Invalid(format!("contact frame on unknown link {i}")));
                }
                None if model.base == BaseKind::Fixed => {
                    return Err(ModelError::Invalid("contact on a fixed base".into()));
                }
                _ => {}
            }
            if f.rows == 0 || f.rows > 2 {
                return Err(ModelError::Invalid("contact rows must be 1 or 2".into()));
            }
        }
        if self.nf() > model.nv() {
            return Err(ModelError::Invalid("more constraint rows than velocities".into()));
        }
        Ok(())
    }
}
