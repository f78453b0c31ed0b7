//! Desk-scale benchmark models.

use crate::rigid::{ActuationModel, ContactFrame, ContactSet, JointKind, Link, PlanarModel};

/// Point-mass pendulum: one revolute joint, mass at distance `length`,
/// measured from the downward equilibrium.
pub fn pendulum(mass: f64, length: f64) -> PlanarModel {
    PlanarModel::fixed_base(vec![Link {
        parent: None,
        joint: JointKind::Revolute,
        attach: [0.0, 0.0],
        axis: [1.0, 0.0],
        mass,
        com: [0.0, -length],
        inertia: 0.0,
    }])
}

/// Two-link pendulum with distributed-mass links; only the first joint is
/// actuated in the swing-up benchmark.
pub fn double_pendulum() -> (PlanarModel, ActuationModel) {
    let l1 = 0.5;
    let l2 = 0.5;
    let model = PlanarModel::fixed_base(vec![
        Link {
            parent: None,
            joint: JointKind::Revolute,
            attach: [0.0, 0.0],
            axis: [1.0, 0.0],
            mass: 1.0,
            com: [0.0, -0.5 * l1],
            inertia: 1.0 / 12.0 * l1 * l1,
        },
        Link {
            parent: Some(0),
            joint: JointKind::Revolute,
            attach: [0.0, -l1],
            axis: [1.0, 0.0],
            mass: 1.0,
            com: [0.0, -0.5 * l2],
            inertia: 1.0 / 12.0 * l2 * l2,
        },
    ]);
    let actuation = ActuationModel::SelectedJoints { nv: 2, actuated: vec![0] };
    (model, actuation)
}

/// Planar birotor: floating body, two rotor thrusts at `arm` from the
/// center. Nonsquare actuation map (3 base DoF, 2 inputs).
pub fn birotor() -> (PlanarModel, ActuationModel) {
    let model = PlanarModel::floating_base(1.2, [0.0, 0.0], 0.03, vec![]);
    (model, ActuationModel::Birotor { arm: 0.18 })
}

/// Planar monoped: floating torso with hip and knee joints and a point
/// foot.
pub fn monoped() -> (PlanarModel, ActuationModel, ContactSet) {
    let thigh = 0.35;
    let shank = 0.35;
    let model = PlanarModel::floating_base(
        4.0,
        [0.0, 0.0],
        0.08,
        vec![
            Link {
                parent: None,
                joint: JointKind::Revolute,
                attach: [0.0, -0.05],
                axis: [1.0, 0.0],
                mass: 0.8,
                com: [0.0, -0.5 * thigh],
                inertia: 0.8 / 12.0 * thigh * thigh,
            },
            Link {
                parent: Some(0),
                joint: JointKind::Revolute,
                attach: [0.0, -thigh],
                axis: [1.0, 0.0],
                mass: 0.5,
                com: [0.0, -0.5 * shank],
                inertia: 0.5 / 12.0 * shank * shank,
            },
        ],
    );
    let actuation = ActuationModel::BaseUnactuated { nv: 5 };
    let contacts = ContactSet {
        frames: vec![ContactFrame { link: Some(1), offset: [0.0, -shank], rows: 2, anchor: [0.0, 0.0] }],
        baumgarte: (0.0, 50.0),
    };
    (model, actuation, contacts)
}

/// Planar biped: floating torso with two 2-link legs and point feet.
pub fn biped() -> (PlanarModel, ActuationModel, ContactSet) {
    let thigh = 0.4;
    let shank = 0.4;
    let leg = |parent_attach_x: f64| -> [Link; 2] {
        [
            Link {
                parent: None,
                joint: JointKind::Revolute,
                attach: [parent_attach_x, -0.1],
                axis: [1.0, 0.0],
                mass: 1.0,
                com: [0.0, -0.5 * thigh],
                inertia: 1.0 / 12.0 * thigh * thigh,
            },
            Link {
                parent: Some(0),
                joint: JointKind::Revolute,
                attach: [0.0, -thigh],
                axis: [1.0, 0.0],
                mass: 0.6,
                com: [0.0, -0.5 * shank],
                inertia: 0.6 / 12.0 * shank * shank,
            },
        ]
    };
    let [hip_l, mut knee_l] = leg(-0.1);
    let [mut hip_r, mut knee_r] = leg(0.1);
    knee_l.parent = Some(0);
    hip_r.parent = None;
    knee_r.parent = Some(2);
    let model = PlanarModel::floating_base(10.0, [0.0, 0.0], 0.3, vec![hip_l, knee_l, hip_r, knee_r]);
    let actuation = ActuationModel::BaseUnactuated { nv: 7 };
    let contacts = ContactSet {
        frames: vec![
            ContactFrame { link: Some(1), offset: [0.0, -shank], rows: 2, anchor: [0.0, 0.0] },
            ContactFrame { link: Some(3), offset: [0.0, -shank], rows: 2, anchor: [0.0, 0.0] },
        ],
        baumgarte: (0.0, 50.0),
    };
    (model, actuation, contacts)
}

/// Free planar point body with a two-row contact at its origin (impulse and
/// contact-dynamics edge cases).
pub fn point_body(mass: f64) -> (PlanarModel, ContactSet) {
    let model = PlanarModel::floating_base(mass, [0.0, 0.0], 1e-3, vec![]);
    let contacts = ContactSet {
        frames: vec![ContactFrame { link: None, offset: [0.0, 0.0], rows: 2, anchor: [0.0, 0.0] }],
        baumgarte: (0.0, 0.0),
    };
    (model, contacts)
}
