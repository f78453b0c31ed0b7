//! Generic-scalar forward kinematics for planar trees: world pose, twist
//! and acceleration of every body frame, given (q, v, a).

use super::model::{BaseKind, JointKind, PlanarModel};
use super::scalar::Real;

/// World-frame kinematic state of one body frame.
#[derive(Debug, Clone, Copy)]
pub struct Frame<T> {
    pub theta: T,
    pub cos: T,
    pub sin: T,
    /// Frame origin.
    pub p: [T; 2],
    /// Angular velocity.
    pub omega: T,
    /// Velocity of the frame origin.
    pub vp: [T; 2],
    /// Angular acceleration.
    pub domega: T,
    /// Acceleration of the frame origin.
    pub ap: [T; 2],
}

pub fn rot<T: Real>(frame: &Frame<T>, r: [T; 2]) -> [T; 2] {
    [frame.cos * r[0] - frame.sin * r[1], frame.sin * r[0] + frame.cos * r[1]]
}

/// ω × r in the plane.
pub fn perp<T: Real>(r: [T; 2]) -> [T; 2] {
    [-r[1], r[0]]
}

pub fn cross2<T: Real>(a: [T; 2], b: [T; 2]) -> T {
    a[0] * b[1] - a[1] * b[0]
}

/// Velocity of a material point `pt` on `frame`.
pub fn point_velocity<T: Real>(frame: &Frame<T>, pt: [T; 2]) -> [T; 2] {
    let r = [pt[0] - frame.p[0], pt[1] - frame.p[1]];
    let w = perp(r);
    [frame.vp[0] + frame.omega * w[0], frame.vp[1] + frame.omega * w[1]]
}

/// Acceleration of a material point `pt` on `frame`.
pub fn point_acceleration<T: Real>(frame: &Frame<T>, pt: [T; 2]) -> [T; 2] {
    let r = [pt[0] - frame.p[0], pt[1] - frame.p[1]];
    let w = perp(r);
    let w2 = frame.omega * frame.omega;
    [
        frame.ap[0] + frame.domega * w[0] - w2 * r[0],
        frame.ap[1] + frame.domega * w[1] - w2 * r[1],
    ]
}

/// Frames of the base followed by every link, in link order. For a fixed
/// base the base frame is the world frame at rest.
pub fn forward_kinematics<T: Real>(model: &PlanarModel, q: &[T], v: &[T], a: &[T]) -> Vec<Frame<T>> {
    let nb = model.base_dofs();
    let zero = T::constant(0.0);
    let base = match model.base {
        BaseKind::Fixed => Frame {
            theta: zero,
            cos: T::constant(1.0),
            sin: zero,
            p: [zero, zero],
            omega: zero,
            vp: [zero, zero],
            domega: zero,
            ap: [zero, zero],
        },
        BaseKind::FloatingPlanar => Frame {
            theta: q[2],
            cos: q[2].cos(),
            sin: q[2].sin(),
            p: [q[0], q[1]],
            omega: v[2],
            vp: [v[0], v[1]],
            domega: a[2],
            ap: [a[0], a[1]],
        },
    };
    let mut frames = Vec::with_capacity(model.links.len() + 1);
    frames.push(base);
    for (i, link) in model.links.iter().enumerate() {
        let parent = match link.parent {
            Some(p) => frames[p + 1],
            None => frames[0],
        };
        let qi = q[nb + i];
        let vi = v[nb + i];
        let ai = a[nb + i];
        let attach = [T::constant(link.attach[0]), T::constant(link.attach[1])];
        let ap_world = rot(&parent, attach);
        let joint_p = [parent.p[0] + ap_world[0], parent.p[1] + ap_world[1]];
        let v_joint = point_velocity(&parent, joint_p);
        let a_joint = point_acceleration(&parent, joint_p);
        let f = match link.joint {
            JointKind::Revolute => {
                let theta = parent.theta + qi;
                Frame {
                    theta,
                    cos: theta.cos(),
                    sin: theta.sin(),
                    p: joint_p,
                    omega: parent.omega + vi,
                    vp: v_joint,
                    domega: parent.domega + ai,
                    ap: a_joint,
                }
            }
            JointKind::Prismatic => {
                // Axis rotates with the link (= parent orientation).
                let mut f = Frame {
                    theta: parent.theta,
                    cos: parent.cos,
                    sin: parent.sin,
                    p: joint_p,
                    omega: parent.omega,
                    vp: v_joint,
                    domega: parent.domega,
                    ap: a_joint,
                };
                let axis = [T::constant(link.axis[0]), T::constant(link.axis[1])];
                let d = rot(&f, axis);
                let off = [d[0] * qi, d[1] * qi];
                let poff = perp(off);
                let pd = perp(d);
                let w2 = f.omega * f.omega;
                f.p = [f.p[0] + off[0], f.p[1] + off[1]];
                f.vp = [
                    f.vp[0] + f.omega * poff[0] + d[0] * vi,
                    f.vp[1] + f.omega * poff[1] + d[1] * vi,
                ];
                let two = T::constant(2.0);
                f.ap = [
                    f.ap[0] + f.domega * poff[0] - w2 * off[0] + two * f.omega * pd[0] * vi
                        + d[0] * ai,
                    f.ap[1] + f.domega * poff[1] - w2 * off[1] + two * f.omega * pd[1] * vi
                        + d[1] * ai,
                ];
                f
            }
        };
        frames.push(f);
    }
    frames
}
