//! Inverse dynamics, contact kinematics, impulse and forward contact
//! dynamics for planar trees, with exact derivatives via dual-number
//! sweeps through the same generic recursions.

use nalgebra::{DMatrix, DVector};

use crate::error::ModelError;

use super::actuation::{torque_from_force, ActuationModel};
use super::kinematics::{
    cross2, forward_kinematics, perp, point_acceleration, point_velocity, rot, Frame,
};
use super::model::{BaseKind, ContactSet, JointKind, PlanarModel};
use super::scalar::{lu_solve, Dual, Real};

fn frame_of<'a, T>(frames: &'a [Frame<T>], link: Option<usize>) -> &'a Frame<T> {
    match link {
        Some(i) => &frames[i + 1],
        None => &frames[0],
    }
}

/// Inverse dynamics without contact forces: outward velocity/acceleration
/// sweep, inward force sweep.
fn id_free<T: Real>(model: &PlanarModel, q: &[T], v: &[T], a: &[T]) -> Vec<T> {
    let nb = model.base_dofs();
    let nv = model.nv();
    let nl = model.links.len();
    let frames = forward_kinematics(model, q, v, a);
    let g = [T::constant(model.gravity[0]), T::constant(model.gravity[1])];

    // Net force and torque each body transmits through its joint, about the
    // joint origin. Children are folded in before extraction.
    let mut force = vec![[T::constant(0.0); 2]; nl + 1];
    let mut torque = vec![T::constant(0.0); nl + 1];

    let body_params = |i: usize| -> (f64, [f64; 2], f64) {
        if i == 0 {
            (model.base_mass, model.base_com, model.base_inertia)
        } else {
            let l = &model.links[i - 1];
            (l.mass, l.com, l.inertia)
        }
    };

    for i in 0..=nl {
        if i == 0 && model.base == BaseKind::Fixed {
            continue;
        }
        let (mass, com, inertia) = body_params(i);
        let f = &frames[i];
        let com_w = rot(f, [T::constant(com[0]), T::constant(com[1])]);
        let c = [f.p[0] + com_w[0], f.p[1] + com_w[1]];
        let ac = point_acceleration(f, c);
        let m = T::constant(mass);
        let fi = [m * (ac[0] - g[0]), m * (ac[1] - g[1])];
        force[i] = fi;
        torque[i] = T::constant(inertia) * f.domega + cross2(com_w, fi);
    }

    let mut tau = vec![T::constant(0.0); nv];
    for i in (0..nl).rev() {
        let link = &model.links[i];
        let fr = &frames[i + 1];
        match link.joint {
            JointKind::Revolute => {
                tau[nb + i] = torque[i + 1];
            }
            JointKind::Prismatic => {
                let d = rot(fr, [T::constant(link.axis[0]), T::constant(link.axis[1])]);
                tau[nb + i] = force[i + 1][0] * d[0] + force[i + 1][1] * d[1];
            }
        }
        let parent = match link.parent {
            Some(p) => p + 1,
            None => 0,
        };
        let rp = [fr.p[0] - frames[parent].p[0], fr.p[1] - frames[parent].p[1]];
        force[parent][0] = force[parent][0] + force[i + 1][0];
        force[parent][1] = force[parent][1] + force[i + 1][1];
        torque[parent] = torque[parent] + torque[i + 1] + cross2(rp, force[i + 1]);
    }
    if model.base == BaseKind::FloatingPlanar {
        tau[0] = force[0][0];
        tau[1] = force[0][1];
        tau[2] = torque[0];
    }
    tau
}

/// Row-major contact Jacobian (nf × nv): per frame, the world velocity of
/// the contact point with respect to generalized velocities.
fn contact_jacobian_rows<T: Real>(
    model: &PlanarModel,
    contacts: &ContactSet,
    frames: &[Frame<T>],
) -> Vec<Vec<[T; 2]>> {
    let nb = model.base_dofs();
    let nv = model.nv();
    let zero = T::constant(0.0);
    let mut out = Vec::with_capacity(contacts.frames.len());
    for cf in &contacts.frames {
        let body = frame_of(frames, cf.link);
        let off = rot(body, [T::constant(cf.offset[0]), T::constant(cf.offset[1])]);
        let pt = [body.p[0] + off[0], body.p[1] + off[1]];
        let mut cols = vec![[zero; 2]; nv];
        if model.base == BaseKind::FloatingPlanar {
            cols[0] = [T::constant(1.0), zero];
            cols[1] = [zero, T::constant(1.0)];
            cols[2] = perp([pt[0] - frames[0].p[0], pt[1] - frames[0].p[1]]);
        }
        // Ancestors of the contact body contribute their joint columns.
        let mut cursor = cf.link;
        while let Some(j) = cursor {
            let jf = &frames[j + 1];
            cols[nb + j] = match model.links[j].joint {
                JointKind::Revolute => perp([pt[0] - jf.p[0], pt[1] - jf.p[1]]),
                JointKind::Prismatic => {
                    rot(jf, [T::constant(model.links[j].axis[0]), T::constant(model.links[j].axis[1])])
                }
            };
            cursor = model.links[j].parent;
        }
        out.push(cols);
    }
    out
}

/// Select the constrained components of a planar pair per contact rows.
fn select_rows<T: Copy>(pair: [T; 2], rows: usize) -> Vec<T> {
    match rows {
        1 => vec![pair[1]],
        _ => vec![pair[0], pair[1]],
    }
}

/// Constraint-space acceleration a_c = J̇ v + J a + k_d J v + k_p e(q),
/// evaluated pointwise through the kinematic sweep.
fn ac_rows<T: Real>(
    model: &PlanarModel,
    contacts: &ContactSet,
    q: &[T],
    v: &[T],
    a: &[T],
) -> Vec<T> {
    let frames = forward_kinematics(model, q, v, a);
    let (kp, kd) = contacts.baumgarte;
    let kp = T::constant(kp);
    let kd = T::constant(kd);
    let mut out = Vec::with_capacity(contacts.nf());
    for cf in &contacts.frames {
        let body = frame_of(&frames, cf.link);
        let off = rot(body, [T::constant(cf.offset[0]), T::constant(cf.offset[1])]);
        let pt = [body.p[0] + off[0], body.p[1] + off[1]];
        let acc = point_acceleration(body, pt);
        let vel = point_velocity(body, pt);
        let err = [pt[0] - T::constant(cf.anchor[0]), pt[1] - T::constant(cf.anchor[1])];
        let full = [
            acc[0] + kd * vel[0] + kp * err[0],
            acc[1] + kd * vel[1] + kp * err[1],
        ];
        out.extend(select_rows(full, cf.rows));
    }
    out
}

/// Contact Jacobian as an nf × nv matrix (f64).
pub fn contact_jacobian(model: &PlanarModel, contacts: &ContactSet, q: &DVector<f64>) -> DMatrix<f64> {
    let nv = model.nv();
    let zeros = vec![0.0; nv];
    let frames = forward_kinematics(model, q.as_slice(), &zeros, &zeros);
    let cols = contact_jacobian_rows(model, contacts, &frames);
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(contacts.nf());
    for (cf, jc) in contacts.frames.iter().zip(&cols) {
        if cf.rows == 2 {
            rows.push(jc.iter().map(|c| c[0]).collect());
        }
        rows.push(jc.iter().map(|c| c[1]).collect());
    }
    DMatrix::from_fn(rows.len(), nv, |r, c| rows[r][c])
}

/// ID(q, v, a, λ) = M a + b(q, v) − J_cᵀ λ, computed recursively.
pub fn rnea(
    model: &PlanarModel,
    contacts: &ContactSet,
    q: &DVector<f64>,
    v: &DVector<f64>,
    a: &DVector<f64>,
    lambda: &DVector<f64>,
) -> DVector<f64> {
    let tau = id_free::<f64>(model, q.as_slice(), v.as_slice(), a.as_slice());
    let mut out = DVector::from_vec(tau);
    if contacts.nf() > 0 {
        let jc = contact_jacobian(model, contacts, q);
        out -= jc.transpose() * lambda;
    }
    out
}

/// Directional dual sweep of the contact-coupled inverse dynamics.
fn id_contact_dual(
    model: &PlanarModel,
    contacts: &ContactSet,
    q: &[Dual],
    v: &[Dual],
    a: &[Dual],
    lambda: &DVector<f64>,
) -> Vec<Dual> {
    let mut tau = id_free::<Dual>(model, q, v, a);
    if contacts.nf() > 0 {
        let frames = forward_kinematics(model, q, v, a);
        let cols = contact_jacobian_rows(model, contacts, &frames);
        let mut row_idx = 0;
        for (cf, jc) in contacts.frames.iter().zip(&cols) {
            let axes: &[usize] = if cf.rows == 1 { &[1] } else { &[0, 1] };
            for &axis in axes {
                let lam = Dual::constant(lambda[row_idx]);
                for (col, pair) in jc.iter().enumerate() {
                    tau[col] = tau[col] - pair[axis] * lam;
                }
                row_idx += 1;
            }
        }
    }
    tau
}

fn lift(x: &DVector<f64>, var: Option<usize>) -> Vec<Dual> {
    (0..x.len())
        .map(|i| if Some(i) == var { Dual::var(x[i]) } else { Dual::from(x[i]) })
        .collect()
}

/// Analytic derivatives of the inverse dynamics:
/// (∂ID/∂q, ∂ID/∂v, ∂ID/∂a = M, ∂ID/∂λ = −J_cᵀ).
pub fn rnea_derivatives(
    model: &PlanarModel,
    contacts: &ContactSet,
    q: &DVector<f64>,
    v: &DVector<f64>,
    a: &DVector<f64>,
    lambda: &DVector<f64>,
) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let nv = model.nv();
    let mut did_dq = DMatrix::zeros(nv, nv);
    let mut did_dv = DMatrix::zeros(nv, nv);
    let v0 = lift(v, None);
    let q0 = lift(q, None);
    let a0 = lift(a, None);
    for j in 0..nv {
        let qj = lift(q, Some(j));
        let col = id_contact_dual(model, contacts, &qj, &v0, &a0, lambda);
        for (i, t) in col.iter().enumerate() {
            did_dq[(i, j)] = t.dx;
        }
        let vj = lift(v, Some(j));
        let col = id_contact_dual(model, contacts, &q0, &vj, &a0, lambda);
        for (i, t) in col.iter().enumerate() {
            did_dv[(i, j)] = t.dx;
        }
    }
    let m = mass_matrix(model, q);
    let jc = contact_jacobian(model, contacts, q);
    (did_dq, did_dv, m, -jc.transpose())
}

/// Joint-space inertia matrix, assembled column-wise via the inverse
/// dynamics with unit accelerations and zeroed bias.
pub fn mass_matrix(model: &PlanarModel, q: &DVector<f64>) -> DMatrix<f64> {
    let nv = model.nv();
    let zeros = vec![0.0; nv];
    let bias = id_free::<f64>(model, q.as_slice(), &zeros, &zeros);
    let mut m = DMatrix::zeros(nv, nv);
    let mut unit = vec![0.0; nv];
    for j in 0..nv {
        unit[j] = 1.0;
        let col = id_free::<f64>(model, q.as_slice(), &zeros, &unit);
        for i in 0..nv {
            m[(i, j)] = col[i] - bias[i];
        }
        unit[j] = 0.0;
    }
    // Symmetry to machine precision comes out of the recursion; enforce it.
    for i in 0..nv {
        for j in (i + 1)..nv {
            let s = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = s;
            m[(j, i)] = s;
        }
    }
    m
}

/// Coriolis, centrifugal and gravity bias b(q, v) = ID(q, v, 0, 0).
pub fn bias_force(model: &PlanarModel, q: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
    let zeros = vec![0.0; model.nv()];
    DVector::from_vec(id_free::<f64>(model, q.as_slice(), v.as_slice(), &zeros))
}

/// Contact kinematics bundle: J_c, a_c and the state derivatives of a_c.
pub struct ContactKinematics {
    pub jc: DMatrix<f64>,
    pub ac: DVector<f64>,
    pub dac_dq: DMatrix<f64>,
    pub dac_dv: DMatrix<f64>,
}

pub fn contact_kinematics(
    model: &PlanarModel,
    contacts: &ContactSet,
    q: &DVector<f64>,
    v: &DVector<f64>,
    a: &DVector<f64>,
) -> ContactKinematics {
    let nv = model.nv();
    let nf = contacts.nf();
    let jc = contact_jacobian(model, contacts, q);
    let ac = DVector::from_vec(ac_rows::<f64>(model, contacts, q.as_slice(), v.as_slice(), a.as_slice()));
    let mut dac_dq = DMatrix::zeros(nf, nv);
    let mut dac_dv = DMatrix::zeros(nf, nv);
    let q0 = lift(q, None);
    let v0 = lift(v, None);
    let a0 = lift(a, None);
    for j in 0..nv {
        let qj = lift(q, Some(j));
        for (i, t) in ac_rows::<Dual>(model, contacts, &qj, &v0, &a0).iter().enumerate() {
            dac_dq[(i, j)] = t.dx;
        }
        let vj = lift(v, Some(j));
        for (i, t) in ac_rows::<Dual>(model, contacts, &q0, &vj, &a0).iter().enumerate() {
            dac_dv[(i, j)] = t.dx;
        }
    }
    ContactKinematics { jc, ac, dac_dq, dac_dv }
}

/// Stagewise equality-constraint blocks: residual, state Jacobian
/// (nh × 2 nv) and control Jacobian.
pub struct ConstraintBlocks {
    pub h: DVector<f64>,
    pub hx: DMatrix<f64>,
    pub hu: DMatrix<f64>,
}

/// Redundant inverse-dynamics constraint with u = (a, τ, λ):
/// rows [ID(q,v,a,λ) − A(q,v,τ); a_c(q,v,a)].
#[allow(clippy::too_many_arguments)]
pub fn assemble_redundant(
    model: &PlanarModel,
    actuation: &ActuationModel,
    contacts: &ContactSet,
    q: &DVector<f64>,
    v: &DVector<f64>,
    a: &DVector<f64>,
    tau: &DVector<f64>,
    lambda: &DVector<f64>,
) -> ConstraintBlocks {
    let nv = model.nv();
    let ntau = actuation.ntau();
    let nf = contacts.nf();
    let nh = nv + nf;
    let nu = nv + ntau + nf;

    let residual = |q: &[Dual], v: &[Dual]| -> Vec<Dual> {
        let a_l: Vec<Dual> = a.iter().map(|&x| Dual::from(x)).collect();
        let tau_l: Vec<Dual> = tau.iter().map(|&x| Dual::from(x)).collect();
        let mut rows = id_contact_dual(model, contacts, q, v, &a_l, lambda);
        let act = actuation.map(q, v, &tau_l);
        for i in 0..nv {
            rows[i] = rows[i] - act[i];
        }
        rows.extend(ac_rows::<Dual>(model, contacts, q, v, &a_l));
        rows
    };

    let h = {
        let rows = residual(&lift(q, None), &lift(v, None));
        DVector::from_iterator(nh, rows.iter().map(|t| t.re))
    };

    let mut hx = DMatrix::zeros(nh, 2 * nv);
    let v0 = lift(v, None);
    let q0 = lift(q, None);
    for j in 0..nv {
        for (i, t) in residual(&lift(q, Some(j)), &v0).iter().enumerate() {
            hx[(i, j)] = t.dx;
        }
        for (i, t) in residual(&q0, &lift(v, Some(j))).iter().enumerate() {
            hx[(i, nv + j)] = t.dx;
        }
    }

    let m = mass_matrix(model, q);
    let jc = contact_jacobian(model, contacts, q);
    let datau = actuation.d_tau(q);
    let mut hu = DMatrix::zeros(nh, nu);
    hu.view_mut((0, 0), (nv, nv)).copy_from(&m);
    hu.view_mut((0, nv), (nv, ntau)).copy_from(&(-&datau));
    if nf > 0 {
        hu.view_mut((0, nv + ntau), (nv, nf)).copy_from(&(-jc.transpose()));
        hu.view_mut((nv, 0), (nf, nv)).copy_from(&jc);
    }
    ConstraintBlocks { h, hx, hu }
}

/// Condensed inverse-dynamics constraint with u = (a, λ):
/// rows [Uᵀ(q) ID(q,v,a,λ); a_c(q,v,a)] with U spanning the under-actuated
/// subspace.
pub fn assemble_condensed(
    model: &PlanarModel,
    actuation: &ActuationModel,
    contacts: &ContactSet,
    q: &DVector<f64>,
    v: &DVector<f64>,
    a: &DVector<f64>,
    lambda: &DVector<f64>,
) -> ConstraintBlocks {
    let nv = model.nv();
    let n_ua = actuation.n_underactuated();
    let nf = contacts.nf();
    let nh = n_ua + nf;
    let nu = nv + nf;

    let residual = |q: &[Dual], v: &[Dual]| -> Vec<Dual> {
        let a_l: Vec<Dual> = a.iter().map(|&x| Dual::from(x)).collect();
        let id = id_contact_dual(model, contacts, q, v, &a_l, lambda);
        let u_rows = actuation.underactuated_rows::<Dual>(q);
        let mut rows: Vec<Dual> = u_rows
            .iter()
            .map(|row| {
                let mut s = Dual::constant(0.0);
                for (c, w) in row.iter().enumerate() {
                    s = s + *w * id[c];
                }
                s
            })
            .collect();
        rows.extend(ac_rows::<Dual>(model, contacts, q, v, &a_l));
        rows
    };

    let h = {
        let rows = residual(&lift(q, None), &lift(v, None));
        DVector::from_iterator(nh, rows.iter().map(|t| t.re))
    };

    let mut hx = DMatrix::zeros(nh, 2 * nv);
    let v0 = lift(v, None);
    let q0 = lift(q, None);
    for j in 0..nv {
        for (i, t) in residual(&lift(q, Some(j)), &v0).iter().enumerate() {
            hx[(i, j)] = t.dx;
        }
        for (i, t) in residual(&q0, &lift(v, Some(j))).iter().enumerate() {
            hx[(i, nv + j)] = t.dx;
        }
    }

    let m = mass_matrix(model, q);
    let jc = contact_jacobian(model, contacts, q);
    let u_rows = actuation.underactuated_rows::<f64>(q.as_slice());
    let mut u_mat = DMatrix::zeros(n_ua, nv);
    for (r, row) in u_rows.iter().enumerate() {
        for (c, w) in row.iter().enumerate() {
            u_mat[(r, c)] = *w;
        }
    }
    let mut hu = DMatrix::zeros(nh, nu);
    hu.view_mut((0, 0), (n_ua, nv)).copy_from(&(&u_mat * &m));
    if nf > 0 {
        hu.view_mut((0, nv), (n_ua, nf)).copy_from(&(-(&u_mat * jc.transpose())));
        hu.view_mut((n_ua, 0), (nf, nv)).copy_from(&jc);
    }
    ConstraintBlocks { h, hx, hu }
}

/// τ realizing the actuated rows of ID(q, v, a, λ).
pub fn recover_torque(
    model: &PlanarModel,
    actuation: &ActuationModel,
    contacts: &ContactSet,
    q: &DVector<f64>,
    v: &DVector<f64>,
    a: &DVector<f64>,
    lambda: &DVector<f64>,
) -> Result<DVector<f64>, ModelError> {
    let id = rnea(model, contacts, q, v, a, lambda);
    torque_from_force(actuation, q, &id)
}

/// Post-impact velocity and contact impulse of a contact-gain transition.
pub struct ImpulseResult {
    pub v_plus: DVector<f64>,
    pub impulse: DVector<f64>,
    pub dv_dq: DMatrix<f64>,
    pub dv_dvm: DMatrix<f64>,
}

/// Impulse dynamics: [M J_Cᵀ; J_C 0] [v⁺; −Λ] = [M v⁻; 0]. Post-impact
/// contact velocity is zero and momentum balance holds.
pub fn impulse_dynamics(
    model: &PlanarModel,
    contacts: &ContactSet,
    q: &DVector<f64>,
    v_minus: &DVector<f64>,
) -> Result<ImpulseResult, ModelError> {
    let nv = model.nv();
    let nf = contacts.nf();
    let dim = nv + nf;

    let solve = |q: &[Dual], vm: &[Dual]| -> Option<Vec<Dual>> {
        let zeros = vec![Dual::constant(0.0); nv];
        // M v⁻ = ID(q, 0, v⁻, 0) − ID(q, 0, 0, 0) evaluated generically.
        let mv = id_free::<Dual>(model, q, &zeros, vm);
        let b0 = id_free::<Dual>(model, q, &zeros, &zeros);
        let frames = forward_kinematics(model, q, &zeros, &zeros);
        let cols = contact_jacobian_rows(model, contacts, &frames);
        let mut kkt = vec![Dual::constant(0.0); dim * dim];
        // Mass block column-wise via unit accelerations.
        let mut unit = vec![Dual::constant(0.0); nv];
        for j in 0..nv {
            unit[j] = Dual::constant(1.0);
            let col = id_free::<Dual>(model, q, &zeros, &unit);
            for i in 0..nv {
                kkt[i * dim + j] = col[i] - b0[i];
            }
            unit[j] = Dual::constant(0.0);
        }
        let mut r = 0;
        for (cf, jc) in contacts.frames.iter().zip(&cols) {
            let axes: &[usize] = if cf.rows == 1 { &[1] } else { &[0, 1] };
            for &axis in axes {
                for c in 0..nv {
                    kkt[(nv + r) * dim + c] = jc[c][axis];
                    kkt[c * dim + nv + r] = jc[c][axis];
                }
                r += 1;
            }
        }
        let mut rhs = vec![Dual::constant(0.0); dim];
        for i in 0..nv {
            rhs[i] = mv[i] - b0[i];
        }
        lu_solve(&mut kkt, &mut rhs, dim)
    };

    let base = solve(&lift(q, None), &lift(v_minus, None))
        .ok_or_else(|| ModelError::Invalid("impulse KKT matrix is singular".into()))?;
    let v_plus = DVector::from_iterator(nv, base[..nv].iter().map(|t| t.re));
    // Second block solves for −Λ.
    let impulse = DVector::from_iterator(nf, base[nv..].iter().map(|t| -t.re));

    let mut dv_dq = DMatrix::zeros(nv, nv);
    let mut dv_dvm = DMatrix::zeros(nv, nv);
    let v0 = lift(v_minus, None);
    let q0 = lift(q, None);
    for j in 0..nv {
        let sol = solve(&lift(q, Some(j)), &v0)
            .ok_or_else(|| ModelError::Invalid("impulse KKT matrix is singular".into()))?;
        for i in 0..nv {
            dv_dq[(i, j)] = sol[i].dx;
        }
        let sol = solve(&q0, &lift(v_minus, Some(j)))
            .ok_or_else(|| ModelError::Invalid("impulse KKT matrix is singular".into()))?;
        for i in 0..nv {
            dv_dvm[(i, j)] = sol[i].dx;
        }
    }
    Ok(ImpulseResult { v_plus, impulse, dv_dq, dv_dvm })
}

/// Forward contact dynamics and its derivatives.
pub struct ForwardDynamics {
    pub vdot: DVector<f64>,
    pub lambda: DVector<f64>,
    pub dvdot_dq: DMatrix<f64>,
    pub dvdot_dv: DMatrix<f64>,
    /// ∂v̇/∂f for a generalized applied force f (nv × nv).
    pub dvdot_df: DMatrix<f64>,
}

/// Baseline forward model: [M J_cᵀ; J_c 0][v̇; −λ] = [f − b(q,v); −a_c⁰]
/// with f an applied generalized force and a_c⁰ the drift part of the
/// constraint acceleration.
pub fn contact_forward_dynamics(
    model: &PlanarModel,
    contacts: &ContactSet,
    q: &DVector<f64>,
    v: &DVector<f64>,
    force: &DVector<f64>,
) -> Result<ForwardDynamics, ModelError> {
    let nv = model.nv();
    let nf = contacts.nf();
    let dim = nv + nf;

    let solve = |q: &[Dual], v: &[Dual], f: &[Dual]| -> Option<Vec<Dual>> {
        let zeros = vec![Dual::constant(0.0); nv];
        let b = id_free::<Dual>(model, q, v, &zeros);
        let frames0 = forward_kinematics(model, q, &zeros, &zeros);
        let cols = contact_jacobian_rows(model, contacts, &frames0);
        let ac0 = ac_rows::<Dual>(model, contacts, q, v, &zeros);
        let mut kkt = vec![Dual::constant(0.0); dim * dim];
        let b0 = id_free::<Dual>(model, q, &zeros, &zeros);
        let mut unit = vec![Dual::constant(0.0); nv];
        for j in 0..nv {
            unit[j] = Dual::constant(1.0);
            let col = id_free::<Dual>(model, q, &zeros, &unit);
            for i in 0..nv {
                kkt[i * dim + j] = col[i] - b0[i];
            }
            unit[j] = Dual::constant(0.0);
        }
        let mut r = 0;
        for (cf, jc) in contacts.frames.iter().zip(&cols) {
            let axes: &[usize] = if cf.rows == 1 { &[1] } else { &[0, 1] };
            for &axis in axes {
                for c in 0..nv {
                    kkt[(nv + r) * dim + c] = jc[c][axis];
                    kkt[c * dim + nv + r] = jc[c][axis];
                }
                r += 1;
            }
        }
        let mut rhs = vec![Dual::constant(0.0); dim];
        for i in 0..nv {
            rhs[i] = f[i] - b[i];
        }
        for i in 0..nf {
            rhs[nv + i] = -ac0[i];
        }
        lu_solve(&mut kkt, &mut rhs, dim)
    };

    let singular = || ModelError::Invalid("contact KKT matrix is singular".into());
    let f0 = lift(force, None);
    let base = solve(&lift(q, None), &lift(v, None), &f0).ok_or_else(singular)?;
    let vdot = DVector::from_iterator(nv, base[..nv].iter().map(|t| t.re));
    let lambda = DVector::from_iterator(nf, base[nv..].iter().map(|t| -t.re));

    let mut dvdot_dq = DMatrix::zeros(nv, nv);
    let mut dvdot_dv = DMatrix::zeros(nv, nv);
    let mut dvdot_df = DMatrix::zeros(nv, nv);
    let q0 = lift(q, None);
    let v0 = lift(v, None);
    for j in 0..nv {
        let sol = solve(&lift(q, Some(j)), &v0, &f0).ok_or_else(singular)?;
        for i in 0..nv {
            dvdot_dq[(i, j)] = sol[i].dx;
        }
        let sol = solve(&q0, &lift(v, Some(j)), &f0).ok_or_else(singular)?;
        for i in 0..nv {
            dvdot_dv[(i, j)] = sol[i].dx;
        }
        let sol = solve(&q0, &v0, &lift(force, Some(j))).ok_or_else(singular)?;
        for i in 0..nv {
            dvdot_df[(i, j)] = sol[i].dx;
        }
    }
    Ok(ForwardDynamics { vdot, lambda, dvdot_dq, dvdot_dv, dvdot_df })
}

/// World position and velocity of a point fixed on a body, with Jacobians.
pub struct PointState {
    pub p: [f64; 2],
    pub pdot: [f64; 2],
    /// 2 × nv position Jacobian ∂p/∂q.
    pub dp_dq: DMatrix<f64>,
    pub dpdot_dq: DMatrix<f64>,
    pub dpdot_dv: DMatrix<f64>,
}

/// Kinematic state of a contact-frame point (used by swing-foot tracking).
pub fn point_state(
    model: &PlanarModel,
    frame: &super::model::ContactFrame,
    q: &DVector<f64>,
    v: &DVector<f64>,
) -> PointState {
    let nv = model.nv();
    let eval = |q: &[Dual], v: &[Dual]| -> [Dual; 4] {
        let zeros = vec![Dual::constant(0.0); nv];
        let frames = forward_kinematics(model, q, v, &zeros);
        let body = frame_of(&frames, frame.link);
        let off = rot(body, [Dual::constant(frame.offset[0]), Dual::constant(frame.offset[1])]);
        let pt = [body.p[0] + off[0], body.p[1] + off[1]];
        let vel = point_velocity(body, pt);
        [pt[0], pt[1], vel[0], vel[1]]
    };
    let base = eval(&lift(q, None), &lift(v, None));
    let mut dp_dq = DMatrix::zeros(2, nv);
    let mut dpdot_dq = DMatrix::zeros(2, nv);
    let mut dpdot_dv = DMatrix::zeros(2, nv);
    let q0 = lift(q, None);
    let v0 = lift(v, None);
    for j in 0..nv {
        let s = eval(&lift(q, Some(j)), &v0);
        dp_dq[(0, j)] = s[0].dx;
        dp_dq[(1, j)] = s[1].dx;
        dpdot_dq[(0, j)] = s[2].dx;
        dpdot_dq[(1, j)] = s[3].dx;
        let s = eval(&q0, &lift(v, Some(j)));
        dpdot_dv[(0, j)] = s[2].dx;
        dpdot_dv[(1, j)] = s[3].dx;
    }
    PointState {
        p: [base[0].re, base[1].re],
        pdot: [base[2].re, base[3].re],
        dp_dq,
        dpdot_dq,
        dpdot_dv,
    }
}
