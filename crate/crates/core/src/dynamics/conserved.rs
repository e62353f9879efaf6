use nalgebra::Vector3;

use super::{InertialState, RelativeState, SystemModel};
use crate::so3::{hat, orthogonality_error};

/// One diagnostics sample. Energy and momenta are in the inertial frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub potential: f64,
    pub kinetic: f64,
    pub energy: f64,
    pub linear_momentum: Vector3<f64>,
    pub angular_momentum: Vector3<f64>,
    pub orthogonality_r: f64,
    pub orthogonality_r2: f64,
}

/// Kinetic energy of the relative motion plus both rotations, written with
/// the nonstandard inertia `J_d` so that it stays meaningful if the attitude
/// drifts off SO(3).
pub fn kinetic_energy(rel: &RelativeState, model: &SystemModel) -> f64 {
    let jdr = rel.r * model.jd1 * rel.r.transpose();
    let s = hat(&rel.omega);
    let s2 = hat(&rel.omega2);
    0.5 * model.m * rel.v.norm_squared()
        + 0.5 * (s * jdr * s.transpose()).trace()
        + 0.5 * (s2 * model.jd2 * s2.transpose()).trace()
}

pub fn conserved_quantities(
    t: f64,
    rel: &RelativeState,
    inertial: &InertialState,
    model: &SystemModel,
    potential: f64,
) -> DiagnosticsRecord {
    let kinetic = kinetic_energy(rel, model);
    let p1 = model.m1 * inertial.v1;
    let p2 = model.m2 * inertial.v2;
    let spin1 = inertial.r2 * (model.j_r(&rel.r) * rel.omega);
    let spin2 = inertial.r2 * (model.j2 * rel.omega2);
    DiagnosticsRecord {
        t,
        potential,
        kinetic,
        energy: kinetic + potential,
        linear_momentum: p1 + p2,
        angular_momentum: inertial.x1.cross(&p1) + spin1 + inertial.x2.cross(&p2) + spin2,
        orthogonality_r: orthogonality_error(&rel.r),
        orthogonality_r2: orthogonality_error(&inertial.r2),
    }
}
