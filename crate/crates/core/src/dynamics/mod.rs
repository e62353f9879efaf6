//! States, the continuous relative equations of motion, conserved quantities,
//! and initial-condition helpers for the full two-body problem.
//!
//! Relative quantities live in the body-2 frame: `X = R2ᵀ(x1 - x2)`,
//! `V = R2ᵀ(v1 - v2)`, `R = R2ᵀ R1`, `Ω = R Ω1`.

mod attitude;
mod conserved;
mod elements;
mod eom;

use nalgebra::{Matrix3, Vector3};

pub use attitude::euler313_to_rotation;
pub use conserved::{conserved_quantities, kinetic_energy, DiagnosticsRecord};
pub use elements::{elements_to_relative_state, osculating_elements, ElementsError, OrbitalElements};
pub use eom::{eom_rhs, RelativeRates};

use crate::body_model::PolyhedralBody;

/// Reduced state propagated by both integrators.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RelativeState {
    pub x: Vector3<f64>,
    pub v: Vector3<f64>,
    /// Body-1 frame to body-2 frame.
    pub r: Matrix3<f64>,
    /// Body-1 angular velocity in the body-2 frame.
    pub omega: Vector3<f64>,
    /// Body-2 angular velocity in the body-2 frame.
    pub omega2: Vector3<f64>,
}

/// Inertial positions, velocities, and attitudes (body to inertial).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InertialState {
    pub x1: Vector3<f64>,
    pub x2: Vector3<f64>,
    pub v1: Vector3<f64>,
    pub v2: Vector3<f64>,
    pub r1: Matrix3<f64>,
    pub r2: Matrix3<f64>,
}

/// Mass properties of the two bodies as seen by the dynamics.
#[derive(Clone, Debug)]
pub struct SystemModel {
    pub body1: PolyhedralBody,
    pub body2: PolyhedralBody,
    pub m1: f64,
    pub m2: f64,
    /// Reduced mass `m1 m2 / (m1 + m2)`.
    pub m: f64,
    pub g: f64,
    pub j1: Matrix3<f64>,
    pub j2: Matrix3<f64>,
    pub jd1: Matrix3<f64>,
    pub jd2: Matrix3<f64>,
    pub j2_inv: Matrix3<f64>,
}

impl SystemModel {
    pub fn new(body1: PolyhedralBody, body2: PolyhedralBody, g: f64) -> Self {
        let (m1, m2) = (body1.mass, body2.mass);
        let j2_inv = body2
            .inertia
            .try_inverse()
            .expect("built bodies have positive-definite inertia");
        SystemModel {
            m1,
            m2,
            m: m1 * m2 / (m1 + m2),
            g,
            j1: body1.inertia,
            j2: body2.inertia,
            jd1: body1.nonstandard_inertia,
            jd2: body2.nonstandard_inertia,
            j2_inv,
            body1,
            body2,
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.m1 + self.m2
    }

    /// `μ = G (m1 + m2)`.
    pub fn mu(&self) -> f64 {
        self.g * self.total_mass()
    }

    /// Body-1 inertia in the body-2 frame, `R J1 Rᵀ`.
    pub fn j_r(&self, r: &Matrix3<f64>) -> Matrix3<f64> {
        r * self.j1 * r.transpose()
    }

    /// Body-1 angular velocity from its angular momentum `Γ = J_R Ω`.
    pub fn omega_from_momentum(&self, r: &Matrix3<f64>, gamma: &Vector3<f64>) -> Vector3<f64> {
        let jr = self.j_r(r);
        jr.cholesky()
            .map(|c| c.solve(gamma))
            .or_else(|| jr.try_inverse().map(|inv| inv * gamma))
            .unwrap_or_else(|| Vector3::repeat(f64::NAN))
    }
}

/// Inertial state with zero total linear momentum and the system centroid at
/// the origin, given the body-2 attitude `r2`.
pub fn init_inertial(rel: &RelativeState, model: &SystemModel, r2: &Matrix3<f64>) -> InertialState {
    let frac = model.m1 / model.total_mass();
    let x_rel = r2 * rel.x;
    let v_rel = r2 * rel.v;
    let x2 = -frac * x_rel;
    let v2 = -frac * v_rel;
    InertialState {
        x1: x2 + x_rel,
        x2,
        v1: v2 + v_rel,
        v2,
        r1: r2 * rel.r,
        r2: *r2,
    }
}

/// Relative position and attitude implied by an inertial state.
pub fn relative_configuration(inertial: &InertialState) -> (Vector3<f64>, Matrix3<f64>) {
    (
        inertial.r2.transpose() * (inertial.x1 - inertial.x2),
        inertial.r2.transpose() * inertial.r1,
    )
}
