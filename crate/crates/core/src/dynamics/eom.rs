use nalgebra::{Matrix3, Vector3};

use super::{RelativeState, SystemModel};
use crate::mutual_potential::GravityGradients;
use crate::so3::hat;

/// Time derivatives of the relative state.
#[derive(Clone, Copy, Debug)]
pub struct RelativeRates {
    pub x_dot: Vector3<f64>,
    pub v_dot: Vector3<f64>,
    pub r_dot: Matrix3<f64>,
    pub omega_dot: Vector3<f64>,
    pub omega2_dot: Vector3<f64>,
    /// Rate of the body-1 angular momentum `J_R Ω` in the body-2 frame.
    pub gamma_dot: Vector3<f64>,
}

/// Right-hand side of the relative equations of motion given the gradients
/// at the current configuration.
pub fn eom_rhs(state: &RelativeState, grads: &GravityGradients, model: &SystemModel) -> RelativeRates {
    let RelativeState { x, v, r, omega, omega2 } = *state;
    let du = grads.du_dx;
    let moment = grads.moment;

    let x_dot = v - omega2.cross(&x);
    let r_dot = hat(&(omega - omega2)) * r;
    let v_dot = -omega2.cross(&v) - du / model.m;

    let jr = model.j_r(&r);
    let gamma = jr * omega;
    let gamma_dot = -omega2.cross(&gamma) - moment;
    // Γ̇ = J̇_R Ω + J_R Ω̇ with J̇_R = S(Ω - Ω2) J_R - J_R S(Ω - Ω2).
    let rhs = -omega.cross(&gamma) - moment - jr * omega2.cross(&omega);
    let omega_dot = jr
        .cholesky()
        .map(|c| c.solve(&rhs))
        .unwrap_or_else(|| jr.try_inverse().unwrap_or_else(Matrix3::zeros) * rhs);

    let j2w2 = model.j2 * omega2;
    let omega2_dot = model.j2_inv * (-omega2.cross(&j2w2) + x.cross(&du) + moment);

    RelativeRates { x_dot, v_dot, r_dot, omega_dot, omega2_dot, gamma_dot }
}
