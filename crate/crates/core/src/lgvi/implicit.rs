//! Newton solve of the implicit rotation equation `h S(g) = F J_d - J_d Fᵀ`.
//!
//! With `F = exp(S(f))` the matrix equation reduces to the vector equation
//! `h g = a(θ) J f + b(θ) f × J f`, `a = sin θ / θ`, `b = (1 - cos θ) / θ²`,
//! where `J = tr(J_d) I - J_d` is the standard inertia.

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

use crate::so3::{exp, hat};

pub const DEFAULT_NEWTON_TOLERANCE: f64 = 1e-15;
pub const DEFAULT_NEWTON_MAX_ITERATIONS: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ImplicitSolveReport {
    /// Rotation vector of the solution.
    pub f: Vector3<f64>,
    pub iterations: usize,
    /// `‖F J_d − J_d Fᵀ − h S(g)‖_F / max(1, ‖J_d‖_F)` at the returned `F`.
    pub residual: f64,
}

#[derive(Clone, Copy, Debug, Error, PartialEq)]
#[error("implicit rotation solve did not converge in {iterations} iterations (residual {residual:e})")]
pub struct ImplicitSolveError {
    pub iterations: usize,
    pub residual: f64,
}

/// `a`, `b`, `a'/θ`, `b'/θ` as functions of `θ²`.
fn coefficients(theta2: f64) -> [f64; 4] {
    if theta2 < 0.1 {
        // Alternating series; the closed forms lose digits to cancellation here.
        let mut out = [0.0; 4];
        let mut fact = 1.0; // (2k+1)!
        let mut pow = 1.0; // (-θ²)^k
        for k in 0..10 {
            if k > 0 {
                fact *= (2 * k) as f64 * (2 * k + 1) as f64;
                pow *= -theta2;
            }
            out[0] += pow / fact;
            out[1] += pow / (fact * (2 * k + 2) as f64);
            if k + 1 < 10 {
                // Derivative terms use index k + 1: 2(k+1) (-1)^(k+1) θ^(2k) / (2k+3)!.
                let fact3 = fact * (2 * k + 2) as f64 * (2 * k + 3) as f64;
                let c = -2.0 * (k + 1) as f64 * pow / fact3;
                out[2] += c;
                out[3] += c / (2 * k + 4) as f64;
            }
        }
        out
    } else {
        let t = theta2.sqrt();
        let (s, c) = t.sin_cos();
        let one_minus_c = 2.0 * (0.5 * t).sin().powi(2);
        [
            s / t,
            one_minus_c / theta2,
            (t * c - s) / (theta2 * t),
            (t * s - 2.0 * one_minus_c) / (theta2 * theta2),
        ]
    }
}

fn residual_vector(f: &Vector3<f64>, j: &Matrix3<f64>, hg: &Vector3<f64>) -> Vector3<f64> {
    let [a, b, _, _] = coefficients(f.norm_squared());
    let jf = j * f;
    jf * a + f.cross(&jf) * b - hg
}

fn jacobian(f: &Vector3<f64>, j: &Matrix3<f64>) -> Matrix3<f64> {
    let [a, b, da, db] = coefficients(f.norm_squared());
    let jf = j * f;
    let fxjf = f.cross(&jf);
    jf * (f.transpose() * da) + j * a + fxjf * (f.transpose() * db) + (hat(f) * j - hat(&jf)) * b
}

/// Residual of the matrix equation, normalized by `max(1, ‖J_d‖_F)`.
pub fn matrix_residual(f: &Matrix3<f64>, jd: &Matrix3<f64>, g: &Vector3<f64>, h: f64) -> f64 {
    (f * jd - jd * f.transpose() - hat(g) * h).norm() / jd.norm().max(1.0)
}

/// Solves for `F ∈ SO(3)` by Newton iteration. The start is `h J⁻¹ g`
/// stretched to the angle `asin ‖h J⁻¹ g‖`, which is exact for spin about a
/// principal axis. Iteration
/// stops when the vector residual is below `tol · max(1, ‖J_d‖_F)` or the
/// update has reached round-off.
pub fn solve_implicit_rotation(
    g: &Vector3<f64>,
    jd: &Matrix3<f64>,
    h: f64,
    tol: f64,
    max_iterations: usize,
) -> Result<(Matrix3<f64>, ImplicitSolveReport), ImplicitSolveError> {
    let j = Matrix3::identity() * jd.trace() - jd;
    let hg = g * h;
    let scale = jd.norm().max(1.0);
    let j_inv = j.try_inverse().unwrap_or_else(Matrix3::zeros);
    let mut f = j_inv * hg;
    let s = f.norm();
    if s > 0.0 && s < 1.0 {
        f *= s.asin() / s;
    }
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iterations {
        let phi = residual_vector(&f, &j, &hg);
        if phi.norm() <= tol * scale {
            converged = true;
            break;
        }
        let Some(step) = jacobian(&f, &j).lu().solve(&phi) else {
            break;
        };
        f -= step;
        iterations += 1;
        if step.norm() <= 4.0 * f64::EPSILON * f.norm() {
            converged = true;
            break;
        }
    }
    let rot = exp(&f);
    let residual = matrix_residual(&rot, jd, g, h);
    if !converged {
        return Err(ImplicitSolveError { iterations, residual });
    }
    Ok((rot, ImplicitSolveReport { f, iterations, residual }))
}
