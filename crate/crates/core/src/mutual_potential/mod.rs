//! Mutual gravitational potential of two polyhedra and its gradients.
//!
//! Both bodies are split into simplices. For each simplex pair the inverse
//! distance is expanded in the barycentric coordinates of both simplices and
//! integrated term by term against the Q tensors. The series converges for
//! configurations outside the bodies' circumscribing spheres.

pub mod cubature;
mod evaluator;
pub mod explicit;
mod pair;
pub mod poly;
pub mod qtensor;
pub mod series;

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

pub use evaluator::{global_evaluation_count, Kernel, MutualPotential, PairContribution, Reduction};
pub use pair::{assemble_pair_geometry, PairGeometry};
pub use qtensor::{compute_q_tensors, QTensorSet, MAX_Q_ORDER};

use crate::body_model::PolyhedralBody;
use crate::so3::vee;

#[derive(Debug, Error)]
pub enum PotentialError {
    #[error("series order {order} exceeds the supported maximum {max}")]
    OrderTooHigh { order: usize, max: usize },
    #[error("singular configuration: centroid separation is {0}")]
    SingularConfiguration(f64),
}

/// Potential and gradients at one relative configuration, in the body-2 frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GravityGradients {
    pub u: f64,
    pub du_dx: Vector3<f64>,
    pub du_dr: Matrix3<f64>,
    pub moment: Vector3<f64>,
}

/// Moment from the attitude gradient: `Σ_c r_c × (∂U/∂R)_c` over the columns
/// of `R`, so that `hat(M) = ∂U/∂R Rᵀ − R ∂U/∂Rᵀ`.
pub fn moment(du_dr: &Matrix3<f64>, r: &Matrix3<f64>) -> Vector3<f64> {
    2.0 * vee(&(du_dr * r.transpose()))
}

/// Mutual potential `U` at `(X, R)`.
pub fn potential(
    x: &Vector3<f64>,
    r: &Matrix3<f64>,
    body1: &PolyhedralBody,
    body2: &PolyhedralBody,
    g: f64,
    q: &QTensorSet,
    order: usize,
) -> Result<f64, PotentialError> {
    MutualPotential::new(body1, body2, g, q, order)?.potential(x, r)
}

/// `∂U/∂X` at `(X, R)`.
pub fn force_gradient(
    x: &Vector3<f64>,
    r: &Matrix3<f64>,
    body1: &PolyhedralBody,
    body2: &PolyhedralBody,
    g: f64,
    q: &QTensorSet,
    order: usize,
) -> Result<Vector3<f64>, PotentialError> {
    Ok(MutualPotential::new(body1, body2, g, q, order)?.evaluate(x, r)?.du_dx)
}

/// `∂U/∂R` at `(X, R)`.
pub fn attitude_gradient(
    x: &Vector3<f64>,
    r: &Matrix3<f64>,
    body1: &PolyhedralBody,
    body2: &PolyhedralBody,
    g: f64,
    q: &QTensorSet,
    order: usize,
) -> Result<Matrix3<f64>, PotentialError> {
    Ok(MutualPotential::new(body1, body2, g, q, order)?.evaluate(x, r)?.du_dr)
}
