//! Small helpers for working with rotation matrices and the hat map.

use nalgebra::{Matrix3, Vector3};

/// The hat map: `hat(x) * y == x.cross(&y)`.
#[inline]
pub fn hat(x: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -x.z, x.y, x.z, 0.0, -x.x, -x.y, x.x, 0.0)
}

/// Inverse of [`hat`] applied to the skew-symmetric part of `m`.
#[inline]
pub fn vee(m: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(
        0.5 * (m[(2, 1)] - m[(1, 2)]),
        0.5 * (m[(0, 2)] - m[(2, 0)]),
        0.5 * (m[(1, 0)] - m[(0, 1)]),
    )
}

/// Rotation matrix `exp(hat(f))` by the Rodrigues formula.
pub fn exp(f: &Vector3<f64>) -> Matrix3<f64> {
    let theta2 = f.norm_squared();
    let (a, b) = rodrigues_coefficients(theta2);
    let s = hat(f);
    Matrix3::identity() + s * a + s * s * b
}

/// `(sin θ / θ, (1 - cos θ) / θ²)` as functions of `θ²`, with series near zero.
pub(crate) fn rodrigues_coefficients(theta2: f64) -> (f64, f64) {
    if theta2 < 1e-8 {
        (
            1.0 - theta2 / 6.0 + theta2 * theta2 / 120.0,
            0.5 - theta2 / 24.0 + theta2 * theta2 / 720.0,
        )
    } else {
        let theta = theta2.sqrt();
        (theta.sin() / theta, (1.0 - theta.cos()) / theta2)
    }
}

/// Frobenius norm of `I - RᵀR`.
pub fn orthogonality_error(r: &Matrix3<f64>) -> f64 {
    (Matrix3::identity() - r.transpose() * r).norm()
}

/// Angle of the rotation taking `b` to `a`, i.e. the angle of `a bᵀ`.
pub fn rotation_angle_between(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
    let d = a * b.transpose();
    let s = vee(&d).norm();
    let c = 0.5 * (d.trace() - 1.0);
    s.atan2(c)
}

pub fn rot_x(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

pub fn rot_z(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hat_is_cross_product() {
        let x = Vector3::new(0.3, -1.2, 2.0);
        let y = Vector3::new(-0.7, 0.4, 1.1);
        assert!((hat(&x) * y - x.cross(&y)).norm() < 1e-15);
        assert!((vee(&hat(&x)) - x).norm() < 1e-15);
    }

    #[test]
    fn exp_is_orthogonal_and_matches_axis_angle() {
        for f in [
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(1e-6, -2e-6, 3e-7),
            Vector3::new(0.4, 0.1, -0.9),
            Vector3::new(0.0, 0.0, 2.5),
        ] {
            let r = exp(&f);
            assert!(orthogonality_error(&r) < 1e-15);
            assert!((r.determinant() - 1.0).abs() < 1e-15);
            assert!((rotation_angle_between(&r, &Matrix3::identity()) - f.norm()).abs() < 1e-14);
        }
        assert!((exp(&Vector3::new(0.0, 0.0, 0.7)) - rot_z(0.7)).norm() < 1e-15);
        assert!((exp(&Vector3::new(0.7, 0.0, 0.0)) - rot_x(0.7)).norm() < 1e-15);
    }
}
