use nalgebra::Matrix3;

use crate::so3::{rot_x, rot_z};

/// Rotation for a 3-1-3 Euler sequence in degrees: `Rz(φ1) Rx(φ2) Rz(φ3)`.
pub fn euler313_to_rotation(phi1: f64, phi2: f64, phi3: f64) -> Matrix3<f64> {
    rot_z(phi1.to_radians()) * rot_x(phi2.to_radians()) * rot_z(phi3.to_radians())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_single_axis() {
        assert!((euler313_to_rotation(0.0, 0.0, 0.0) - Matrix3::identity()).norm() < 1e-16);
        let expected = Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        assert!((euler313_to_rotation(90.0, 0.0, 0.0) - expected).norm() < 1e-15);
    }

    #[test]
    fn degenerate_middle_angle_composes() {
        let a = euler313_to_rotation(25.0, 0.0, 40.0);
        let b = euler313_to_rotation(65.0, 0.0, 0.0);
        assert!((a - b).norm() < 1e-15);
    }

    #[test]
    fn result_is_a_rotation() {
        let r = euler313_to_rotation(15.0, 60.0, 10.0);
        assert!(crate::so3::orthogonality_error(&r) < 1e-15);
        assert!((r.determinant() - 1.0).abs() < 1e-15);
    }
}
