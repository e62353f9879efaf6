//! Reference implementation of the first four series brackets written out
//! term by term with full tensor sums and a materialized rotation-derivative
//! tensor. Slow; used to cross-check the general-order kernel.

use nalgebra::{Matrix3, Vector3};

use super::{PairGeometry, QTensorSet};

/// Per-bracket values `Û_n`, `∂Û_n/∂X`, `∂Û_n/∂R` for `n = 0..=3`.
#[derive(Clone, Debug)]
pub struct ExplicitTerms {
    pub u: [f64; 4],
    pub du_dx: [Vector3<f64>; 4],
    pub du_dr: [Matrix3<f64>; 4],
}

/// `D[i][p][φ][θ] = ∂v^i_p / ∂R^{φθ}`: `δ_{pφ} (a_i)_θ` for the body-1
/// columns and zero for the body-2 columns.
pub fn rotation_derivative_tensor(a_verts: &Matrix3<f64>) -> [[[[f64; 3]; 3]; 3]; 6] {
    let mut d = [[[[0.0; 3]; 3]; 3]; 6];
    for i in 0..3 {
        for p in 0..3 {
            for theta in 0..3 {
                d[i][p][p][theta] = a_verts[(theta, i)];
            }
        }
    }
    d
}

pub fn explicit_terms(
    geom: &PairGeometry,
    x: &Vector3<f64>,
    a_verts: &Matrix3<f64>,
    q: &QTensorSet,
) -> ExplicitTerms {
    let r = geom.r;
    let w = &geom.w;
    let rm = &geom.rmat;
    let v = &geom.v;
    let d = rotation_derivative_tensor(a_verts);
    let q0 = q.get_f64(&[]);
    let q1 = |i: usize| q.get_f64(&[i]);
    let q2 = |i: usize, j: usize| q.get_f64(&[i, j]);
    let q3 = |i: usize, j: usize, k: usize| q.get_f64(&[i, j, k]);

    // X^p D^{φi}_{pθ} and v^i_p D^{φj}_{pθ} as 3×3 matrices over (φ, θ).
    let xd = |i: usize| {
        Matrix3::from_fn(|phi, theta| (0..3).map(|p| x[p] * d[i][p][phi][theta]).sum())
    };
    let vd = |i: usize, j: usize| {
        Matrix3::from_fn(|phi, theta| (0..3).map(|p| v[i][p] * d[j][p][phi][theta]).sum())
    };

    let mut u = [0.0; 4];
    let mut du_dx = [Vector3::zeros(); 4];
    let mut du_dr = [Matrix3::zeros(); 4];

    u[0] = q0 / r;
    du_dx[0] = -q0 * x / r.powi(3);

    for i in 0..6 {
        let qi = q1(i);
        u[1] += -qi * w[i] / r.powi(3);
        du_dx[1] += 3.0 * qi * x * w[i] / r.powi(5) - qi * v[i] / r.powi(3);
        du_dr[1] += -qi * xd(i) / r.powi(3);
    }

    for i in 0..6 {
        for j in 0..6 {
            let qij = q2(i, j);
            u[2] += -qij * rm[i][j] / (2.0 * r.powi(3)) + 3.0 * qij * w[i] * w[j] / (2.0 * r.powi(5));
            du_dx[2] += 3.0 * qij * rm[i][j] * x / (2.0 * r.powi(5))
                - 15.0 * qij * x * w[i] * w[j] / (2.0 * r.powi(7))
                + 3.0 * qij * w[i] * v[j] / r.powi(5);
            du_dr[2] += -qij * vd(i, j) / r.powi(3) + 3.0 * qij * w[i] * xd(j) / r.powi(5);
        }
    }

    for i in 0..6 {
        for j in 0..6 {
            for k in 0..6 {
                let qijk = q3(i, j, k);
                u[3] += 3.0 * qijk * rm[i][j] * w[k] / (2.0 * r.powi(5))
                    - 5.0 * qijk * w[i] * w[j] * w[k] / (2.0 * r.powi(7));
                du_dx[3] += -15.0 * qijk * rm[i][j] * x * w[k] / (2.0 * r.powi(7))
                    + 3.0 * qijk * rm[i][j] * v[k] / (2.0 * r.powi(5))
                    + 35.0 * qijk * x * w[i] * w[j] * w[k] / (2.0 * r.powi(9))
                    - 15.0 * qijk * w[i] * w[j] * v[k] / (2.0 * r.powi(7));
                du_dr[3] += 3.0 * qijk / (2.0 * r.powi(5)) * (2.0 * vd(i, j) * w[k] + rm[i][j] * xd(k))
                    - 15.0 * qijk * w[i] * w[j] * xd(k) / (2.0 * r.powi(7));
            }
        }
    }

    ExplicitTerms { u, du_dx, du_dr }
}
