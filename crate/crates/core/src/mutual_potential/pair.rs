use nalgebra::{Matrix3, Vector3};

use super::PotentialError;

/// Configuration-dependent quantities for one simplex pair.
#[derive(Clone, Debug)]
pub struct PairGeometry {
    /// Columns `R a1, R a2, R a3, -b1, -b2, -b3` in the body-2 frame.
    pub v: [Vector3<f64>; 6],
    /// `w^i = v^i · X`.
    pub w: [f64; 6],
    /// Gram matrix `rmat^{ij} = v^i · v^j`.
    pub rmat: [[f64; 6]; 6],
    pub r: f64,
}

/// Build [`PairGeometry`] for simplex vertex matrices `a_verts` (body 1, body-1
/// frame) and `b_verts` (body 2, body-2 frame), with columns as vertices.
///
/// A point of the pair separates as `X + R q_a - q_b` with `q = Σ σ_i v_i`.
pub fn assemble_pair_geometry(
    x: &Vector3<f64>,
    r: &Matrix3<f64>,
    a_verts: &Matrix3<f64>,
    b_verts: &Matrix3<f64>,
) -> Result<PairGeometry, PotentialError> {
    let dist = x.norm();
    if !(dist > 0.0) || !dist.is_finite() {
        return Err(PotentialError::SingularConfiguration(dist));
    }
    let ra = r * a_verts;
    let v = [
        ra.column(0).into_owned(),
        ra.column(1).into_owned(),
        ra.column(2).into_owned(),
        -b_verts.column(0),
        -b_verts.column(1),
        -b_verts.column(2),
    ];
    let w = v.map(|c| c.dot(x));
    let mut rmat = [[0.0; 6]; 6];
    for i in 0..6 {
        for j in 0..6 {
            rmat[i][j] = v[i].dot(&v[j]);
        }
    }
    Ok(PairGeometry { v, w, rmat, r: dist })
}

impl PairGeometry {
    /// `‖X + v σ‖²` expanded as `r² + 2 w·σ + σᵀ rmat σ`.
    pub fn expanded_distance_squared(&self, sigma: &[f64; 6]) -> f64 {
        let mut s1 = 0.0;
        let mut s2 = 0.0;
        for i in 0..6 {
            s1 += self.w[i] * sigma[i];
            for j in 0..6 {
                s2 += sigma[i] * self.rmat[i][j] * sigma[j];
            }
        }
        self.r * self.r + 2.0 * s1 + s2
    }
}
