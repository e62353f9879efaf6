//! Polyhedral body models.
//!
//! A body is a closed triangulated surface. Each face together with the body
//! centroid forms a simplex (tetrahedron) with its own constant density. All
//! mass properties are sums of signed simplex contributions, so bodies need
//! not be star-shaped about the centroid.

mod parse;

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

pub use parse::parse_body_model;

#[derive(Debug, Error)]
pub enum BodyError {
    #[error("{file} file, line {line}: {msg}")]
    Parse {
        file: &'static str,
        line: usize,
        msg: String,
    },
    #[error("topology error: {0}")]
    Topology(String),
    #[error("body has non-positive total volume {0}")]
    NonPositiveVolume(f64),
    #[error("body has non-positive total mass {0}")]
    NonPositiveMass(f64),
    #[error("inertia matrix is singular or indefinite (eigenvalues {0:?})")]
    SingularInertia([f64; 3]),
    #[error("scale factors must be strictly positive, got {0:?}")]
    InvalidScale([f64; 3]),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// Vertex and face lists as read from a body-model file pair.
#[derive(Clone, Debug, PartialEq)]
pub struct RawBodyModel {
    pub vertices: Vec<Vector3<f64>>,
    /// Zero-based vertex indices, counterclockwise viewed from outside.
    pub faces: Vec<[usize; 3]>,
    /// Density of the simplex formed by each face and the centroid (kg/m³).
    pub densities: Vec<f64>,
}

impl RawBodyModel {
    /// Read a vertex file and a face file from disk.
    pub fn from_files(
        vertex_path: &std::path::Path,
        face_path: &std::path::Path,
        default_density: f64,
    ) -> Result<Self, BodyError> {
        let read = |p: &std::path::Path| {
            std::fs::read_to_string(p).map_err(|source| BodyError::Io {
                path: p.display().to_string(),
                source,
            })
        };
        parse_body_model(&read(vertex_path)?, &read(face_path)?, default_density)
    }
}

/// Octahedron with vertices at `(±a, 0, 0)`, `(0, ±b, 0)`, `(0, 0, ±c)`.
pub fn octahedron(a: f64, b: f64, c: f64, density: f64) -> RawBodyModel {
    let vertices = vec![
        Vector3::new(a, 0.0, 0.0),
        Vector3::new(-a, 0.0, 0.0),
        Vector3::new(0.0, b, 0.0),
        Vector3::new(0.0, -b, 0.0),
        Vector3::new(0.0, 0.0, c),
        Vector3::new(0.0, 0.0, -c),
    ];
    let faces = vec![
        [0, 2, 4],
        [2, 1, 4],
        [1, 3, 4],
        [3, 0, 4],
        [2, 0, 5],
        [1, 2, 5],
        [3, 1, 5],
        [0, 3, 5],
    ];
    RawBodyModel {
        vertices,
        faces,
        densities: vec![density; 8],
    }
}

/// A body in its own centered, principal-axis frame with all mass properties.
#[derive(Clone, Debug)]
pub struct PolyhedralBody {
    /// Vertices in the body frame (origin at the centroid, principal axes).
    pub vertices: Vec<Vector3<f64>>,
    pub faces: Vec<[usize; 3]>,
    pub simplex_density: Vec<f64>,
    /// Per simplex, the matrix whose columns are the three face vertices.
    pub simplex_vertices: Vec<Matrix3<f64>>,
    /// Signed Jacobian determinant of each simplex (six times its volume).
    pub jacobians: Vec<f64>,
    pub mass: f64,
    /// Standard inertia matrix about the centroid.
    pub inertia: Matrix3<f64>,
    /// Nonstandard inertia matrix `∫ρ r rᵀ dV`.
    pub nonstandard_inertia: Matrix3<f64>,
    pub volume: f64,
    pub surface_area: f64,
    pub equiv_radius: f64,
    /// Largest vertex distance from the centroid.
    pub circumscribing_radius: f64,
    /// Rotation that took the input frame to the principal frame
    /// (`body = rotationᵀ * (input - centroid)`).
    pub principal_rotation: Matrix3<f64>,
    /// Input-frame centroid that was removed.
    pub centroid_offset: Vector3<f64>,
}

/// Nondimensionalization divisors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaleFactors {
    pub length: f64,
    pub mass: f64,
    pub time: f64,
}

impl ScaleFactors {
    pub const UNIT: ScaleFactors = ScaleFactors {
        length: 1.0,
        mass: 1.0,
        time: 1.0,
    };

    pub fn new(length: f64, mass: f64, time: f64) -> Result<Self, BodyError> {
        let s = ScaleFactors { length, mass, time };
        s.check()?;
        Ok(s)
    }

    fn check(&self) -> Result<(), BodyError> {
        let all = [self.length, self.mass, self.time];
        if all.iter().all(|v| v.is_finite() && *v > 0.0) {
            Ok(())
        } else {
            Err(BodyError::InvalidScale(all))
        }
    }

    /// Gravitational constant expressed in the scaled units.
    pub fn scale_gravitational_constant(&self, g: f64) -> f64 {
        g * self.mass * self.time * self.time / self.length.powi(3)
    }

    /// Factors that undo this scaling.
    pub fn inverse(&self) -> ScaleFactors {
        ScaleFactors {
            length: 1.0 / self.length,
            mass: 1.0 / self.mass,
            time: 1.0 / self.time,
        }
    }
}

/// Standard-inertia contribution of the tetrahedron `{0, v1, v2, v3}` with
/// uniform density `rho`, where `verts` holds `v1, v2, v3` as columns.
///
/// The contribution carries the sign of `det(verts)`.
pub fn simplex_inertia(verts: &Matrix3<f64>, rho: f64) -> Matrix3<f64> {
    let jd = simplex_second_moment(verts, rho);
    Matrix3::identity() * jd.trace() - jd
}

/// `ρ ∫ r rᵀ dV` over the tetrahedron `{0, v1, v2, v3}` (signed).
fn simplex_second_moment(verts: &Matrix3<f64>, rho: f64) -> Matrix3<f64> {
    let t = verts.determinant();
    let s = verts.column(0) + verts.column(1) + verts.column(2);
    let mut m = s * s.transpose();
    for c in 0..3 {
        m += verts.column(c) * verts.column(c).transpose();
    }
    m * (rho * t / 120.0)
}

fn simplex_matrices(vertices: &[Vector3<f64>], faces: &[[usize; 3]]) -> Vec<Matrix3<f64>> {
    faces
        .iter()
        .map(|f| Matrix3::from_columns(&[vertices[f[0]], vertices[f[1]], vertices[f[2]]]))
        .collect()
}

/// Center, rotate to principal axes, and compute mass properties.
pub fn build_body(raw: &RawBodyModel) -> Result<PolyhedralBody, BodyError> {
    raw.validate()?;
    let simplices = simplex_matrices(&raw.vertices, &raw.faces);

    let volume: f64 = simplices.iter().map(|s| s.determinant()).sum::<f64>() / 6.0;
    if volume.is_nan() || volume <= 0.0 {
        return Err(BodyError::NonPositiveVolume(volume));
    }

    // The simplex apex is the centroid itself, so with non-uniform densities
    // the centroid is a fixed point. Each pass moves the apex to the current
    // mass-weighted centroid; for uniform density one pass is exact.
    let scale = raw.vertices.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut centered = raw.vertices.clone();
    let mut centroid = Vector3::zeros();
    for _ in 0..200 {
        let (mass, shift) = simplex_centroid(&simplex_matrices(&centered, &raw.faces), &raw.densities);
        if mass.is_nan() || mass <= 0.0 {
            return Err(BodyError::NonPositiveMass(mass));
        }
        centroid += shift;
        centered = raw.vertices.iter().map(|v| v - centroid).collect();
        if shift.norm() <= 1e-15 * scale {
            break;
        }
    }
    let jd = total_second_moment(&simplex_matrices(&centered, &raw.faces), &raw.densities);
    let j = Matrix3::identity() * jd.trace() - jd;
    let rotation = principal_frame(&j)?;

    let vertices: Vec<Vector3<f64>> = centered.iter().map(|v| rotation.transpose() * v).collect();
    let mut body = assemble(vertices, raw.faces.clone(), raw.densities.clone())?;
    body.principal_rotation = rotation;
    body.centroid_offset = centroid;
    Ok(body)
}

/// Total mass and mass-weighted centroid of simplices anchored at the origin.
fn simplex_centroid(simplices: &[Matrix3<f64>], densities: &[f64]) -> (f64, Vector3<f64>) {
    let mut mass = 0.0;
    let mut first_moment = Vector3::zeros();
    for (s, &rho) in simplices.iter().zip(densities) {
        let dm = rho * s.determinant() / 6.0;
        mass += dm;
        first_moment += (s.column(0) + s.column(1) + s.column(2)) * (dm / 4.0);
    }
    (mass, first_moment / mass)
}

fn total_second_moment(simplices: &[Matrix3<f64>], densities: &[f64]) -> Matrix3<f64> {
    simplices
        .iter()
        .zip(densities)
        .fold(Matrix3::zeros(), |acc, (s, &rho)| acc + simplex_second_moment(s, rho))
}

/// Mass properties of a body whose vertices are already in the body frame.
fn assemble(
    vertices: Vec<Vector3<f64>>,
    faces: Vec<[usize; 3]>,
    simplex_density: Vec<f64>,
) -> Result<PolyhedralBody, BodyError> {
    let simplex_vertices = simplex_matrices(&vertices, &faces);
    let jacobians: Vec<f64> = simplex_vertices.iter().map(|s| s.determinant()).collect();
    let volume = jacobians.iter().sum::<f64>() / 6.0;
    let mass = jacobians
        .iter()
        .zip(&simplex_density)
        .map(|(t, rho)| rho * t)
        .sum::<f64>()
        / 6.0;
    let nonstandard_inertia = total_second_moment(&simplex_vertices, &simplex_density);
    let inertia = Matrix3::identity() * nonstandard_inertia.trace() - nonstandard_inertia;

    let eig = jacobi_eigen(&inertia).0;
    let scale = eig.amax();
    if eig.iter().any(|&l| !(l > 1e-12 * scale)) {
        return Err(BodyError::SingularInertia([eig[0], eig[1], eig[2]]));
    }

    let surface_area = faces
        .iter()
        .map(|f| {
            0.5 * (vertices[f[1]] - vertices[f[0]])
                .cross(&(vertices[f[2]] - vertices[f[0]]))
                .norm()
        })
        .sum();
    let circumscribing_radius = vertices.iter().map(|v| v.norm()).fold(0.0, f64::max);

    Ok(PolyhedralBody {
        vertices,
        faces,
        simplex_density,
        simplex_vertices,
        jacobians,
        mass,
        inertia,
        nonstandard_inertia,
        volume,
        surface_area,
        equiv_radius: (3.0 * volume / (4.0 * PI)).cbrt(),
        circumscribing_radius,
        principal_rotation: Matrix3::identity(),
        centroid_offset: Vector3::zeros(),
    })
}

/// Proper rotation whose columns are principal axes of `j`, choosing the axis
/// order and signs that keep it closest to the identity.
fn principal_frame(j: &Matrix3<f64>) -> Result<Matrix3<f64>, BodyError> {
    let (l, vectors) = jacobi_eigen(j);
    let scale = l.amax();
    if l.iter().any(|&v| !(v > 1e-12 * scale)) {
        return Err(BodyError::SingularInertia([l[0], l[1], l[2]]));
    }
    // Already diagonal to round-off: keep the input axes.
    let off = j[(0, 1)].abs() + j[(0, 2)].abs() + j[(1, 2)].abs();
    if off <= 1e-14 * j.trace() {
        return Ok(Matrix3::identity());
    }
    const PERMS: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let mut best: Option<(f64, Matrix3<f64>)> = None;
    for perm in PERMS {
        for signs in 0..8u8 {
            let mut p = Matrix3::zeros();
            for (col, &k) in perm.iter().enumerate() {
                let sign = if signs & (1 << col) != 0 { -1.0 } else { 1.0 };
                p.set_column(col, &(vectors.column(k) * sign));
            }
            if p.determinant() <= 0.0 {
                continue;
            }
            let score = p.trace();
            if best.as_ref().is_none_or(|(s, _)| score > *s) {
                best = Some((score, p));
            }
        }
    }
    Ok(best.expect("some signed permutation is proper").1)
}

/// Eigen-decomposition of a symmetric 3×3 matrix by cyclic Jacobi rotations.
/// Accurate to round-off for nearly diagonal input.
fn jacobi_eigen(m: &Matrix3<f64>) -> (Vector3<f64>, Matrix3<f64>) {
    let mut a = *m;
    let mut v = Matrix3::identity();
    for _ in 0..50 {
        let off = a[(0, 1)].powi(2) + a[(0, 2)].powi(2) + a[(1, 2)].powi(2);
        if off <= f64::EPSILON.powi(2) * 1e-4 * a.norm_squared() {
            break;
        }
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            let apq = a[(p, q)];
            if apq == 0.0 {
                continue;
            }
            let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            let mut rot = Matrix3::identity();
            rot[(p, p)] = c;
            rot[(q, q)] = c;
            rot[(p, q)] = s;
            rot[(q, p)] = -s;
            a = rot.transpose() * a * rot;
            a[(p, q)] = 0.0;
            a[(q, p)] = 0.0;
            v *= rot;
        }
    }
    (a.diagonal(), v)
}

/// Scale lengths by `1/s.length` and masses by `1/s.mass`. Returns the scaled
/// body and `g` in the scaled units.
pub fn nondimensionalize(
    body: &PolyhedralBody,
    s: &ScaleFactors,
    g: f64,
) -> Result<(PolyhedralBody, f64), BodyError> {
    s.check()?;
    let l = s.length;
    let l3 = l * l * l;
    let inertia_scale = 1.0 / (s.mass * l * l);
    let mut out = body.clone();
    for v in &mut out.vertices {
        *v /= l;
    }
    for m in &mut out.simplex_vertices {
        *m /= l;
    }
    for t in &mut out.jacobians {
        *t /= l3;
    }
    for rho in &mut out.simplex_density {
        *rho *= l3 / s.mass;
    }
    out.mass /= s.mass;
    out.inertia *= inertia_scale;
    out.nonstandard_inertia *= inertia_scale;
    out.volume /= l3;
    out.surface_area /= l * l;
    out.equiv_radius /= l;
    out.circumscribing_radius /= l;
    out.centroid_offset /= l;
    Ok((out, s.scale_gravitational_constant(g)))
}

impl PolyhedralBody {
    /// The raw model of this body in its own frame.
    pub fn to_raw(&self) -> RawBodyModel {
        RawBodyModel {
            vertices: self.vertices.clone(),
            faces: self.faces.clone(),
            densities: self.simplex_density.clone(),
        }
    }

    /// Mass-weighted centroid of the simplices (zero for a built body).
    pub fn assembled_centroid(&self) -> Vector3<f64> {
        simplex_centroid(&self.simplex_vertices, &self.simplex_density).1
    }

    pub fn num_simplices(&self) -> usize {
        self.faces.len()
    }
}
