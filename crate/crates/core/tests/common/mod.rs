#![allow(dead_code)]

use std::collections::HashMap;
use std::f64::consts::{E, PI};

use f2bp::body_model::{build_body, octahedron, PolyhedralBody, RawBodyModel};
use f2bp::dynamics::{elements_to_relative_state, OrbitalElements};
use f2bp::so3;
use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const G: f64 = 6.674e-11;

/// The larger octahedron (body 2).
pub fn body2() -> PolyhedralBody {
    build_body(&octahedron(1.0, 1.5, 0.9, 2500.0)).unwrap()
}

/// The smaller, more elongated octahedron (body 1).
pub fn body1() -> PolyhedralBody {
    build_body(&octahedron(1.0, 1.0 / E, 1.0 / PI, 2500.0)).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn unit_vector(rng: &mut impl Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

pub fn random_rotation(rng: &mut impl Rng) -> Matrix3<f64> {
    let axis = unit_vector(rng);
    so3::exp(&(axis * rng.gen_range(0.0..PI)))
}

/// Random relative configuration with separation in `[r_min, r_max]`.
pub fn random_configuration(rng: &mut impl Rng, r_min: f64, r_max: f64) -> (Vector3<f64>, Matrix3<f64>) {
    let x = unit_vector(rng) * rng.gen_range(r_min..r_max);
    (x, random_rotation(rng))
}

/// Octahedron whose first face is pushed in towards the centre, making the
/// surface non-convex with some negative-volume simplices.
pub fn dimpled_octahedron(a: f64, b: f64, c: f64, eps: f64, rho: f64) -> RawBodyModel {
    let mut raw = octahedron(a, b, c, rho);
    raw.vertices.push(Vector3::new(-eps * a, -eps * b, -eps * c));
    let p = raw.vertices.len() - 1;
    let [i, j, k] = raw.faces[0];
    raw.faces[0] = [i, j, p];
    raw.faces.push([j, k, p]);
    raw.faces.push([k, i, p]);
    raw.densities.push(rho);
    raw.densities.push(rho);
    raw
}

/// Unit octahedron subdivided `levels` times with vertices projected onto a
/// sphere of radius `radius`.
pub fn sphere_mesh(levels: usize, radius: f64, rho: f64) -> RawBodyModel {
    let base = octahedron(1.0, 1.0, 1.0, rho);
    let mut verts: Vec<Vector3<f64>> = base.vertices.clone();
    let mut faces = base.faces.clone();
    for _ in 0..levels {
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |i: usize, j: usize, verts: &mut Vec<Vector3<f64>>| {
            let key = (i.min(j), i.max(j));
            *midpoint.entry(key).or_insert_with(|| {
                verts.push(((verts[i] + verts[j]) * 0.5).normalize());
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = mid(a, b, &mut verts);
            let bc = mid(b, c, &mut verts);
            let ca = mid(c, a, &mut verts);
            next.extend([[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
        }
        faces = next;
    }
    let n = faces.len();
    RawBodyModel {
        vertices: verts.iter().map(|v| v * radius).collect(),
        faces,
        densities: vec![rho; n],
    }
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Analytic two-body propagation of elliptic elements by `dt`.
pub fn kepler_propagate(el: &OrbitalElements, mu: f64, dt: f64) -> (Vector3<f64>, Vector3<f64>) {
    let e = el.e;
    let n = (mu / el.a.powi(3)).sqrt();
    let ecc0 = 2.0 * ((1.0 - e).sqrt() * (el.nu / 2.0).tan()).atan2((1.0 + e).sqrt());
    let m = ecc0 - e * ecc0.sin() + n * dt;
    let mut ecc = m;
    for _ in 0..50 {
        let step = (ecc - e * ecc.sin() - m) / (1.0 - e * ecc.cos());
        ecc -= step;
        if step.abs() < 1e-16 {
            break;
        }
    }
    let nu = 2.0 * ((1.0 + e).sqrt() * (ecc / 2.0).sin()).atan2((1.0 - e).sqrt() * (ecc / 2.0).cos());
    elements_to_relative_state(&OrbitalElements { nu, ..*el }, mu).unwrap()
}

pub fn orbital_period(a: f64, mu: f64) -> f64 {
    2.0 * PI * (a.powi(3) / mu).sqrt()
}
