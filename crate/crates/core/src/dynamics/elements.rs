use nalgebra::Vector3;
use thiserror::Error;

use crate::so3::{rot_x, rot_z};

#[derive(Debug, Error, PartialEq)]
pub enum ElementsError {
    #[error("parabolic orbits cannot be specified by semi-major axis")]
    Parabolic,
    #[error("invalid elements: {0}")]
    Invalid(&'static str),
    #[error("rectilinear or degenerate state has no osculating orbit plane")]
    Degenerate,
}

/// Keplerian elements. Angles in radians; `a < 0` for hyperbolic orbits.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrbitalElements {
    pub a: f64,
    pub e: f64,
    pub i: f64,
    pub raan: f64,
    pub argp: f64,
    pub nu: f64,
}

/// Position and velocity from Keplerian elements (angles in radians).
pub fn elements_to_relative_state(
    el: &OrbitalElements,
    mu: f64,
) -> Result<(Vector3<f64>, Vector3<f64>), ElementsError> {
    let OrbitalElements { a, e, i, raan, argp, nu } = *el;
    if !(mu > 0.0) {
        return Err(ElementsError::Invalid("gravitational parameter must be positive"));
    }
    if !(e >= 0.0) {
        return Err(ElementsError::Invalid("eccentricity must be non-negative"));
    }
    if e == 1.0 {
        return Err(ElementsError::Parabolic);
    }
    if (e < 1.0 && !(a > 0.0)) || (e > 1.0 && !(a < 0.0)) {
        return Err(ElementsError::Invalid("semi-major axis sign inconsistent with eccentricity"));
    }
    let p = a * (1.0 - e * e);
    let denom = 1.0 + e * nu.cos();
    if denom <= 0.0 {
        return Err(ElementsError::Invalid("true anomaly beyond hyperbolic asymptote"));
    }
    let r = p / denom;
    let pos = Vector3::new(r * nu.cos(), r * nu.sin(), 0.0);
    let k = (mu / p).sqrt();
    let vel = Vector3::new(-k * nu.sin(), k * (e + nu.cos()), 0.0);
    let q = rot_z(raan) * rot_x(i) * rot_z(argp);
    Ok((q * pos, q * vel))
}

/// Osculating Keplerian elements of a relative state. For equatorial orbits
/// the node is set to zero; for circular orbits the argument of periapsis is
/// zero and `nu` is measured from the node line.
pub fn osculating_elements(
    x: &Vector3<f64>,
    v: &Vector3<f64>,
    mu: f64,
) -> Result<OrbitalElements, ElementsError> {
    let r = x.norm();
    let hvec = x.cross(v);
    let h = hvec.norm();
    if r == 0.0 || h <= 1e-14 * r * v.norm() {
        return Err(ElementsError::Degenerate);
    }
    let energy = 0.5 * v.norm_squared() - mu / r;
    let evec = v.cross(&hvec) / mu - x / r;
    let e = evec.norm();
    let a = -mu / (2.0 * energy);
    let i = (hvec.z / h).clamp(-1.0, 1.0).acos();

    let node = Vector3::new(-hvec.y, hvec.x, 0.0);
    let n = node.norm();
    let equatorial = n <= 1e-12 * h;
    let circular = e <= 1e-12;

    let raan = if equatorial { 0.0 } else { node.y.atan2(node.x).rem_euclid(std::f64::consts::TAU) };
    // In-plane reference direction for angles: node line, or x axis if equatorial.
    let line = if equatorial { Vector3::x() } else { node / n };
    let normal = hvec / h;
    let angle_from_line = |u: &Vector3<f64>| {
        let s = normal.dot(&line.cross(u));
        let c = line.dot(u);
        s.atan2(c)
    };
    let (argp, nu) = if circular {
        (0.0, angle_from_line(x))
    } else {
        let argp = angle_from_line(&evec);
        let s = normal.dot(&evec.cross(x)) / e;
        let c = evec.dot(x) / e;
        (argp.rem_euclid(std::f64::consts::TAU), s.atan2(c))
    };
    Ok(OrbitalElements { a, e, i, raan, argp, nu })
}
