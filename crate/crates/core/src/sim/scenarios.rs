//! The four reference scenarios with the two octahedra.

use std::f64::consts::{E, PI};

use super::config::*;

/// Semi-axes of the smaller octahedron (body 1).
pub const OCTAHEDRON1: [f64; 3] = [1.0, 1.0 / E, 1.0 / PI];
/// Semi-axes of the larger octahedron (body 2).
pub const OCTAHEDRON2: [f64; 3] = [1.0, 1.5, 0.9];
pub const DENSITY: f64 = 2500.0;

fn bodies() -> (BodySource, BodySource) {
    let [a, b, c] = OCTAHEDRON1;
    let [d, e, f] = OCTAHEDRON2;
    (BodySource::octahedron(a, b, c, DENSITY), BodySource::octahedron(d, e, f, DENSITY))
}

fn base(initial: InitialConditions, h: f64, tf: f64) -> RunConfig {
    let (body1, body2) = bodies();
    RunConfig {
        g: DEFAULT_G,
        scale: None,
        body1,
        body2,
        initial,
        integrator: IntegratorConfig {
            kind: IntegratorKind::Lgvi,
            h: Some(h),
            tolerance: None,
            h_initial: None,
            h_min: None,
            h_max: None,
            t0: 0.0,
            tf,
            order: 4,
            deterministic: true,
            rkf_diagnostics: true,
            contact_factor: crate::lgvi::DEFAULT_CONTACT_FACTOR,
            newton_tolerance: crate::lgvi::DEFAULT_NEWTON_TOLERANCE,
            newton_max_iterations: crate::lgvi::DEFAULT_NEWTON_MAX_ITERATIONS,
            reconstruction: ReconstructionChoice::Body2,
        },
        output: OutputConfig::default(),
    }
}

fn initial(att1: [f64; 3], att2: [f64; 3], spin1: [f64; 3], spin2: [f64; 3]) -> InitialConditions {
    InitialConditions {
        attitude1: att1,
        attitude2: att2,
        euler_transpose: true,
        spin1,
        spin2,
        elements: None,
        orbit_frame: OrbitFrame::Inertial,
        x: None,
        v: None,
    }
}

/// Medium-eccentricity mutual orbit.
pub fn scenario1() -> RunConfig {
    let mut init = initial([100.0, 9.8, 175.0], [160.0, -5.0, 165.0], [0.0, 0.0, 5.0e-5], [0.0, 0.0, 9.2e-5]);
    init.elements = Some(ElementsConfig { a: 4.0, e: 0.3, i: 5.0, raan: 15.0, argp: 60.0, nu: 10.0 });
    base(init, 1.0, 70_000.0)
}

/// Aligned bodies with fast antiparallel spins and a fast flyby.
pub fn scenario2() -> RunConfig {
    let mut init = initial([180.0, 0.0, 30.0], [270.0, 0.0, 30.0], [0.0, 0.0, 0.566], [0.0, 0.0, -0.566]);
    init.x = Some([0.0, 6.0, 0.0]);
    init.v = Some([-0.006, 0.0, 0.0]);
    base(init, 1.0, 40_000.0)
}

/// Highly eccentric orbit disrupted at periapsis.
pub fn scenario3() -> RunConfig {
    let mut init = initial([-22.6, 5.0, 180.0], [50.3, 5.0, -180.0], [0.0, 0.0, 1.63e-4], [0.0, 0.0, 1.55e-4]);
    init.elements = Some(ElementsConfig { a: 52.9, e: 0.942, i: 5.0, raan: 0.0, argp: 88.2, nu: -107.1 });
    base(init, 1.0, 60_000.0)
}

/// Long run with tumbling bodies. The initial separation is inside the sum
/// of the bounding radii, so the contact guard is disabled.
pub fn scenario4() -> RunConfig {
    let mut init = initial([-75.0, 30.0, 180.0], [-75.0, 30.0, 180.0], [0.007, 0.007, 0.05], [-0.003, 0.002, 0.004]);
    init.x = Some([-0.5, 1.8, 1.1]);
    init.v = Some([-0.3, -0.1, 0.0]);
    let mut cfg = base(init, 1.0, 5.0e6);
    cfg.integrator.contact_factor = 0.0;
    cfg
}

pub fn scenario(n: usize) -> Option<RunConfig> {
    match n {
        1 => Some(scenario1()),
        2 => Some(scenario2()),
        3 => Some(scenario3()),
        4 => Some(scenario4()),
        _ => None,
    }
}
