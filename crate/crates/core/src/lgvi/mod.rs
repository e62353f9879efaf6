//! Lie group variational integrator for the relative dynamics, with discrete
//! reconstruction of the inertial motion.

mod implicit;

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

pub use implicit::{
    matrix_residual, solve_implicit_rotation, ImplicitSolveError, ImplicitSolveReport,
    DEFAULT_NEWTON_MAX_ITERATIONS, DEFAULT_NEWTON_TOLERANCE,
};

use crate::dynamics::{InertialState, RelativeState, SystemModel};
use crate::mutual_potential::{GravityGradients, MutualPotential, PotentialError};

pub const DEFAULT_CONTACT_FACTOR: f64 = 1.05;

#[derive(Debug, Error)]
pub enum LgviError {
    #[error("body {body} rotation solve failed: {source}")]
    Implicit {
        body: usize,
        #[source]
        source: ImplicitSolveError,
    },
    #[error("separation {r} fell below the contact bound {bound}")]
    Contact { r: f64, bound: f64 },
    #[error(transparent)]
    Potential(#[from] PotentialError),
}

/// Rotation applied to the body-2-frame force when reconstructing the
/// inertial motion of body 2.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ReconstructionFactor {
    /// `R2_n`, which maps body-2-frame vectors to the inertial frame.
    #[default]
    BodyTwo,
    /// The relative attitude `R_n`.
    Relative,
}

#[derive(Clone, Copy, Debug)]
pub struct LgviOptions {
    pub newton_tolerance: f64,
    pub newton_max_iterations: usize,
    /// Abort when `r` drops below this multiple of the summed circumscribing radii.
    pub contact_factor: f64,
    pub reconstruction: ReconstructionFactor,
}

impl Default for LgviOptions {
    fn default() -> Self {
        LgviOptions {
            newton_tolerance: DEFAULT_NEWTON_TOLERANCE,
            newton_max_iterations: DEFAULT_NEWTON_MAX_ITERATIONS,
            contact_factor: DEFAULT_CONTACT_FACTOR,
            reconstruction: ReconstructionFactor::BodyTwo,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct LgviStepResult {
    pub next: RelativeState,
    pub f: Matrix3<f64>,
    pub f2: Matrix3<f64>,
    pub grads_next: GravityGradients,
    /// Reports of the body-1 and body-2 rotation solves.
    pub newton: [ImplicitSolveReport; 2],
}

/// One discrete step of size `h` (negative `h` steps backward). Performs
/// exactly one gradient evaluation.
pub fn lgvi_step(
    state: &RelativeState,
    grads: &GravityGradients,
    model: &SystemModel,
    potential: &MutualPotential,
    h: f64,
    opts: &LgviOptions,
) -> Result<LgviStepResult, LgviError> {
    let RelativeState { x, v, r, omega, omega2 } = *state;
    let (du, moment) = (grads.du_dx, grads.moment);
    let m = model.m;

    let jr = model.j_r(&r);
    let jdr = r * model.jd1 * r.transpose();
    let gamma = jr * omega;
    let g1 = gamma - moment * (0.5 * h);
    let (f, rep1) = solve_implicit_rotation(&g1, &jdr, h, opts.newton_tolerance, opts.newton_max_iterations)
        .map_err(|source| LgviError::Implicit { body: 1, source })?;

    let pi2 = model.j2 * omega2;
    let g2 = pi2 + (x.cross(&du) + moment) * (0.5 * h);
    let (f2, rep2) = solve_implicit_rotation(&g2, &model.jd2, h, opts.newton_tolerance, opts.newton_max_iterations)
        .map_err(|source| LgviError::Implicit { body: 2, source })?;
    let f2t = f2.transpose();

    let x_next = f2t * (x + v * h - du * (h * h / (2.0 * m)));
    let r_next = f2t * f * r;

    let bound = opts.contact_factor * potential.convergence_radius();
    let sep = x_next.norm();
    if !(sep >= bound) {
        return Err(LgviError::Contact { r: sep, bound });
    }
    let next_grads = potential.evaluate(&x_next, &r_next)?;
    let (du1, moment1) = (next_grads.du_dx, next_grads.moment);

    let v_next = f2t * (v - du * (h / (2.0 * m))) - du1 * (h / (2.0 * m));
    let gamma_next = f2t * g1 - moment1 * (0.5 * h);
    let omega_next = model.omega_from_momentum(&r_next, &gamma_next);
    let pi2_next = f2t * g2 + (x_next.cross(&du1) + moment1) * (0.5 * h);
    let omega2_next = model.j2_inv * pi2_next;

    Ok(LgviStepResult {
        next: RelativeState { x: x_next, v: v_next, r: r_next, omega: omega_next, omega2: omega2_next },
        f,
        f2,
        grads_next: next_grads,
        newton: [rep1, rep2],
    })
}

/// Advances the inertial state across one step given the relative states and
/// gradients at both ends.
#[allow(clippy::too_many_arguments)]
pub fn reconstruct_inertial_step(
    inertial: &InertialState,
    state: &RelativeState,
    next: &RelativeState,
    grads: &GravityGradients,
    grads_next: &GravityGradients,
    f2: &Matrix3<f64>,
    model: &SystemModel,
    h: f64,
    factor: ReconstructionFactor,
) -> InertialState {
    let r2 = inertial.r2;
    let r2_next = r2 * f2;
    let (rot, rot_next) = match factor {
        ReconstructionFactor::BodyTwo => (r2, r2_next),
        ReconstructionFactor::Relative => (state.r, next.r),
    };
    let force: Vector3<f64> = rot * grads.du_dx;
    let force_next: Vector3<f64> = rot_next * grads_next.du_dx;
    let m2 = model.m2;
    let x2 = inertial.x2 + inertial.v2 * h + force * (h * h / (2.0 * m2));
    let v2 = inertial.v2 + (force + force_next) * (h / (2.0 * m2));
    InertialState {
        x1: x2 + r2_next * next.x,
        x2,
        v1: v2 + r2_next * next.v,
        v2,
        r1: r2_next * next.r,
        r2: r2_next,
    }
}

/// Fixed-step propagator holding the relative and inertial state together
/// with the cached gradients at the current configuration.
#[derive(Clone, Debug)]
pub struct Lgvi {
    pub t: f64,
    pub h: f64,
    pub state: RelativeState,
    pub inertial: InertialState,
    pub grads: GravityGradients,
    pub opts: LgviOptions,
}

impl Lgvi {
    /// Evaluates the gradients at the initial configuration.
    pub fn new(
        t0: f64,
        h: f64,
        state: RelativeState,
        inertial: InertialState,
        potential: &MutualPotential,
        opts: LgviOptions,
    ) -> Result<Self, LgviError> {
        let grads = potential.evaluate(&state.x, &state.r)?;
        Ok(Lgvi { t: t0, h, state, inertial, grads, opts })
    }

    pub fn step(&mut self, model: &SystemModel, potential: &MutualPotential) -> Result<LgviStepResult, LgviError> {
        let res = lgvi_step(&self.state, &self.grads, model, potential, self.h, &self.opts)?;
        self.inertial = reconstruct_inertial_step(
            &self.inertial,
            &self.state,
            &res.next,
            &self.grads,
            &res.grads_next,
            &res.f2,
            model,
            self.h,
            self.opts.reconstruction,
        );
        self.state = res.next;
        self.grads = res.grads_next;
        self.t += self.h;
        Ok(res)
    }
}
