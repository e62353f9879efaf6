//! Adaptive Runge-Kutta-Fehlberg 7(8) integration of the continuous
//! equations, including the raw nine entries of each attitude matrix.

pub mod tableau;

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

use crate::dynamics::{eom_rhs, InertialState, RelativeState, SystemModel};
use crate::lgvi::DEFAULT_CONTACT_FACTOR;
use crate::mutual_potential::{GravityGradients, MutualPotential, PotentialError};
use crate::so3::hat;
use tableau::{A, B8, C, ERROR_WEIGHT, STAGES};

pub const PACKED_LEN: usize = 36;

#[derive(Debug, Error)]
pub enum Rkf78Error {
    #[error("step size {h:e} below minimum at t = {t}")]
    StepUnderflow { t: f64, h: f64 },
    #[error("separation {r} fell below the contact bound {bound}")]
    Contact { r: f64, bound: f64 },
    #[error(transparent)]
    Potential(#[from] PotentialError),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepControl {
    pub tolerance: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub safety: f64,
}

impl StepControl {
    pub fn new(tolerance: f64) -> Self {
        StepControl { tolerance, h_min: 1e-12, h_max: f64::INFINITY, safety: 0.9 }
    }

    /// `h · min(5, max(0.1, safety (ε/err)^{1/8}))`, clamped to `[h_min, h_max]`.
    pub fn next_step(&self, h: f64, err: f64) -> f64 {
        let factor = if err == 0.0 {
            5.0
        } else {
            (self.safety * (self.tolerance / err).powf(1.0 / 8.0)).clamp(0.1, 5.0)
        };
        (h * factor).clamp(self.h_min, self.h_max)
    }
}

/// Outcome of one attempted step.
#[derive(Clone, Debug)]
pub struct StepOutcome {
    pub y_next: Vec<f64>,
    /// Scaled error estimate `max_i |Δ_i| / max(1, |y_i|)`.
    pub error: f64,
    pub h_next: f64,
    pub accepted: bool,
}

/// Attempts one step of size `h` on `ẏ = f(t, y)`. The right-hand side is
/// called exactly 13 times.
pub fn rkf78_step<F, E>(f: &mut F, t: f64, y: &[f64], h: f64, ctrl: &StepControl) -> Result<StepOutcome, E>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<(), E>,
{
    let n = y.len();
    let mut k = vec![vec![0.0; n]; STAGES];
    let mut stage = vec![0.0; n];
    for i in 0..STAGES {
        stage.copy_from_slice(y);
        for (j, kj) in k.iter().enumerate().take(i) {
            let a = A[i][j];
            if a != 0.0 {
                for (s, d) in stage.iter_mut().zip(kj) {
                    *s += h * a * d;
                }
            }
        }
        f(t + C[i] * h, &stage, &mut k[i])?;
    }
    let mut y_next = y.to_vec();
    let mut error: f64 = 0.0;
    for idx in 0..n {
        let mut incr = 0.0;
        for (i, ki) in k.iter().enumerate() {
            if B8[i] != 0.0 {
                incr += B8[i] * ki[idx];
            }
        }
        y_next[idx] += h * incr;
        let delta = h * ERROR_WEIGHT * (k[0][idx] + k[10][idx] - k[11][idx] - k[12][idx]);
        error = error.max(delta.abs() / y[idx].abs().max(1.0));
    }
    let accepted = error <= ctrl.tolerance;
    let h_next = ctrl.next_step(h.abs(), error).copysign(h);
    Ok(StepOutcome { y_next, error, h_next, accepted })
}

/// Flat state: `X, V, R (row-major), Γ = J_R Ω, Ω2, x2, v2, R2 (row-major)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PackedState(pub [f64; PACKED_LEN]);

fn put_vec(out: &mut [f64], v: &Vector3<f64>) {
    out.copy_from_slice(v.as_slice());
}

fn put_mat(out: &mut [f64], m: &Matrix3<f64>) {
    for r in 0..3 {
        for c in 0..3 {
            out[3 * r + c] = m[(r, c)];
        }
    }
}

fn get_vec(s: &[f64]) -> Vector3<f64> {
    Vector3::new(s[0], s[1], s[2])
}

fn get_mat(s: &[f64]) -> Matrix3<f64> {
    Matrix3::from_row_slice(&s[..9])
}

/// Unpacked view of a [`PackedState`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PackedParts {
    pub x: Vector3<f64>,
    pub v: Vector3<f64>,
    pub r: Matrix3<f64>,
    pub gamma: Vector3<f64>,
    pub omega2: Vector3<f64>,
    pub x2: Vector3<f64>,
    pub v2: Vector3<f64>,
    pub r2: Matrix3<f64>,
}

impl PackedState {
    pub fn from_parts(p: &PackedParts) -> Self {
        let mut s = [0.0; PACKED_LEN];
        put_vec(&mut s[0..3], &p.x);
        put_vec(&mut s[3..6], &p.v);
        put_mat(&mut s[6..15], &p.r);
        put_vec(&mut s[15..18], &p.gamma);
        put_vec(&mut s[18..21], &p.omega2);
        put_vec(&mut s[21..24], &p.x2);
        put_vec(&mut s[24..27], &p.v2);
        put_mat(&mut s[27..36], &p.r2);
        PackedState(s)
    }

    pub fn parts(&self) -> PackedParts {
        let s = &self.0;
        PackedParts {
            x: get_vec(&s[0..3]),
            v: get_vec(&s[3..6]),
            r: get_mat(&s[6..15]),
            gamma: get_vec(&s[15..18]),
            omega2: get_vec(&s[18..21]),
            x2: get_vec(&s[21..24]),
            v2: get_vec(&s[24..27]),
            r2: get_mat(&s[27..36]),
        }
    }

    pub fn pack(rel: &RelativeState, inertial: &InertialState, model: &SystemModel) -> Self {
        PackedState::from_parts(&PackedParts {
            x: rel.x,
            v: rel.v,
            r: rel.r,
            gamma: model.j_r(&rel.r) * rel.omega,
            omega2: rel.omega2,
            x2: inertial.x2,
            v2: inertial.v2,
            r2: inertial.r2,
        })
    }

    /// Relative and inertial states, with `Ω = (R J1 Rᵀ)⁻¹ Γ`.
    pub fn unpack(&self, model: &SystemModel) -> (RelativeState, InertialState) {
        let p = self.parts();
        let rel = RelativeState {
            x: p.x,
            v: p.v,
            r: p.r,
            omega: model.omega_from_momentum(&p.r, &p.gamma),
            omega2: p.omega2,
        };
        let inertial = InertialState {
            x1: p.x2 + p.r2 * p.x,
            x2: p.x2,
            v1: p.v2 + p.r2 * p.v,
            v2: p.v2,
            r1: p.r2 * p.r,
            r2: p.r2,
        };
        (rel, inertial)
    }
}

/// Derivative of the packed state; one gradient evaluation.
pub fn rhs(
    y: &PackedState,
    model: &SystemModel,
    potential: &MutualPotential,
) -> Result<(PackedState, GravityGradients), PotentialError> {
    let (rel, _) = y.unpack(model);
    let p = y.parts();
    let grads = potential.evaluate(&rel.x, &rel.r)?;
    let rates = eom_rhs(&rel, &grads, model);
    let d = PackedParts {
        x: rates.x_dot,
        v: rates.v_dot,
        r: rates.r_dot,
        gamma: rates.gamma_dot,
        omega2: rates.omega2_dot,
        x2: p.v2,
        v2: p.r2 * grads.du_dx / model.m2,
        r2: p.r2 * hat(&p.omega2),
    };
    Ok((PackedState::from_parts(&d), grads))
}

/// Result of one accepted step of [`Rkf78`].
#[derive(Clone, Copy, Debug)]
pub struct AcceptedStep {
    pub h: f64,
    pub rejected: usize,
    /// Gradients at the new state when diagnostics are enabled.
    pub grads: Option<GravityGradients>,
}

/// Adaptive propagator over the packed state.
#[derive(Clone, Debug)]
pub struct Rkf78 {
    pub t: f64,
    pub y: PackedState,
    pub h: f64,
    pub ctrl: StepControl,
    /// Re-evaluate the gradients after every accepted step for diagnostics.
    pub diagnostics: bool,
    pub contact_factor: f64,
    pub accepted: usize,
    pub rejected: usize,
}

impl Rkf78 {
    pub fn new(t0: f64, y: PackedState, h0: f64, ctrl: StepControl, diagnostics: bool) -> Self {
        Rkf78 {
            t: t0,
            y,
            h: h0.clamp(ctrl.h_min, ctrl.h_max),
            ctrl,
            diagnostics,
            contact_factor: DEFAULT_CONTACT_FACTOR,
            accepted: 0,
            rejected: 0,
        }
    }

    /// Takes one accepted step, never passing `t_end`. Attempts abandoned at
    /// a stage inside the contact bound count as rejected; their completed
    /// stages still count as evaluations.
    pub fn step(
        &mut self,
        t_end: f64,
        model: &SystemModel,
        potential: &MutualPotential,
    ) -> Result<AcceptedStep, Rkf78Error> {
        let bound = self.contact_factor * potential.convergence_radius();
        let mut f = |_t: f64, y: &[f64], out: &mut [f64]| -> Result<(), Rkf78Error> {
            let state = PackedState(y.try_into().expect("packed length"));
            let sep = state.parts().x.norm();
            if !(sep >= bound) {
                return Err(Rkf78Error::Contact { r: sep, bound });
            }
            let (d, _) = rhs(&state, model, potential)?;
            out.copy_from_slice(&d.0);
            Ok(())
        };
        let mut rejected = 0;
        loop {
            let remaining = t_end - self.t;
            let clipped = self.h.abs() >= remaining.abs();
            let h = if clipped { remaining } else { self.h };
            let out = match rkf78_step(&mut f, self.t, &self.y.0, h, &self.ctrl) {
                Ok(out) => out,
                // A trial stage past the bound is retried with half the step;
                // only a state that stays in contact at h_min ends the run.
                Err(Rkf78Error::Contact { r, bound }) => {
                    rejected += 1;
                    if 0.5 * h.abs() < self.ctrl.h_min || self.y.parts().x.norm() < bound {
                        self.rejected += rejected;
                        return Err(Rkf78Error::Contact { r, bound });
                    }
                    self.h = 0.5 * h;
                    continue;
                }
                Err(e) => return Err(e),
            };
            if out.accepted {
                self.y = PackedState(out.y_next.try_into().expect("packed length"));
                self.t = if clipped { t_end } else { self.t + h };
                // A step shortened to land on t_end says nothing about growth.
                if !clipped || out.h_next.abs() < self.h.abs() {
                    self.h = out.h_next;
                }
                self.accepted += 1;
                self.rejected += rejected;
                let grads = if self.diagnostics {
                    let (rel, _) = self.y.unpack(model);
                    Some(potential.evaluate(&rel.x, &rel.r)?)
                } else {
                    None
                };
                return Ok(AcceptedStep { h, rejected, grads });
            }
            rejected += 1;
            if out.h_next.abs() <= self.ctrl.h_min {
                self.rejected += rejected;
                return Err(Rkf78Error::StepUnderflow { t: self.t, h: out.h_next.abs() });
            }
            self.h = out.h_next;
        }
    }
}
