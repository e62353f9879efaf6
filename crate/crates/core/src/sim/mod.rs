//! End-to-end runs: configuration, initial conditions, propagation with
//! either integrator, CSV streams, and a run summary.

pub mod config;
pub mod output;
pub mod scenarios;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use nalgebra::{Matrix3, Vector3};
use serde::Serialize;
use thiserror::Error;

pub use config::{
    BodySource, ElementsConfig, InitialConditions, IntegratorConfig, IntegratorKind, OrbitFrame,
    OutputConfig, ReconstructionChoice, RunConfig, ScaleConfig,
};
pub use output::{read_states, StateRow};

use crate::body_model::{build_body, nondimensionalize, octahedron, BodyError, PolyhedralBody, RawBodyModel, ScaleFactors};
use crate::dynamics::{
    conserved_quantities, elements_to_relative_state, euler313_to_rotation, init_inertial, DiagnosticsRecord,
    ElementsError, InertialState, OrbitalElements, RelativeState, SystemModel,
};
use crate::lgvi::{Lgvi, LgviError, LgviOptions, ImplicitSolveReport, ReconstructionFactor};
use crate::mutual_potential::{compute_q_tensors, MutualPotential, PotentialError, Reduction};
use crate::rkf78::{PackedState, Rkf78, Rkf78Error, StepControl};
use output::CsvSink;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("cannot access {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("csv error: {0}")]
    Csv(String),
    #[error(transparent)]
    Body(#[from] BodyError),
    #[error(transparent)]
    Elements(#[from] ElementsError),
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error(transparent)]
    Lgvi(LgviError),
    #[error(transparent)]
    Rkf78(Rkf78Error),
}

/// One propagated sample handed to observers, in SI units.
#[derive(Clone, Copy, Debug)]
pub struct Sample {
    pub step: usize,
    pub t: f64,
    pub rel: RelativeState,
    pub inertial: InertialState,
    pub diagnostics: Option<DiagnosticsRecord>,
    /// Rotation solves of the step that produced this sample (LGVI only).
    pub newton: Option<[ImplicitSolveReport; 2]>,
    /// Step size that produced this sample (zero for the initial sample).
    pub h: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct RunSummary {
    pub integrator: String,
    pub order: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub steps: usize,
    pub rejected_steps: usize,
    pub evaluations: u64,
    pub wall_seconds: f64,
    pub mean_step: f64,
    pub samples: usize,
    pub mean_abs_energy_error: f64,
    pub max_abs_energy_error: f64,
    pub mean_angular_momentum_error: f64,
    pub mean_linear_momentum_error: f64,
    pub mean_orthogonality_error: f64,
    pub max_orthogonality_error: f64,
    /// Least-squares slope of `E(t) - E(t0)` (J/s).
    pub energy_trend_slope: f64,
    /// `max - min` of `E(t) - E(t0)` (J).
    pub energy_error_range: f64,
    pub newton_max_iterations: usize,
    pub newton_median_iterations: f64,
    pub newton_max_residual: f64,
    pub termination: String,
}

impl RunSummary {
    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("summary serializes")
    }
}

/// Unit conversion between SI and the internal scaled units.
#[derive(Clone, Copy, Debug)]
struct Units(ScaleFactors);

impl Units {
    fn rel(&self, s: &RelativeState, to_si: bool) -> RelativeState {
        let ScaleFactors { length: l, time: t, .. } = self.0;
        let (kl, kv, kw) = if to_si { (l, l / t, 1.0 / t) } else { (1.0 / l, t / l, t) };
        RelativeState { x: s.x * kl, v: s.v * kv, r: s.r, omega: s.omega * kw, omega2: s.omega2 * kw }
    }

    fn inertial(&self, s: &InertialState, to_si: bool) -> InertialState {
        let ScaleFactors { length: l, time: t, .. } = self.0;
        let (kl, kv) = if to_si { (l, l / t) } else { (1.0 / l, t / l) };
        InertialState { x1: s.x1 * kl, x2: s.x2 * kl, v1: s.v1 * kv, v2: s.v2 * kv, r1: s.r1, r2: s.r2 }
    }

    fn time(&self, t: f64, to_si: bool) -> f64 {
        if to_si {
            t * self.0.time
        } else {
            t / self.0.time
        }
    }

    fn diag_to_si(&self, d: &DiagnosticsRecord) -> DiagnosticsRecord {
        let ScaleFactors { length: l, mass: m, time: t } = self.0;
        let ke = m * l * l / (t * t);
        DiagnosticsRecord {
            t: d.t * t,
            potential: d.potential * ke,
            kinetic: d.kinetic * ke,
            energy: d.energy * ke,
            linear_momentum: d.linear_momentum * (m * l / t),
            angular_momentum: d.angular_momentum * (m * l * l / t),
            ..*d
        }
    }
}

fn load_raw(src: &BodySource) -> Result<RawBodyModel, SimError> {
    match (&src.vertices, &src.faces, src.octahedron) {
        (Some(v), Some(f), None) => Ok(RawBodyModel::from_files(v, f, src.density)?),
        (None, None, Some([a, b, c])) => Ok(octahedron(a, b, c, src.density)),
        _ => Err(SimError::Config("body needs vertex and face files or an octahedron".into())),
    }
}

/// Body-to-reference attitude from 3-1-3 angles in degrees.
pub fn attitude_from_euler(angles: &[f64; 3], transpose: bool) -> Matrix3<f64> {
    let r = euler313_to_rotation(angles[0], angles[1], angles[2]);
    if transpose {
        r.transpose()
    } else {
        r
    }
}

/// Relative and inertial initial states in SI units.
pub fn initial_state(
    init: &InitialConditions,
    model: &SystemModel,
) -> Result<(RelativeState, InertialState), SimError> {
    let r1 = attitude_from_euler(&init.attitude1, init.euler_transpose);
    let r2 = attitude_from_euler(&init.attitude2, init.euler_transpose);
    let r = r2.transpose() * r1;
    let (x, v) = match (&init.elements, init.x, init.v) {
        (Some(el), None, None) => {
            let d = f64::to_radians;
            let elements = OrbitalElements {
                a: el.a,
                e: el.e,
                i: d(el.i),
                raan: d(el.raan),
                argp: d(el.argp),
                nu: d(el.nu),
            };
            let (x, v) = elements_to_relative_state(&elements, model.mu())?;
            match init.orbit_frame {
                OrbitFrame::Inertial => (r2.transpose() * x, r2.transpose() * v),
                OrbitFrame::Body2 => (x, v),
            }
        }
        (None, Some(x), Some(v)) => (Vector3::from(x), Vector3::from(v)),
        _ => return Err(SimError::Config("initial conditions need exactly one of elements or x/v".into())),
    };
    let rel = RelativeState {
        x,
        v,
        r,
        omega: r * Vector3::from(init.spin1),
        omega2: Vector3::from(init.spin2),
    };
    let inertial = init_inertial(&rel, model, &r2);
    Ok((rel, inertial))
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Emit {
    Regular,
    Final,
    WriteOnly,
}

/// Running averages of the conservation metrics.
#[derive(Default)]
struct Stats {
    reference: Option<DiagnosticsRecord>,
    n: usize,
    sum_de: f64,
    max_de: f64,
    sum_dpi: f64,
    sum_dgamma: f64,
    sum_orth: f64,
    max_orth: f64,
    min_signed: f64,
    max_signed: f64,
    // Least-squares sums in (t - t0, ΔE).
    st: f64,
    sy: f64,
    stt: f64,
    sty: f64,
    newton_hist: Vec<usize>,
    newton_max_residual: f64,
}

impl Stats {
    fn add(&mut self, d: &DiagnosticsRecord) {
        let Some(r) = self.reference else {
            self.reference = Some(*d);
            return;
        };
        let de = d.energy - r.energy;
        self.n += 1;
        self.sum_de += de.abs();
        self.max_de = self.max_de.max(de.abs());
        self.sum_dpi += (d.angular_momentum - r.angular_momentum).norm();
        self.sum_dgamma += (d.linear_momentum - r.linear_momentum).norm();
        self.sum_orth += d.orthogonality_r;
        self.max_orth = self.max_orth.max(d.orthogonality_r);
        self.min_signed = self.min_signed.min(de);
        self.max_signed = self.max_signed.max(de);
        let t = d.t - r.t;
        self.st += t;
        self.sy += de;
        self.stt += t * t;
        self.sty += t * de;
    }

    fn add_newton(&mut self, reports: &[ImplicitSolveReport; 2]) {
        for rep in reports {
            if self.newton_hist.len() <= rep.iterations {
                self.newton_hist.resize(rep.iterations + 1, 0);
            }
            self.newton_hist[rep.iterations] += 1;
            self.newton_max_residual = self.newton_max_residual.max(rep.residual);
        }
    }

    fn fill(&self, s: &mut RunSummary) {
        let n = self.n.max(1) as f64;
        s.samples = self.n;
        s.mean_abs_energy_error = self.sum_de / n;
        s.max_abs_energy_error = self.max_de;
        s.mean_angular_momentum_error = self.sum_dpi / n;
        s.mean_linear_momentum_error = self.sum_dgamma / n;
        s.mean_orthogonality_error = self.sum_orth / n;
        s.max_orthogonality_error = self.max_orth;
        s.energy_error_range = self.max_signed - self.min_signed;
        let denom = n * self.stt - self.st * self.st;
        s.energy_trend_slope = if self.n > 1 && denom > 0.0 { (n * self.sty - self.st * self.sy) / denom } else { 0.0 };
        let total: usize = self.newton_hist.iter().sum();
        s.newton_max_iterations = self.newton_hist.len().saturating_sub(1);
        s.newton_max_residual = self.newton_max_residual;
        s.newton_median_iterations = median_from_histogram(&self.newton_hist, total);
    }
}

fn median_from_histogram(hist: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let nth = |k: usize| {
        let mut acc = 0;
        for (value, &count) in hist.iter().enumerate() {
            acc += count;
            if acc > k {
                return value as f64;
            }
        }
        (hist.len() - 1) as f64
    };
    if total % 2 == 1 {
        nth(total / 2)
    } else {
        0.5 * (nth(total / 2 - 1) + nth(total / 2))
    }
}

/// Destinations for the CSV streams.
#[derive(Default)]
pub struct Outputs {
    pub states: Option<Box<dyn Write>>,
    pub diagnostics: Option<Box<dyn Write>>,
}

fn create(path: &Path) -> Result<Box<dyn Write>, SimError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| SimError::Io { path: dir.display().to_string(), source })?;
    }
    let f = File::create(path).map_err(|source| SimError::Io { path: path.display().to_string(), source })?;
    Ok(Box::new(BufWriter::new(f)))
}

impl Outputs {
    pub fn from_config(cfg: &OutputConfig) -> Result<Self, SimError> {
        Ok(Outputs {
            states: cfg.states.as_deref().map(create).transpose()?,
            diagnostics: cfg.diagnostics.as_deref().map(create).transpose()?,
        })
    }
}

/// A prepared simulation: bodies built, tables precomputed, initial state set.
pub struct Simulation {
    pub config: RunConfig,
    /// Bodies and constants in the internal (possibly scaled) units.
    pub model: SystemModel,
    pub potential: MutualPotential,
    /// Bodies in SI units.
    pub body1: PolyhedralBody,
    pub body2: PolyhedralBody,
    units: Units,
    t0: f64,
    rel0: RelativeState,
    inertial0: InertialState,
    h_resume: Option<f64>,
}

impl Simulation {
    pub fn new(config: RunConfig) -> Result<Self, SimError> {
        config.validate()?;
        let body1 = build_body(&load_raw(&config.body1)?)?;
        let body2 = build_body(&load_raw(&config.body2)?)?;
        let scale = match config.scale {
            Some(s) => ScaleFactors::new(s.length, s.mass, s.time)?,
            None => ScaleFactors::UNIT,
        };
        let si_model = SystemModel::new(body1.clone(), body2.clone(), config.g);
        let (rel0, inertial0) = initial_state(&config.initial, &si_model)?;
        let (b1, g) = nondimensionalize(&body1, &scale, config.g)?;
        let (b2, _) = nondimensionalize(&body2, &scale, config.g)?;
        let order = config.integrator.order;
        let q = compute_q_tensors(order)?;
        let reduction = if config.integrator.deterministic { Reduction::Deterministic } else { Reduction::Unordered };
        let potential = MutualPotential::new(&b1, &b2, g, &q, order)?.with_reduction(reduction);
        let model = SystemModel::new(b1, b2, g);
        let t0 = config.integrator.t0;
        Ok(Simulation { config, model, potential, body1, body2, units: Units(scale), t0, rel0, inertial0, h_resume: None })
    }

    /// Initial relative and inertial states in SI units.
    pub fn initial(&self) -> (f64, RelativeState, InertialState) {
        (self.t0, self.rel0, self.inertial0)
    }

    /// Restarts from a row of a previous run's states CSV.
    pub fn resume_from(&mut self, row: &StateRow) {
        self.t0 = row.t;
        self.rel0 = row.rel;
        self.inertial0 = row.inertial;
        self.inertial0.r1 = row.inertial.r2 * row.rel.r;
        self.h_resume = (row.h_next != 0.0).then_some(row.h_next);
    }

    /// Runs to `tf`, writing the configured output files and summary.
    pub fn run_to_files(&mut self) -> Result<RunSummary, SimError> {
        let outputs = Outputs::from_config(&self.config.output)?;
        let summary = self.run(outputs, |_| {})?;
        if let Some(path) = &self.config.output.summary {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|source| SimError::Io { path: dir.display().to_string(), source })?;
            }
            std::fs::write(path, summary.to_text())
                .map_err(|source| SimError::Io { path: path.display().to_string(), source })?;
        }
        Ok(summary)
    }

    /// Propagates from the initial state to `tf`. `observer` sees every
    /// step; CSV rows are written every `output.every` steps and at the end.
    /// Contact with the bodies' bounding spheres ends the run early and is
    /// reported in [`RunSummary::termination`].
    pub fn run<F: FnMut(&Sample)>(&mut self, outputs: Outputs, mut observer: F) -> Result<RunSummary, SimError> {
        let mut states = outputs.states.map(|w| CsvSink::new(w, &output::state_header())).transpose()?;
        let mut diags = outputs.diagnostics.map(|w| CsvSink::new(w, &output::diagnostics_header())).transpose()?;
        let every = self.config.output.every;
        let start_count = self.potential.evaluation_count();
        let clock = Instant::now();
        let mut stats = Stats::default();
        let it = self.config.integrator.clone();
        let units = self.units;
        let mut summary = RunSummary {
            integrator: match it.kind {
                IntegratorKind::Lgvi => "lgvi".into(),
                IntegratorKind::Rkf78 => "rkf78".into(),
            },
            order: it.order,
            t_start: self.t0,
            termination: "completed".into(),
            ..Default::default()
        };

        // Returns whether the sample's rows were written.
        let mut emit = |sample: &Sample, h_next: f64, mode: Emit, stats: &mut Stats| -> Result<bool, SimError> {
            if mode != Emit::WriteOnly {
                if let Some(d) = &sample.diagnostics {
                    stats.add(d);
                }
                if let Some(n) = &sample.newton {
                    stats.add_newton(n);
                }
                observer(sample);
            }
            let write = mode != Emit::Regular || sample.step.is_multiple_of(every);
            if write {
                if let Some(w) = states.as_mut() {
                    w.write(&output::state_row(sample.t, &sample.rel, &sample.inertial, h_next))?;
                }
                if let (Some(w), Some(d)) = (diags.as_mut(), &sample.diagnostics) {
                    w.write(&output::diagnostics_row(d))?;
                }
            }
            Ok(write)
        };
        let mut last: Option<(Sample, f64, bool)>;

        let rel0 = units.rel(&self.rel0, false);
        let inertial0 = units.inertial(&self.inertial0, false);
        let t0 = units.time(self.t0, false);
        let tf = units.time(it.tf, false);
        let model = &self.model;
        let potential = &self.potential;
        let diag_si = |t: f64, rel: &RelativeState, inertial: &InertialState, u: f64| {
            units.diag_to_si(&conserved_quantities(t, rel, inertial, model, u))
        };

        match it.kind {
            IntegratorKind::Lgvi => {
                let h = units.time(it.h.expect("validated"), false);
                let opts = LgviOptions {
                    newton_tolerance: it.newton_tolerance,
                    newton_max_iterations: it.newton_max_iterations,
                    contact_factor: it.contact_factor,
                    reconstruction: match it.reconstruction {
                        ReconstructionChoice::Body2 => ReconstructionFactor::BodyTwo,
                        ReconstructionChoice::Relative => ReconstructionFactor::Relative,
                    },
                };
                let n_steps = (((tf - t0) / h) - 1e-9).ceil().max(0.0) as usize;
                let mut lg = Lgvi::new(t0, h, rel0, inertial0, potential, opts).map_err(SimError::Lgvi)?;
                let first = Sample {
                    step: 0,
                    t: self.t0,
                    rel: self.rel0,
                    inertial: self.inertial0,
                    diagnostics: Some(diag_si(t0, &lg.state, &lg.inertial, lg.grads.u)),
                    newton: None,
                    h: 0.0,
                };
                let mode = if n_steps == 0 { Emit::Final } else { Emit::Regular };
                let written = emit(&first, units.time(h, true), mode, &mut stats)?;
                last = Some((first, units.time(h, true), written));
                for k in 1..=n_steps {
                    let res = match lg.step(model, potential) {
                        Ok(r) => r,
                        Err(LgviError::Contact { r, bound }) => {
                            summary.termination = format!("contact at t = {} (r = {r}, bound = {bound})", units.time(lg.t, true));
                            break;
                        }
                        Err(e) => return Err(SimError::Lgvi(e)),
                    };
                    lg.t = t0 + k as f64 * h;
                    summary.steps = k;
                    let sample = Sample {
                        step: k,
                        t: units.time(lg.t, true),
                        rel: units.rel(&lg.state, true),
                        inertial: units.inertial(&lg.inertial, true),
                        diagnostics: Some(diag_si(lg.t, &lg.state, &lg.inertial, lg.grads.u)),
                        newton: Some(res.newton),
                        h: units.time(h, true),
                    };
                    let mode = if k == n_steps { Emit::Final } else { Emit::Regular };
                    let written = emit(&sample, sample.h, mode, &mut stats)?;
                    last = Some((sample, sample.h, written));
                }
                summary.t_end = units.time(lg.t, true);
            }
            IntegratorKind::Rkf78 => {
                let tol = it.tolerance.expect("validated");
                let mut ctrl = StepControl::new(tol);
                if let Some(v) = it.h_min {
                    ctrl.h_min = units.time(v, false);
                }
                if let Some(v) = it.h_max {
                    ctrl.h_max = units.time(v, false);
                }
                let span = tf - t0;
                let h0 = match (self.h_resume, it.h_initial) {
                    (Some(h), _) => units.time(h, false),
                    (None, Some(h)) => units.time(h, false),
                    (None, None) => span / 1e5,
                };
                let packed = PackedState::pack(&rel0, &inertial0, model);
                let mut rk = Rkf78::new(t0, packed, h0.abs(), ctrl, it.rkf_diagnostics);
                rk.contact_factor = it.contact_factor;
                let diagnostics = if it.rkf_diagnostics {
                    let g = potential.evaluate(&rel0.x, &rel0.r)?;
                    Some(diag_si(t0, &rel0, &inertial0, g.u))
                } else {
                    None
                };
                let first = Sample { step: 0, t: self.t0, rel: self.rel0, inertial: self.inertial0, diagnostics, newton: None, h: 0.0 };
                let written = emit(&first, units.time(rk.h, true), Emit::Regular, &mut stats)?;
                last = Some((first, units.time(rk.h, true), written));
                let mut k = 0;
                while rk.t < tf {
                    let step = match rk.step(tf, model, potential) {
                        Ok(s) => s,
                        Err(Rkf78Error::Contact { r, bound }) => {
                            summary.termination = format!("contact at t = {} (r = {r}, bound = {bound})", units.time(rk.t, true));
                            break;
                        }
                        Err(e) => return Err(SimError::Rkf78(e)),
                    };
                    k += 1;
                    let (rel, inertial) = rk.y.unpack(model);
                    let done = rk.t >= tf;
                    let sample = Sample {
                        step: k,
                        t: units.time(rk.t, true),
                        rel: units.rel(&rel, true),
                        inertial: units.inertial(&inertial, true),
                        diagnostics: step.grads.map(|g| diag_si(rk.t, &rel, &inertial, g.u)),
                        newton: None,
                        h: units.time(step.h, true),
                    };
                    let mode = if done { Emit::Final } else { Emit::Regular };
                    let written = emit(&sample, units.time(rk.h, true), mode, &mut stats)?;
                    last = Some((sample, units.time(rk.h, true), written));
                }
                summary.steps = rk.accepted;
                summary.rejected_steps = rk.rejected;
                summary.t_end = units.time(rk.t, true);
            }
        }
        if let Some((sample, h_next, false)) = last {
            emit(&sample, h_next, Emit::WriteOnly, &mut stats)?;
        }
        if let Some(w) = states.as_mut() {
            w.flush()?;
        }
        if let Some(w) = diags.as_mut() {
            w.flush()?;
        }
        summary.evaluations = self.potential.evaluation_count() - start_count;
        summary.wall_seconds = clock.elapsed().as_secs_f64();
        summary.mean_step = if summary.steps > 0 { (summary.t_end - summary.t_start) / summary.steps as f64 } else { 0.0 };
        stats.fill(&mut summary);
        Ok(summary)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_of_histogram() {
        assert_eq!(median_from_histogram(&[0, 0, 3, 1], 4), 2.0);
        assert_eq!(median_from_histogram(&[0, 2, 2], 4), 1.5);
        assert_eq!(median_from_histogram(&[], 0), 0.0);
    }
}
