use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::SimError;

pub const DEFAULT_G: f64 = 6.674e-11;

/// Complete description of one simulation run. Serialized as TOML.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_g")]
    pub g: f64,
    #[serde(default)]
    pub scale: Option<ScaleConfig>,
    pub body1: BodySource,
    pub body2: BodySource,
    pub initial: InitialConditions,
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_g() -> f64 {
    DEFAULT_G
}

/// Nondimensionalization divisors applied internally; outputs stay in SI.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaleConfig {
    pub length: f64,
    pub mass: f64,
    pub time: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodySource {
    /// Vertex and face files, resolved relative to the config file.
    #[serde(default)]
    pub vertices: Option<PathBuf>,
    #[serde(default)]
    pub faces: Option<PathBuf>,
    /// Semi-axes of a built-in octahedron, used instead of files.
    #[serde(default)]
    pub octahedron: Option<[f64; 3]>,
    /// Density for simplices without an explicit value (kg/m³).
    #[serde(default = "default_density")]
    pub density: f64,
}

fn default_density() -> f64 {
    2500.0
}

impl BodySource {
    pub fn octahedron(a: f64, b: f64, c: f64, density: f64) -> Self {
        BodySource { vertices: None, faces: None, octahedron: Some([a, b, c]), density }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrbitFrame {
    /// Elements describe the relative orbit in the common reference frame.
    #[default]
    Inertial,
    /// Elements describe the relative orbit in the initial body-2 frame.
    Body2,
}

/// Keplerian elements in metres and degrees.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementsConfig {
    pub a: f64,
    pub e: f64,
    pub i: f64,
    pub raan: f64,
    pub argp: f64,
    pub nu: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConditions {
    /// 3-1-3 Euler angles (degrees) of each body in the common frame.
    pub attitude1: [f64; 3],
    pub attitude2: [f64; 3],
    /// Use the transpose of `Rz Rx Rz` as the body-to-reference attitude.
    #[serde(default = "default_true")]
    pub euler_transpose: bool,
    /// Angular velocities in each body's own frame (rad/s).
    #[serde(default)]
    pub spin1: [f64; 3],
    #[serde(default)]
    pub spin2: [f64; 3],
    #[serde(default)]
    pub elements: Option<ElementsConfig>,
    #[serde(default)]
    pub orbit_frame: OrbitFrame,
    /// Relative position and velocity in the body-2 frame.
    #[serde(default)]
    pub x: Option<[f64; 3]>,
    #[serde(default)]
    pub v: Option<[f64; 3]>,
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegratorKind {
    #[default]
    Lgvi,
    Rkf78,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReconstructionChoice {
    #[default]
    Body2,
    Relative,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    pub kind: IntegratorKind,
    /// Fixed step (LGVI).
    #[serde(default)]
    pub h: Option<f64>,
    /// Error tolerance (RKF7(8)).
    #[serde(default)]
    pub tolerance: Option<f64>,
    /// Initial RKF step; defaults to `(t_f - t_0) / 1e5`.
    #[serde(default)]
    pub h_initial: Option<f64>,
    #[serde(default)]
    pub h_min: Option<f64>,
    #[serde(default)]
    pub h_max: Option<f64>,
    #[serde(default)]
    pub t0: f64,
    pub tf: f64,
    #[serde(default = "default_order")]
    pub order: usize,
    #[serde(default = "default_true")]
    pub deterministic: bool,
    /// Extra gradient evaluation after each accepted RKF step for diagnostics.
    #[serde(default = "default_true")]
    pub rkf_diagnostics: bool,
    #[serde(default = "default_contact")]
    pub contact_factor: f64,
    #[serde(default = "default_newton_tol")]
    pub newton_tolerance: f64,
    #[serde(default = "default_newton_iter")]
    pub newton_max_iterations: usize,
    #[serde(default)]
    pub reconstruction: ReconstructionChoice,
}

fn default_order() -> usize {
    4
}
fn default_contact() -> f64 {
    crate::lgvi::DEFAULT_CONTACT_FACTOR
}
fn default_newton_tol() -> f64 {
    crate::lgvi::DEFAULT_NEWTON_TOLERANCE
}
fn default_newton_iter() -> usize {
    crate::lgvi::DEFAULT_NEWTON_MAX_ITERATIONS
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub states: Option<PathBuf>,
    #[serde(default)]
    pub diagnostics: Option<PathBuf>,
    #[serde(default)]
    pub summary: Option<PathBuf>,
    /// Write every n-th step (the initial and final rows are always written).
    #[serde(default = "default_every")]
    pub every: usize,
}

fn default_every() -> usize {
    1
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { states: None, diagnostics: None, summary: None, every: 1 }
    }
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, SimError> {
        let cfg: RunConfig = toml::from_str(s).map_err(|e| SimError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative paths inside it are resolved against
    /// the file's directory.
    pub fn from_file(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SimError::Io { path: path.display().to_string(), source: e })?;
        let mut cfg = Self::from_toml_str(&text)?;
        if let Some(dir) = path.parent() {
            cfg.resolve_paths(dir);
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(path) = p {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        };
        for body in [&mut self.body1, &mut self.body2] {
            fix(&mut body.vertices);
            fix(&mut body.faces);
        }
        fix(&mut self.output.states);
        fix(&mut self.output.diagnostics);
        fix(&mut self.output.summary);
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::Config(m.to_string()));
        for (name, b) in [("body1", &self.body1), ("body2", &self.body2)] {
            let files = b.vertices.is_some() && b.faces.is_some();
            let partial = b.vertices.is_some() != b.faces.is_some();
            if partial || files == b.octahedron.is_some() {
                return Err(SimError::Config(format!(
                    "{name}: give either both vertices and faces files or an octahedron"
                )));
            }
        }
        let init = &self.initial;
        let state_vector = init.x.is_some() || init.v.is_some();
        if init.elements.is_some() == state_vector {
            return bad("initial conditions need exactly one of elements or x/v");
        }
        if state_vector && (init.x.is_none() || init.v.is_none()) {
            return bad("state-vector initial conditions need both x and v");
        }
        let it = &self.integrator;
        match it.kind {
            IntegratorKind::Lgvi => {
                if it.tolerance.is_some() {
                    return bad("lgvi takes a step size h, not a tolerance");
                }
                match it.h {
                    Some(h) if h.is_finite() && h != 0.0 => {
                        if h * (it.tf - it.t0) < 0.0 {
                            return bad("step size h must point from t0 towards tf");
                        }
                    }
                    _ => return bad("lgvi needs a finite nonzero step size h"),
                }
            }
            IntegratorKind::Rkf78 => {
                if it.h.is_some() {
                    return bad("rkf78 takes a tolerance, not a fixed step h");
                }
                match it.tolerance {
                    Some(t) if t > 0.0 => {}
                    _ => return bad("rkf78 needs a positive tolerance"),
                }
            }
        }
        if !(it.tf.is_finite() && it.t0.is_finite()) || it.tf == it.t0 {
            return bad("t0 and tf must be finite and distinct");
        }
        if self.output.every == 0 {
            return bad("output.every must be at least 1");
        }
        if !(self.g >= 0.0) {
            return bad("g must be non-negative");
        }
        Ok(())
    }
}
