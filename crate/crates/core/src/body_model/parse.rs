use std::collections::HashMap;

use nalgebra::Vector3;

use super::{BodyError, RawBodyModel};

/// Parse vertex and face lists into a [`RawBodyModel`].
///
/// Vertex rows are `x y z`. Face rows are `i j k [rho]` with one-based vertex
/// indices listed counterclockwise as seen from outside the body. Blank lines
/// and lines starting with `#` are ignored. Faces without a density column get
/// `default_density`.
pub fn parse_body_model(
    vertex_text: &str,
    face_text: &str,
    default_density: f64,
) -> Result<RawBodyModel, BodyError> {
    let mut vertices = Vec::new();
    for (line_no, fields) in data_rows(vertex_text) {
        if fields.len() != 3 {
            return Err(BodyError::Parse {
                file: "vertex",
                line: line_no,
                msg: format!("expected 3 coordinates, found {}", fields.len()),
            });
        }
        let mut xyz = [0.0; 3];
        for (slot, field) in xyz.iter_mut().zip(&fields) {
            *slot = parse_float(field, "vertex", line_no)?;
        }
        vertices.push(Vector3::from(xyz));
    }

    let mut faces = Vec::new();
    let mut densities = Vec::new();
    for (line_no, fields) in data_rows(face_text) {
        if fields.len() != 3 && fields.len() != 4 {
            return Err(BodyError::Parse {
                file: "face",
                line: line_no,
                msg: format!("expected 3 indices and an optional density, found {} fields", fields.len()),
            });
        }
        let mut idx = [0usize; 3];
        for (slot, field) in idx.iter_mut().zip(&fields[..3]) {
            let one_based: usize = field.parse().map_err(|_| BodyError::Parse {
                file: "face",
                line: line_no,
                msg: format!("invalid vertex index `{field}`"),
            })?;
            if one_based == 0 || one_based > vertices.len() {
                return Err(BodyError::Topology(format!(
                    "face on line {line_no} references vertex {one_based} but there are {} vertices",
                    vertices.len()
                )));
            }
            *slot = one_based - 1;
        }
        if idx[0] == idx[1] || idx[1] == idx[2] || idx[0] == idx[2] {
            return Err(BodyError::Topology(format!(
                "face on line {line_no} repeats a vertex"
            )));
        }
        let rho = match fields.get(3) {
            Some(field) => parse_float(field, "face", line_no)?,
            None => default_density,
        };
        faces.push(idx);
        densities.push(rho);
    }

    let raw = RawBodyModel {
        vertices,
        faces,
        densities,
    };
    raw.validate()?;
    Ok(raw)
}

fn data_rows(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            None
        } else {
            Some((i + 1, line.split_whitespace().collect()))
        }
    })
}

fn parse_float(field: &str, file: &'static str, line: usize) -> Result<f64, BodyError> {
    let value: f64 = field.parse().map_err(|_| BodyError::Parse {
        file,
        line,
        msg: format!("invalid number `{field}`"),
    })?;
    if !value.is_finite() {
        return Err(BodyError::Parse {
            file,
            line,
            msg: format!("non-finite number `{field}`"),
        });
    }
    Ok(value)
}

impl RawBodyModel {
    /// Check index bounds and that the faces form a closed, consistently
    /// oriented surface.
    pub fn validate(&self) -> Result<(), BodyError> {
        if self.faces.len() < 4 {
            return Err(BodyError::Topology(format!(
                "a closed surface needs at least 4 faces, found {}",
                self.faces.len()
            )));
        }
        if self.densities.len() != self.faces.len() {
            return Err(BodyError::Topology(
                "density column length does not match face count".into(),
            ));
        }
        // Directed edge -> count. A closed oriented surface uses each directed
        // edge exactly once and its reverse exactly once.
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        for (f, face) in self.faces.iter().enumerate() {
            for &i in face {
                if i >= self.vertices.len() {
                    return Err(BodyError::Topology(format!(
                        "face {} references vertex {} but there are {} vertices",
                        f + 1,
                        i + 1,
                        self.vertices.len()
                    )));
                }
            }
            if face[0] == face[1] || face[1] == face[2] || face[0] == face[2] {
                return Err(BodyError::Topology(format!("face {} repeats a vertex", f + 1)));
            }
            for k in 0..3 {
                *directed.entry((face[k], face[(k + 1) % 3])).or_default() += 1;
            }
        }
        for (&(i, j), &count) in &directed {
            if count > 1 {
                return Err(BodyError::Topology(format!(
                    "edge {}-{} is traversed {count} times in the same direction (inconsistent orientation or non-manifold edge)",
                    i + 1,
                    j + 1
                )));
            }
            if !directed.contains_key(&(j, i)) {
                return Err(BodyError::Topology(format!(
                    "edge {}-{} belongs to only one face (open surface)",
                    i + 1,
                    j + 1
                )));
            }
        }
        Ok(())
    }
}
