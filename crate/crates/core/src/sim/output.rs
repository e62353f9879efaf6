//! CSV layout of the state and diagnostics streams.

use std::io::{Read, Write};

use nalgebra::{Matrix3, Vector3};

use super::SimError;
use crate::dynamics::{DiagnosticsRecord, InertialState, RelativeState};

fn vec_names(prefix: &str) -> [String; 3] {
    ["x", "y", "z"].map(|c| format!("{prefix}_{c}"))
}

fn mat_names(prefix: &str) -> Vec<String> {
    (1..=3).flat_map(|r| (1..=3).map(move |c| format!("{prefix}_{r}{c}"))).collect()
}

pub fn state_header() -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend(vec_names("X"));
    h.extend(vec_names("V"));
    h.extend(mat_names("R"));
    h.extend(vec_names("Omega"));
    h.extend(vec_names("Omega2"));
    h.extend(vec_names("x1"));
    h.extend(vec_names("x2"));
    h.extend(vec_names("v1"));
    h.extend(vec_names("v2"));
    h.extend(mat_names("R2"));
    h.push("h_next".to_string());
    h
}

pub fn diagnostics_header() -> Vec<String> {
    let mut h: Vec<String> = ["t", "U", "KE", "E"].iter().map(|s| s.to_string()).collect();
    h.extend(vec_names("gamma_T"));
    h.extend(vec_names("pi_T"));
    h.push("err_R".to_string());
    h.push("err_R2".to_string());
    h
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn push_vec(row: &mut Vec<String>, v: &Vector3<f64>) {
    row.extend(v.iter().map(|&x| fmt(x)));
}

fn push_mat(row: &mut Vec<String>, m: &Matrix3<f64>) {
    for r in 0..3 {
        for c in 0..3 {
            row.push(fmt(m[(r, c)]));
        }
    }
}

pub fn state_row(t: f64, rel: &RelativeState, inertial: &InertialState, h_next: f64) -> Vec<String> {
    let mut row = vec![fmt(t)];
    push_vec(&mut row, &rel.x);
    push_vec(&mut row, &rel.v);
    push_mat(&mut row, &rel.r);
    push_vec(&mut row, &rel.omega);
    push_vec(&mut row, &rel.omega2);
    push_vec(&mut row, &inertial.x1);
    push_vec(&mut row, &inertial.x2);
    push_vec(&mut row, &inertial.v1);
    push_vec(&mut row, &inertial.v2);
    push_mat(&mut row, &inertial.r2);
    row.push(fmt(h_next));
    row
}

pub fn diagnostics_row(d: &DiagnosticsRecord) -> Vec<String> {
    let mut row = vec![fmt(d.t), fmt(d.potential), fmt(d.kinetic), fmt(d.energy)];
    push_vec(&mut row, &d.linear_momentum);
    push_vec(&mut row, &d.angular_momentum);
    row.push(fmt(d.orthogonality_r));
    row.push(fmt(d.orthogonality_r2));
    row
}

/// One parsed row of a states CSV.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StateRow {
    pub t: f64,
    pub rel: RelativeState,
    pub inertial: InertialState,
    pub h_next: f64,
}

pub fn parse_state_row(fields: &[f64]) -> Option<StateRow> {
    if fields.len() != state_header().len() {
        return None;
    }
    let v = |i: usize| Vector3::new(fields[i], fields[i + 1], fields[i + 2]);
    let m = |i: usize| Matrix3::from_row_slice(&fields[i..i + 9]);
    let (x2, v2, r2) = (v(25), v(31), m(34));
    Some(StateRow {
        t: fields[0],
        rel: RelativeState { x: v(1), v: v(4), r: m(7), omega: v(16), omega2: v(19) },
        inertial: InertialState { x1: v(22), x2, v1: v(28), v2, r1: r2 * m(7), r2 },
        h_next: fields[43],
    })
}

/// Reads every row of a states CSV.
pub fn read_states<R: Read>(reader: R) -> Result<Vec<StateRow>, SimError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| SimError::Csv(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header != state_header() {
        return Err(SimError::Csv("unexpected states header".into()));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| SimError::Csv(e.to_string()))?;
        let fields = rec
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| SimError::Csv(e.to_string()))?;
        rows.push(parse_state_row(&fields).ok_or_else(|| SimError::Csv("wrong field count".into()))?);
    }
    Ok(rows)
}

/// A CSV stream with a single header row.
pub struct CsvSink {
    writer: csv::Writer<Box<dyn Write>>,
}

impl CsvSink {
    pub fn new(out: Box<dyn Write>, header: &[String]) -> Result<Self, SimError> {
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(header).map_err(|e| SimError::Csv(e.to_string()))?;
        Ok(CsvSink { writer })
    }

    pub fn write(&mut self, row: &[String]) -> Result<(), SimError> {
        self.writer.write_record(row).map_err(|e| SimError::Csv(e.to_string()))
    }

    pub fn flush(&mut self) -> Result<(), SimError> {
        self.writer.flush().map_err(|e| SimError::Csv(e.to_string()))
    }
}
