//! Model JSON and event-stream CSV.
//!
//! Model files use one-based type indices:
//!
//! ```json
//! {"d": 2, "mu": [1.0, 0.5],
//!  "kernels": [{"i": 1, "j": 2, "type": "exp", "alpha": 0.3, "beta": 2.0},
//!              {"i": 2, "j": 2, "type": "grid", "dt": 0.1, "values": [0.0, 1.0, 0.5, 0.0]}]}
//! ```
//!
//! Kernel `(i, j)` is the effect of a type-`j` event on the rate of type
//! `i`. Pairs without an entry get the zero kernel.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{HawkesError, Result};
use crate::model::{HawkesModel, Kernel};
use crate::simulate::{Event, EventStream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub d: usize,
    pub mu: Vec<f64>,
    #[serde(default)]
    pub kernels: Vec<KernelSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub i: usize,
    pub j: usize,
    #[serde(flatten)]
    pub shape: KernelShape,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum KernelShape {
    Exp { alpha: f64, beta: f64 },
    Grid { dt: f64, values: Vec<f64> },
}

impl ModelSpec {
    pub fn to_model(&self) -> Result<HawkesModel> {
        let d = self.d;
        if d == 0 {
            return Err(HawkesError::Input("d must be at least 1".into()));
        }
        if self.mu.len() != d {
            return Err(HawkesError::Input(format!("mu has {} entries, expected {d}", self.mu.len())));
        }
        let mut kernels = vec![Kernel::Zero; d * d];
        let mut seen = vec![false; d * d];
        for k in &self.kernels {
            if k.i == 0 || k.j == 0 || k.i > d || k.j > d {
                return Err(HawkesError::Input(format!("kernel index ({}, {}) out of range 1..={d}", k.i, k.j)));
            }
            let idx = (k.i - 1) * d + (k.j - 1);
            if seen[idx] {
                return Err(HawkesError::Input(format!("duplicate kernel ({}, {})", k.i, k.j)));
            }
            seen[idx] = true;
            kernels[idx] = match &k.shape {
                KernelShape::Exp { alpha, beta } => Kernel::exponential(*alpha, *beta),
                KernelShape::Grid { dt, values } => Kernel::grid(*dt, values.clone()),
            };
        }
        HawkesModel::new(self.mu.clone(), kernels)
    }

    pub fn from_model(model: &HawkesModel) -> Self {
        let d = model.dim();
        let mut kernels = Vec::new();
        for i in 0..d {
            for j in 0..d {
                let shape = match model.kernel(i, j) {
                    Kernel::Zero => continue,
                    Kernel::Exponential { alpha, beta } => KernelShape::Exp { alpha: *alpha, beta: *beta },
                    Kernel::Grid { dt, values } => KernelShape::Grid { dt: *dt, values: values.clone() },
                };
                kernels.push(KernelSpec { i: i + 1, j: j + 1, shape });
            }
        }
        ModelSpec { d, mu: model.mu().to_vec(), kernels }
    }
}

pub fn parse_model(json: &str) -> Result<HawkesModel> {
    let spec: ModelSpec = serde_json::from_str(json)?;
    spec.to_model()
}

pub fn read_model(path: &Path) -> Result<HawkesModel> {
    let mut s = String::new();
    File::open(path)?.read_to_string(&mut s)?;
    parse_model(&s)
}

pub fn model_to_json(model: &HawkesModel) -> String {
    serde_json::to_string(&ModelSpec::from_model(model)).expect("model serializes")
}

/// Hex SHA-256 of the canonical model JSON.
pub fn model_hash(model: &HawkesModel) -> String {
    let digest = Sha256::digest(model_to_json(model).as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct EventRow {
    time: f64,
    #[serde(rename = "type")]
    kind: usize,
    cluster_id: i64,
    parent_row: i64,
    generation: i64,
}

/// Writes `time,type,cluster_id,parent_row,generation` with one-based
/// types. Immigrants have parent_row -1; streams without lineage write -2
/// in all three lineage columns.
pub fn write_events<W: Write>(stream: &EventStream, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for e in &stream.events {
        let row = match &e.lineage {
            Some(l) => EventRow {
                time: e.time,
                kind: e.kind + 1,
                cluster_id: l.cluster_id as i64,
                parent_row: l.parent.map_or(-1, |p| p as i64),
                generation: l.generation as i64,
            },
            None => EventRow { time: e.time, kind: e.kind + 1, cluster_id: -2, parent_row: -2, generation: -2 },
        };
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_events_file(stream: &EventStream, path: &Path) -> Result<()> {
    write_events(stream, File::create(path)?)
}

/// Reads an event CSV. Observation window and dimension are inferred:
/// `[0, max(time)]` unless given, `d = max(type)` unless given.
pub fn read_events<R: Read>(input: R, dim: Option<usize>, t_obs: Option<f64>) -> Result<EventStream> {
    let mut r = csv::Reader::from_reader(input);
    let mut events = Vec::new();
    let mut any_lineage = false;
    let mut all_lineage = true;
    for row in r.deserialize() {
        let row: EventRow = row?;
        if row.kind == 0 {
            return Err(HawkesError::Input("event types are one-based".into()));
        }
        if !row.time.is_finite() {
            return Err(HawkesError::Input("non-finite event time".into()));
        }
        let lineage = if row.cluster_id >= 0 && row.generation >= 0 {
            any_lineage = true;
            Some(crate::simulate::Lineage {
                cluster_id: row.cluster_id as u64,
                parent: if row.parent_row >= 0 { Some(row.parent_row as usize) } else { None },
                generation: row.generation as u32,
            })
        } else {
            all_lineage = false;
            None
        };
        events.push(Event { time: row.time, kind: row.kind - 1, lineage });
    }
    if any_lineage && !all_lineage {
        return Err(HawkesError::Input("lineage columns are only partly filled".into()));
    }
    let d_seen = events.iter().map(|e| e.kind + 1).max().unwrap_or(1);
    let dim = dim.unwrap_or(d_seen);
    if d_seen > dim {
        return Err(HawkesError::Input(format!("event type {d_seen} exceeds dimension {dim}")));
    }
    let t_end = t_obs.unwrap_or_else(|| events.iter().map(|e| e.time).fold(0.0, f64::max));
    EventStream::from_events(events, dim, t_end)
}

pub fn read_events_file(path: &Path, dim: Option<usize>, t_obs: Option<f64>) -> Result<EventStream> {
    read_events(File::open(path)?, dim, t_obs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_one_based_kernels() {
        let m = parse_model(
            r#"{"d":2,"mu":[1.0,0.5],"kernels":[
                {"i":1,"j":2,"type":"exp","alpha":0.3,"beta":2.0},
                {"i":2,"j":2,"type":"grid","dt":0.5,"values":[0.0,0.4,0.0]}]}"#,
        )
        .unwrap();
        assert_eq!(m.dim(), 2);
        assert!(m.kernel(0, 0).is_zero());
        assert_eq!(*m.kernel(0, 1), Kernel::exponential(0.3, 2.0));
        assert!((m.kernel(1, 1).integral() - 0.2).abs() < 1e-12);
        let again = parse_model(&model_to_json(&m)).unwrap();
        assert_eq!(again, m);
        assert_eq!(model_hash(&m), model_hash(&again));
    }

    #[test]
    fn rejects_bad_models() {
        assert!(parse_model(r#"{"d":1,"mu":[1.0,2.0]}"#).is_err());
        assert!(parse_model(r#"{"d":1,"mu":[1.0],"kernels":[{"i":0,"j":1,"type":"exp","alpha":0.1,"beta":1}]}"#).is_err());
        let e = parse_model(r#"{"d":1,"mu":[1.0],"kernels":[{"i":1,"j":1,"type":"exp","alpha":1.2,"beta":1}]}"#)
            .unwrap_err();
        assert_eq!(e.exit_code(), 3);
        assert!(parse_model("{").is_err());
    }
}
