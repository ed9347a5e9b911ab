//! Online streaming scorer: per-sensor ring buffer, projection, departure
//! score, and alarm emission, plus plant-level aggregation across sensors.
//!
//! A detector warms up for L - 1 samples, then emits one score event per
//! measurement. Per-push cost is O(R*L): one window copy and one R x L
//! matrix-vector product.

use crate::boundary::{EllipsoidBoundary, SphereBoundary};
use crate::error::{Error, Result};
use crate::ingest::Measurement;
use crate::ssa::SubspaceModel;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::sync::Arc;

/// Which decision boundary a detector scores against.
#[derive(Debug, Clone, PartialEq)]
pub enum Boundary {
    Sphere(SphereBoundary),
    Ellipsoid(EllipsoidBoundary),
}

impl Boundary {
    pub fn score(&self, x: &nalgebra::DVector<f64>) -> Result<f64> {
        match self {
            Boundary::Sphere(b) => b.score(x),
            Boundary::Ellipsoid(b) => b.score(x),
        }
    }

    pub fn threshold(&self) -> f64 {
        match self {
            Boundary::Sphere(b) => b.threshold(),
            Boundary::Ellipsoid(b) => b.threshold(),
        }
    }

    /// Alarm rule: strictly above the threshold.
    pub fn alarms(&self, departure: f64) -> bool {
        departure > self.threshold()
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Boundary::Sphere(_) => "sphere",
            Boundary::Ellipsoid(_) => "ellipsoid",
        }
    }
}

/// One scored measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreEvent {
    pub sensor_id: String,
    pub timestamp_index: usize,
    pub departure: f64,
    pub alarmed: bool,
}

impl ScoreEvent {
    pub fn csv_header() -> &'static str {
        "sensor_id,timestamp_index,departure,alarmed"
    }

    pub fn to_csv_line(&self) -> String {
        format!("{},{},{},{}", self.sensor_id, self.timestamp_index, self.departure, self.alarmed)
    }

    pub fn from_csv_line(line: &str) -> Result<ScoreEvent> {
        let parts: Vec<&str> = line.trim_end().split(',').collect();
        if parts.len() != 4 {
            return Err(Error::data(format!("score event line has {} fields, expected 4", parts.len())));
        }
        Ok(ScoreEvent {
            sensor_id: parts[0].to_string(),
            timestamp_index: parts[1]
                .parse()
                .map_err(|_| Error::data(format!("bad timestamp_index '{}'", parts[1])))?,
            departure: parts[2]
                .parse()
                .map_err(|_| Error::data(format!("bad departure '{}'", parts[2])))?,
            alarmed: parts[3]
                .parse()
                .map_err(|_| Error::data(format!("bad alarmed flag '{}'", parts[3])))?,
        })
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("score event serializes")
    }
}

/// Timestamps where at least one sensor alarmed, with the sensors involved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantAlarm {
    pub timestamp_index: usize,
    pub alarming_sensors: BTreeSet<String>,
}

/// Per-sensor online scoring state.
#[derive(Debug, Clone)]
pub struct DetectorState {
    sensor_id: String,
    model: Arc<SubspaceModel>,
    boundary: Boundary,
    ring: Vec<f64>,
    write_idx: usize,
    filled: usize,
    window: Vec<f64>,
    samples_seen: usize,
    last_timestamp: Option<usize>,
}

impl DetectorState {
    pub fn new(sensor_id: impl Into<String>, model: Arc<SubspaceModel>, boundary: Boundary) -> Self {
        let lag = model.lag();
        DetectorState {
            sensor_id: sensor_id.into(),
            model,
            boundary,
            ring: vec![0.0; lag],
            write_idx: 0,
            filled: 0,
            window: vec![0.0; lag],
            samples_seen: 0,
            last_timestamp: None,
        }
    }

    pub fn sensor_id(&self) -> &str {
        &self.sensor_id
    }

    pub fn boundary(&self) -> &Boundary {
        &self.boundary
    }

    pub fn model(&self) -> &SubspaceModel {
        &self.model
    }

    pub fn samples_seen(&self) -> usize {
        self.samples_seen
    }

    /// Scoring is defined once the ring holds a full window.
    pub fn is_warmed_up(&self) -> bool {
        self.filled >= self.model.lag()
    }

    /// Feed one measurement. Returns a score event after warm-up, nothing
    /// before. Measurements must arrive in timestamp order with no gaps.
    pub fn push(&mut self, m: Measurement) -> Result<Option<ScoreEvent>> {
        if let Some(last) = self.last_timestamp {
            if m.timestamp_index != last + 1 {
                return Err(Error::data(format!(
                    "out-of-order measurement for '{}': got index {}, expected {}",
                    self.sensor_id,
                    m.timestamp_index,
                    last + 1
                )));
            }
        }
        self.last_timestamp = Some(m.timestamp_index);

        let lag = self.model.lag();
        self.ring[self.write_idx] = m.value;
        self.write_idx = (self.write_idx + 1) % lag;
        if self.filled < lag {
            self.filled += 1;
        }
        self.samples_seen += 1;

        if self.filled < lag {
            return Ok(None);
        }

        // Materialize the window oldest-first; write_idx points at the oldest.
        for i in 0..lag {
            self.window[i] = self.ring[(self.write_idx + i) % lag];
        }
        let x = self.model.project_window(&self.window)?;
        let departure = self.boundary.score(&x)?;
        Ok(Some(ScoreEvent {
            sensor_id: self.sensor_id.clone(),
            timestamp_index: m.timestamp_index,
            departure,
            alarmed: self.boundary.alarms(departure),
        }))
    }
}

/// Score a whole series by folding `push`; emits events for indices
/// L-1 .. len-1. The state must be fresh.
pub fn score_series(state: &mut DetectorState, values: &[f64]) -> Result<Vec<ScoreEvent>> {
    if state.samples_seen() != 0 {
        return Err(Error::parameter("score_series requires a fresh detector state"));
    }
    let lag = state.model.lag();
    if values.len() < lag {
        return Err(Error::parameter(format!(
            "series of length {} is shorter than lag {}",
            values.len(),
            lag
        )));
    }
    let mut events = Vec::with_capacity(values.len() - lag + 1);
    for (i, &value) in values.iter().enumerate() {
        if let Some(event) = state.push(Measurement { timestamp_index: i, value })? {
            events.push(event);
        }
    }
    Ok(events)
}

/// Merge per-sensor event streams into plant-level alarms: one entry per
/// timestamp where at least one sensor alarmed.
pub fn aggregate(streams: &[Vec<ScoreEvent>]) -> Result<Vec<PlantAlarm>> {
    let Some(first) = streams.first() else {
        return Ok(Vec::new());
    };
    for s in streams {
        if s.len() != first.len() {
            return Err(Error::data(format!(
                "mismatched stream lengths: {} vs {}",
                s.len(),
                first.len()
            )));
        }
    }
    let mut alarms = Vec::new();
    for k in 0..first.len() {
        let ts = first[k].timestamp_index;
        let mut sensors = BTreeSet::new();
        for s in streams {
            if s[k].timestamp_index != ts {
                return Err(Error::data(format!(
                    "streams disagree on timestamp at position {k}: {} vs {}",
                    s[k].timestamp_index, ts
                )));
            }
            if s[k].alarmed {
                sensors.insert(s[k].sensor_id.clone());
            }
        }
        if !sensors.is_empty() {
            alarms.push(PlantAlarm { timestamp_index: ts, alarming_sensors: sensors });
        }
    }
    Ok(alarms)
}
