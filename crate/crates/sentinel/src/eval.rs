//! Metrics and reporting: per-attack detection delay and sensor counts,
//! aggregate precision/recall/F1/false-alarm rate, and side-by-side detector
//! comparisons.
//!
//! Aggregates use per-sample granularity over the evaluation window: a sample
//! counts as alarmed when any sensor alarms on it, and as attack when it
//! falls inside a labeled window. Alarms inside the training and validation
//! prefix are excluded via `eval_start`.

use crate::detector::{PlantAlarm, ScoreEvent};
use crate::error::{Error, Result};
use crate::ingest::AttackInterval;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// Outcome of one labeled attack window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackOutcome {
    /// 1-based position of the attack in the truth list.
    pub attack_id: usize,
    pub label: String,
    pub detected: bool,
    /// Samples from attack start to the first in-window plant alarm.
    pub delay_samples: Option<usize>,
    pub delay_hours: Option<f64>,
    /// Distinct sensors alarming inside the window.
    pub sensor_count: usize,
}

/// Per-attack outcomes from plant alarms and ground truth.
pub fn per_attack(
    alarms: &[PlantAlarm],
    truth: &[AttackInterval],
    samples_per_hour: f64,
) -> Result<Vec<AttackOutcome>> {
    if truth.is_empty() {
        return Err(Error::data("no attacks to evaluate"));
    }
    if !(samples_per_hour > 0.0) {
        return Err(Error::parameter("samples_per_hour must be positive"));
    }
    let mut outcomes = Vec::with_capacity(truth.len());
    for (idx, iv) in truth.iter().enumerate() {
        let mut first_alarm: Option<usize> = None;
        let mut sensors = std::collections::BTreeSet::new();
        for alarm in alarms {
            if alarm.timestamp_index >= iv.start && alarm.timestamp_index < iv.end {
                first_alarm.get_or_insert(alarm.timestamp_index);
                sensors.extend(alarm.alarming_sensors.iter().cloned());
            }
        }
        let delay_samples = first_alarm.map(|ts| ts - iv.start);
        outcomes.push(AttackOutcome {
            attack_id: idx + 1,
            label: iv.label.clone(),
            detected: delay_samples.is_some(),
            delay_samples,
            delay_hours: delay_samples.map(|d| d as f64 / samples_per_hour),
            sensor_count: sensors.len(),
        });
    }
    Ok(outcomes)
}

/// Aggregate per-sample classification metrics, each in [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub false_alarm_rate: f64,
    /// Metrics whose denominator was zero (reported as 0).
    pub undefined: Vec<String>,
}

/// Count-based metrics over `[eval_start, len)`.
///
/// `alarmed[t]` is the plant-level alarm flag for sample t, `truth[t]` the
/// ground-truth attack flag.
pub fn aggregate_metrics(alarmed: &[bool], truth: &[bool], eval_start: usize) -> Result<AggregateMetrics> {
    if alarmed.len() != truth.len() {
        return Err(Error::data(format!(
            "alarm flags ({}) and truth flags ({}) differ in length",
            alarmed.len(),
            truth.len()
        )));
    }
    if eval_start > truth.len() {
        return Err(Error::parameter("eval_start beyond series end"));
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0usize, 0usize, 0usize, 0usize);
    for t in eval_start..truth.len() {
        match (alarmed[t], truth[t]) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }

    let mut undefined = Vec::new();
    let ratio = |num: usize, den: usize, name: &str, undefined: &mut Vec<String>| {
        if den == 0 {
            undefined.push(name.to_string());
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let precision = ratio(tp, tp + fp, "precision", &mut undefined);
    let recall = ratio(tp, tp + fn_, "recall", &mut undefined);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        undefined.push("f1".to_string());
        0.0
    };
    let false_alarm_rate = ratio(fp, fp + tn, "false_alarm_rate", &mut undefined);
    Ok(AggregateMetrics { precision, recall, f1, false_alarm_rate, undefined })
}

/// Plant-level alarm flags from per-sensor event streams, aligned to a series
/// of `len` samples (warm-up samples stay false).
pub fn alarm_flags(streams: &[Vec<ScoreEvent>], len: usize) -> Vec<bool> {
    let mut flags = vec![false; len];
    for stream in streams {
        for e in stream {
            if e.alarmed && e.timestamp_index < len {
                flags[e.timestamp_index] = true;
            }
        }
    }
    flags
}

/// Alarm counts over a fixed ellipsoid score stream for each slack value;
/// a diagnostic for threshold selection.
pub fn threshold_sweep(events: &[ScoreEvent], epsilons: &[f64]) -> Vec<(f64, usize)> {
    epsilons
        .iter()
        .map(|&eps| {
            let theta = 1.0 + eps;
            (eps, events.iter().filter(|e| e.departure > theta).count())
        })
        .collect()
}

/// Per-sensor metrics for diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorMetrics {
    pub sensor_id: String,
    pub metrics: AggregateMetrics,
}

/// Full evaluation report for one detector run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub dataset: String,
    pub boundary: String,
    pub outcomes: Vec<AttackOutcome>,
    pub metrics: AggregateMetrics,
    pub per_sensor: Vec<SensorMetrics>,
}

impl EvalReport {
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "dataset: {}  boundary: {}", self.dataset, self.boundary);
        let _ = writeln!(out, "attack  label  detected  delay_samples  delay_hours  sensors");
        for o in &self.outcomes {
            let delay_s = o.delay_samples.map_or("x".to_string(), |d| d.to_string());
            let delay_h = o.delay_hours.map_or("x".to_string(), |d| format!("{d:.2}"));
            let _ = writeln!(
                out,
                "{:<7} {:<6} {:<9} {:<14} {:<12} {}",
                o.attack_id, o.label, o.detected, delay_s, delay_h, o.sensor_count
            );
        }
        let m = &self.metrics;
        let _ = writeln!(
            out,
            "precision {:.4}  recall {:.4}  f1 {:.4}  false_alarm_rate {:.4}",
            m.precision, m.recall, m.f1, m.false_alarm_rate
        );
        if !m.undefined.is_empty() {
            let _ = writeln!(out, "undefined (zero denominator): {}", m.undefined.join(", "));
        }
        out
    }

    pub fn render_csv(&self) -> String {
        let mut out = String::from("attack_id,label,detected,delay_samples,delay_hours,sensor_count\n");
        for o in &self.outcomes {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                o.attack_id,
                o.label,
                o.detected,
                o.delay_samples.map_or(String::new(), |d| d.to_string()),
                o.delay_hours.map_or(String::new(), |d| d.to_string()),
                o.sensor_count
            );
        }
        let m = &self.metrics;
        let _ = writeln!(out, "precision,recall,f1,false_alarm_rate,,");
        let _ = writeln!(out, "{},{},{},{},,", m.precision, m.recall, m.f1, m.false_alarm_rate);
        out
    }
}

/// One attack row of a side-by-side comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub attack_id: usize,
    pub label: String,
    pub delay_a: Option<usize>,
    pub delay_b: Option<usize>,
    pub sensors_a: usize,
    pub sensors_b: usize,
}

/// Side-by-side comparison of two runs on the same dataset and truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub dataset: String,
    pub boundary_a: String,
    pub boundary_b: String,
    pub rows: Vec<ComparisonRow>,
    pub metrics_a: AggregateMetrics,
    pub metrics_b: AggregateMetrics,
    /// b minus a: precision, recall, f1, false-alarm rate.
    pub deltas: [f64; 4],
}

pub fn compare(a: &EvalReport, b: &EvalReport) -> Result<ComparisonReport> {
    if a.outcomes.is_empty() || b.outcomes.is_empty() {
        return Err(Error::data("cannot compare empty reports"));
    }
    if a.dataset != b.dataset || a.outcomes.len() != b.outcomes.len() {
        return Err(Error::data(format!(
            "mismatched datasets: '{}' ({} attacks) vs '{}' ({} attacks)",
            a.dataset,
            a.outcomes.len(),
            b.dataset,
            b.outcomes.len()
        )));
    }
    let rows = a
        .outcomes
        .iter()
        .zip(&b.outcomes)
        .map(|(x, y)| ComparisonRow {
            attack_id: x.attack_id,
            label: x.label.clone(),
            delay_a: x.delay_samples,
            delay_b: y.delay_samples,
            sensors_a: x.sensor_count,
            sensors_b: y.sensor_count,
        })
        .collect();
    let deltas = [
        b.metrics.precision - a.metrics.precision,
        b.metrics.recall - a.metrics.recall,
        b.metrics.f1 - a.metrics.f1,
        b.metrics.false_alarm_rate - a.metrics.false_alarm_rate,
    ];
    Ok(ComparisonReport {
        dataset: a.dataset.clone(),
        boundary_a: a.boundary.clone(),
        boundary_b: b.boundary.clone(),
        rows,
        metrics_a: a.metrics.clone(),
        metrics_b: b.metrics.clone(),
        deltas,
    })
}

impl ComparisonReport {
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "dataset: {}  a = {}  b = {}",
            self.dataset, self.boundary_a, self.boundary_b
        );
        let _ = writeln!(out, "attack  label  delay_a  delay_b  sensors_a  sensors_b");
        for r in &self.rows {
            let da = r.delay_a.map_or("x".to_string(), |d| d.to_string());
            let db = r.delay_b.map_or("x".to_string(), |d| d.to_string());
            let _ = writeln!(
                out,
                "{:<7} {:<6} {:<8} {:<8} {:<10} {}",
                r.attack_id, r.label, da, db, r.sensors_a, r.sensors_b
            );
        }
        let _ = writeln!(
            out,
            "a: precision {:.4} recall {:.4} f1 {:.4} far {:.4}",
            self.metrics_a.precision,
            self.metrics_a.recall,
            self.metrics_a.f1,
            self.metrics_a.false_alarm_rate
        );
        let _ = writeln!(
            out,
            "b: precision {:.4} recall {:.4} f1 {:.4} far {:.4}",
            self.metrics_b.precision,
            self.metrics_b.recall,
            self.metrics_b.f1,
            self.metrics_b.false_alarm_rate
        );
        let _ = writeln!(
            out,
            "delta (b - a): precision {:+.4} recall {:+.4} f1 {:+.4} far {:+.4}",
            self.deltas[0], self.deltas[1], self.deltas[2], self.deltas[3]
        );
        out
    }

    pub fn render_csv(&self) -> String {
        let mut out = String::from("attack_id,label,delay_a,delay_b,sensors_a,sensors_b\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.attack_id,
                r.label,
                r.delay_a.map_or(String::new(), |d| d.to_string()),
                r.delay_b.map_or(String::new(), |d| d.to_string()),
                r.sensors_a,
                r.sensors_b
            );
        }
        out
    }
}
