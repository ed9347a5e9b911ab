//! Core domain types, CSV dataset ingestion, and train/validation/test
//! splitting for labeled sensor time series.
//!
//! A series is an uninterrupted sequence of measurements: the position of a
//! value in the series *is* its timestamp index. Attack labels arrive as a
//! per-row 0/1 flag column and are reconstructed into half-open intervals.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;

/// Default name of the attack-flag column in CSV files.
pub const ATTACK_FLAG_COL: &str = "ATT_FLAG";

/// A single sensor reading: sample ordinal plus value in engineering units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub timestamp_index: usize,
    pub value: f64,
}

/// A labeled attack window `[start, end)` on the series timeline.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackInterval {
    pub start: usize,
    pub end: usize,
    pub label: String,
}

impl AttackInterval {
    pub fn new(start: usize, end: usize, label: impl Into<String>) -> Self {
        AttackInterval { start, end, label: label.into() }
    }

    pub fn contains(&self, index: usize) -> bool {
        index >= self.start && index < self.end
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

/// A univariate measurement sequence with attack-interval annotations.
///
/// Every index not covered by an attack interval is ground-truth normal.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorSeries {
    pub sensor_id: String,
    values: Vec<f64>,
    attack_intervals: Vec<AttackInterval>,
}

impl SensorSeries {
    pub fn new(sensor_id: impl Into<String>, values: Vec<f64>) -> Self {
        SensorSeries { sensor_id: sensor_id.into(), values, attack_intervals: Vec::new() }
    }

    /// Attach an attack label. Intervals must be in-range and pairwise disjoint.
    pub fn add_attack_interval(&mut self, interval: AttackInterval) -> Result<()> {
        if interval.is_empty() || interval.end > self.values.len() {
            return Err(Error::parameter(format!(
                "attack interval [{}, {}) out of range for series of length {}",
                interval.start,
                interval.end,
                self.values.len()
            )));
        }
        for existing in &self.attack_intervals {
            if interval.start < existing.end && existing.start < interval.end {
                return Err(Error::data(format!(
                    "attack interval [{}, {}) overlaps existing [{}, {})",
                    interval.start, interval.end, existing.start, existing.end
                )));
            }
        }
        self.attack_intervals.push(interval);
        self.attack_intervals.sort_by_key(|iv| iv.start);
        Ok(())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn attack_intervals(&self) -> &[AttackInterval] {
        &self.attack_intervals
    }

    pub fn measurement(&self, index: usize) -> Measurement {
        Measurement { timestamp_index: index, value: self.values[index] }
    }

    pub fn measurements(&self) -> impl Iterator<Item = Measurement> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(|(i, &v)| Measurement { timestamp_index: i, value: v })
    }

    pub fn is_attack(&self, index: usize) -> bool {
        self.attack_intervals.iter().any(|iv| iv.contains(index))
    }

    /// Per-sample ground-truth flags (true = under attack).
    pub fn truth_flags(&self) -> Vec<bool> {
        let mut flags = vec![false; self.values.len()];
        for iv in &self.attack_intervals {
            for f in &mut flags[iv.start..iv.end] {
                *f = true;
            }
        }
        flags
    }
}

/// Train/validation lengths for a series split.
///
/// `train_len` is N, `train_len + validation_len` is N'. The combined window
/// `[0, N')` must be attack-free.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSpec {
    pub train_len: usize,
    pub validation_len: usize,
}

impl SplitSpec {
    pub fn new(train_len: usize, validation_len: usize) -> Result<Self> {
        if train_len == 0 {
            return Err(Error::parameter("train_len must be positive"));
        }
        Ok(SplitSpec { train_len, validation_len })
    }

    /// N' = train_len + validation_len.
    pub fn combined_len(&self) -> usize {
        self.train_len + self.validation_len
    }
}

/// Split a series into non-copying train/validation/test views.
///
/// train = `[0, N)`, validation = `[N, N')`, test = `[N', len)`.
pub fn split<'a>(
    series: &'a SensorSeries,
    spec: &SplitSpec,
) -> Result<(&'a [f64], &'a [f64], &'a [f64])> {
    let n = spec.train_len;
    let n_prime = spec.combined_len();
    if n_prime > series.len() {
        return Err(Error::parameter(format!(
            "split window N' = {} exceeds series length {}",
            n_prime,
            series.len()
        )));
    }
    for iv in series.attack_intervals() {
        if iv.start < n_prime {
            return Err(Error::data(format!(
                "attack in training window: interval [{}, {}) overlaps [0, {})",
                iv.start, iv.end, n_prime
            )));
        }
    }
    let values = series.values();
    Ok((&values[..n], &values[n..n_prime], &values[n_prime..]))
}

/// A set of sensor series sharing one timeline and plant-wide attack windows.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    /// Raw timestamp strings from the source file, retained for reports only.
    pub timestamps: Vec<String>,
    pub series: Vec<SensorSeries>,
}

impl Dataset {
    /// Validates that all member series have equal length and identical
    /// attack windows (label text may differ per series).
    pub fn new(name: impl Into<String>, timestamps: Vec<String>, series: Vec<SensorSeries>) -> Result<Self> {
        let name = name.into();
        if let Some(first) = series.first() {
            let len = first.len();
            let ranges: Vec<(usize, usize)> =
                first.attack_intervals().iter().map(|iv| (iv.start, iv.end)).collect();
            for s in &series[1..] {
                if s.len() != len {
                    return Err(Error::data(format!(
                        "series '{}' has length {} but '{}' has {}",
                        s.sensor_id,
                        s.len(),
                        first.sensor_id,
                        len
                    )));
                }
                let other: Vec<(usize, usize)> =
                    s.attack_intervals().iter().map(|iv| (iv.start, iv.end)).collect();
                if other != ranges {
                    return Err(Error::data(format!(
                        "series '{}' has attack windows differing from '{}'",
                        s.sensor_id, first.sensor_id
                    )));
                }
            }
            if !timestamps.is_empty() && timestamps.len() != len {
                return Err(Error::data(format!(
                    "{} timestamps for series of length {}",
                    timestamps.len(),
                    len
                )));
            }
        }
        Ok(Dataset { name, timestamps, series })
    }

    pub fn len(&self) -> usize {
        self.series.first().map_or(0, |s| s.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sensor_ids(&self) -> Vec<String> {
        self.series.iter().map(|s| s.sensor_id.clone()).collect()
    }

    pub fn sensor(&self, id: &str) -> Option<&SensorSeries> {
        self.series.iter().find(|s| s.sensor_id == id)
    }

    /// Restrict to a subset of sensors, preserving dataset order.
    pub fn select(&self, ids: &[String]) -> Result<Dataset> {
        let wanted: BTreeSet<&str> = ids.iter().map(|s| s.as_str()).collect();
        let have: BTreeSet<&str> = self.series.iter().map(|s| s.sensor_id.as_str()).collect();
        let missing: Vec<&str> = wanted.difference(&have).copied().collect();
        if !missing.is_empty() {
            return Err(Error::data(format!("unknown sensors: {}", missing.join(", "))));
        }
        let series = self
            .series
            .iter()
            .filter(|s| wanted.contains(s.sensor_id.as_str()))
            .cloned()
            .collect();
        Dataset::new(self.name.clone(), self.timestamps.clone(), series)
    }

    /// Plant-wide truth flags (attack windows are shared across series).
    pub fn truth_flags(&self) -> Vec<bool> {
        self.series.first().map_or_else(Vec::new, |s| s.truth_flags())
    }

    pub fn attack_intervals(&self) -> &[AttackInterval] {
        self.series.first().map_or(&[], |s| s.attack_intervals())
    }
}

/// Column layout of a dataset CSV file.
#[derive(Debug, Clone)]
pub struct CsvSchema {
    /// Name of the timestamp column (kept for reports, ignored for math).
    pub timestamp_col: String,
    /// Sensor columns to load; `None` loads every non-timestamp, non-flag column.
    pub sensor_cols: Option<Vec<String>>,
    /// Attack-flag column; absent from the file means an all-normal dataset.
    pub attack_flag_col: String,
}

impl CsvSchema {
    pub fn auto(timestamp_col: impl Into<String>) -> Self {
        CsvSchema {
            timestamp_col: timestamp_col.into(),
            sensor_cols: None,
            attack_flag_col: ATTACK_FLAG_COL.to_string(),
        }
    }
}

/// Load a dataset from CSV.
///
/// The first row is a header. One series is produced per sensor column, and
/// attack intervals are reconstructed as maximal runs of flag = 1. Flags other
/// than exactly 0 or 1 (e.g. the -999 placeholders some distributions carry)
/// are rejected; such files need pre-cleaning.
pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Dataset> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Error::data(format!("{}: {}", path.display(), e)))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::data(format!("{}: bad header: {}", path.display(), e)))?
        .clone();

    let col = |name: &str| headers.iter().position(|h| h == name);
    let ts_idx = col(&schema.timestamp_col).ok_or_else(|| {
        Error::data(format!("{}: missing timestamp column '{}'", path.display(), schema.timestamp_col))
    })?;
    let flag_idx = col(&schema.attack_flag_col);

    let sensor_cols: Vec<(usize, String)> = match &schema.sensor_cols {
        Some(names) => {
            let mut cols = Vec::with_capacity(names.len());
            for name in names {
                let idx = col(name).ok_or_else(|| {
                    Error::data(format!("{}: missing sensor column '{}'", path.display(), name))
                })?;
                cols.push((idx, name.clone()));
            }
            cols
        }
        None => headers
            .iter()
            .enumerate()
            .filter(|(i, h)| *i != ts_idx && Some(*i) != flag_idx && !h.is_empty())
            .map(|(i, h)| (i, h.to_string()))
            .collect(),
    };
    if sensor_cols.is_empty() {
        return Err(Error::data(format!("{}: no sensor columns", path.display())));
    }

    let mut timestamps = Vec::new();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); sensor_cols.len()];
    let mut flags: Vec<bool> = Vec::new();

    for (row_num, record) in reader.records().enumerate() {
        let record =
            record.map_err(|e| Error::data(format!("{}: row {}: {}", path.display(), row_num + 1, e)))?;
        timestamps.push(record.get(ts_idx).unwrap_or("").trim().to_string());
        for (slot, (idx, name)) in columns.iter_mut().zip(&sensor_cols) {
            let cell = record.get(*idx).unwrap_or("").trim();
            let value: f64 = cell.parse().map_err(|_| {
                Error::data(format!(
                    "{}: row {}: non-numeric value '{}' in column '{}'",
                    path.display(),
                    row_num + 1,
                    cell,
                    name
                ))
            })?;
            if !value.is_finite() {
                return Err(Error::data(format!(
                    "{}: row {}: non-finite value in column '{}'",
                    path.display(),
                    row_num + 1,
                    name
                )));
            }
            slot.push(value);
        }
        if let Some(fi) = flag_idx {
            let cell = record.get(fi).unwrap_or("").trim();
            let value: f64 = cell.parse().map_err(|_| {
                Error::data(format!(
                    "{}: row {}: non-numeric attack flag '{}'",
                    path.display(),
                    row_num + 1,
                    cell
                ))
            })?;
            if value != 0.0 && value != 1.0 {
                return Err(Error::data(format!(
                    "{}: row {}: attack flag must be 0 or 1, got {}",
                    path.display(),
                    row_num + 1,
                    value
                )));
            }
            flags.push(value == 1.0);
        }
    }

    if timestamps.is_empty() {
        return Err(Error::data(format!("{}: no rows", path.display())));
    }

    let intervals = flag_runs(&flags);
    let mut series = Vec::with_capacity(sensor_cols.len());
    for (values, (_, name)) in columns.into_iter().zip(&sensor_cols) {
        let mut s = SensorSeries::new(name.clone(), values);
        for &(start, end) in &intervals {
            s.add_attack_interval(AttackInterval::new(start, end, "attack"))?;
        }
        series.push(s);
    }

    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("dataset").to_string();
    Dataset::new(name, timestamps, series)
}

/// Maximal runs of `true` as half-open `(start, end)` ranges.
fn flag_runs(flags: &[bool]) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut start = None;
    for (i, &f) in flags.iter().enumerate() {
        match (f, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                runs.push((s, i));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push((s, flags.len()));
    }
    runs
}

/// Write a dataset in the same schema `load_csv` reads.
///
/// Values are written with the shortest decimal representation that parses
/// back to the identical f64, so a write/load round trip is bit-exact.
pub fn write_csv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);

    write!(out, "TIMESTAMP")?;
    for s in &dataset.series {
        write!(out, ",{}", s.sensor_id)?;
    }
    writeln!(out, ",{}", ATTACK_FLAG_COL)?;

    let flags = dataset.truth_flags();
    for row in 0..dataset.len() {
        let ts = dataset.timestamps.get(row).cloned().unwrap_or_else(|| row.to_string());
        write!(out, "{}", ts)?;
        for s in &dataset.series {
            write!(out, ",{}", s.values()[row])?;
        }
        writeln!(out, ",{}", if flags[row] { 1 } else { 0 })?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        use std::io::Write;
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn flag_runs_reconstruct_intervals() {
        let csv = "TS,s1,ATT_FLAG\n0,1.0,0\n1,2.0,0\n2,3.0,1\n3,4.0,1\n4,5.0,0\n";
        let f = write_temp(csv);
        let ds = load_csv(f.path(), &CsvSchema::auto("TS")).unwrap();
        assert_eq!(ds.series.len(), 1);
        let ivs = ds.series[0].attack_intervals();
        assert_eq!(ivs.len(), 1);
        assert_eq!((ivs[0].start, ivs[0].end), (2, 4));
    }

    #[test]
    fn empty_file_is_an_error() {
        let f = write_temp("TS,s1,ATT_FLAG\n");
        let err = load_csv(f.path(), &CsvSchema::auto("TS")).unwrap_err();
        assert!(err.to_string().contains("no rows"), "{err}");
    }

    #[test]
    fn missing_flag_column_means_all_normal() {
        let f = write_temp("TS,s1\n0,1.5\n1,2.5\n");
        let ds = load_csv(f.path(), &CsvSchema::auto("TS")).unwrap();
        assert!(ds.series[0].attack_intervals().is_empty());
        assert_eq!(ds.series[0].values(), &[1.5, 2.5]);
    }

    #[test]
    fn non_numeric_cell_names_column_and_row() {
        let f = write_temp("TS,s1,s2,ATT_FLAG\n0,1.0,2.0,0\n1,oops,2.0,0\n");
        let err = load_csv(f.path(), &CsvSchema::auto("TS")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("row 2") && msg.contains("'s1'"), "{msg}");
    }

    #[test]
    fn odd_flag_values_are_rejected() {
        let f = write_temp("TS,s1,ATT_FLAG\n0,1.0,-999\n");
        let err = load_csv(f.path(), &CsvSchema::auto("TS")).unwrap_err();
        assert!(err.to_string().contains("attack flag"), "{err}");
    }

    #[test]
    fn split_matches_stated_windows() {
        let series = SensorSeries::new("s", (0..4800).map(|i| i as f64).collect());
        let spec = SplitSpec::new(2400, 1600).unwrap();
        let (train, val, test) = split(&series, &spec).unwrap();
        assert_eq!(train.len(), 2400);
        assert_eq!(val.len(), 1600);
        assert_eq!(test.len(), 800);
        assert_eq!(train[0], 0.0);
        assert_eq!(val[0], 2400.0);
        assert_eq!(test[0], 4000.0);
    }

    #[test]
    fn split_with_no_validation_gives_empty_view() {
        let series = SensorSeries::new("s", vec![1.0; 100]);
        let spec = SplitSpec::new(80, 0).unwrap();
        let (train, val, test) = split(&series, &spec).unwrap();
        assert_eq!((train.len(), val.len(), test.len()), (80, 0, 20));
    }

    #[test]
    fn split_beyond_series_length_is_rejected() {
        let series = SensorSeries::new("s", vec![1.0; 100]);
        let spec = SplitSpec::new(80, 40).unwrap();
        assert!(split(&series, &spec).is_err());
    }

    #[test]
    fn split_rejects_attack_in_training_window() {
        let mut series = SensorSeries::new("s", vec![1.0; 100]);
        series.add_attack_interval(AttackInterval::new(50, 60, "attack")).unwrap();
        let spec = SplitSpec::new(40, 20).unwrap();
        let err = split(&series, &spec).unwrap_err();
        assert!(err.to_string().contains("attack in training window"), "{err}");
    }

    #[test]
    fn dataset_rejects_mismatched_attack_windows() {
        let mut a = SensorSeries::new("a", vec![0.0; 10]);
        a.add_attack_interval(AttackInterval::new(2, 4, "attack")).unwrap();
        let b = SensorSeries::new("b", vec![0.0; 10]);
        assert!(Dataset::new("d", Vec::new(), vec![a, b]).is_err());
    }

    #[test]
    fn overlapping_attack_intervals_are_rejected() {
        let mut s = SensorSeries::new("s", vec![0.0; 10]);
        s.add_attack_interval(AttackInterval::new(2, 6, "x")).unwrap();
        assert!(s.add_attack_interval(AttackInterval::new(5, 8, "y")).is_err());
    }

    proptest! {
        // Split views tile the series exactly.
        #[test]
        fn split_views_tile_the_series(len in 3usize..200, n in 1usize..100, v in 0usize..100) {
            prop_assume!(n + v <= len);
            let series = SensorSeries::new("s", vec![0.5; len]);
            let spec = SplitSpec::new(n, v).unwrap();
            let (train, val, test) = split(&series, &spec).unwrap();
            prop_assert_eq!(train.len() + val.len() + test.len(), len);
        }

        // CSV write/load round trip reproduces values bit-exactly.
        #[test]
        fn csv_round_trip_is_bit_exact(values in proptest::collection::vec(-1e12f64..1e12, 1..40)) {
            let series = SensorSeries::new("s1", values.clone());
            let ds = Dataset::new("rt", Vec::new(), vec![series]).unwrap();
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("rt.csv");
            write_csv(&ds, &path).unwrap();
            let loaded = load_csv(&path, &CsvSchema::auto("TIMESTAMP")).unwrap();
            let got = loaded.series[0].values();
            prop_assert_eq!(got.len(), values.len());
            for (a, b) in got.iter().zip(&values) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }
}
