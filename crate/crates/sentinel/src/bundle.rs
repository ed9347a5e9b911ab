//! Versioned on-disk format for trained per-sensor models.
//!
//! A bundle is a directory with one `<sensor>.model` file per sensor plus a
//! `manifest.txt`. Model files are line-oriented text: floats are written in
//! the shortest form that parses back to the identical bits, so save/load is
//! exact and output is byte-deterministic.
//!
//! ```text
//! sentinel-model v1
//! sensor <id>
//! lag <L>
//! signal-dim <R>
//! spectrum <L eigenvalues>
//! basis-row <R entries>          (L lines, row-major)
//! sphere <R centroid entries> <radius_sq>            (optional)
//! ellipsoid <R centroid entries> <R weights> <epsilon>  (optional)
//! end
//! ```

use crate::boundary::{EllipsoidBoundary, SphereBoundary};
use crate::error::{Error, Result};
use crate::ssa::SubspaceModel;
use nalgebra::{DMatrix, DVector};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

const FORMAT_HEADER: &str = "sentinel-model v1";
const MANIFEST_HEADER: &str = "sentinel-bundle v1";

/// Everything trained for one sensor.
#[derive(Debug, Clone)]
pub struct SensorModel {
    pub sensor_id: String,
    pub model: SubspaceModel,
    pub sphere: Option<SphereBoundary>,
    pub ellipsoid: Option<EllipsoidBoundary>,
}

impl SensorModel {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{FORMAT_HEADER}");
        let _ = writeln!(out, "sensor {}", self.sensor_id);
        let _ = writeln!(out, "lag {}", self.model.lag());
        let _ = writeln!(out, "signal-dim {}", self.model.signal_dim());
        let _ = write!(out, "spectrum");
        for v in self.model.spectrum() {
            let _ = write!(out, " {v}");
        }
        let _ = writeln!(out);
        let basis = self.model.basis();
        for i in 0..basis.nrows() {
            let _ = write!(out, "basis-row");
            for j in 0..basis.ncols() {
                let _ = write!(out, " {}", basis[(i, j)]);
            }
            let _ = writeln!(out);
        }
        if let Some(s) = &self.sphere {
            let _ = write!(out, "sphere");
            for v in s.centroid.iter() {
                let _ = write!(out, " {v}");
            }
            let _ = writeln!(out, " {}", s.radius_sq);
        }
        if let Some(e) = &self.ellipsoid {
            let _ = write!(out, "ellipsoid");
            for v in e.centroid.iter() {
                let _ = write!(out, " {v}");
            }
            for v in e.weights.iter() {
                let _ = write!(out, " {v}");
            }
            let _ = writeln!(out, " {}", e.epsilon);
        }
        let _ = writeln!(out, "end");
        out
    }

    pub fn from_text(text: &str) -> Result<SensorModel> {
        let mut lines = text.lines();
        let header = lines.next().unwrap_or("");
        if header != FORMAT_HEADER {
            return Err(Error::data(format!("unsupported model header '{header}'")));
        }

        let mut sensor_id = None;
        let mut lag = None;
        let mut signal_dim = None;
        let mut spectrum: Vec<f64> = Vec::new();
        let mut basis_rows: Vec<Vec<f64>> = Vec::new();
        let mut sphere = None;
        let mut ellipsoid = None;

        let parse_floats = |parts: &[&str]| -> Result<Vec<f64>> {
            parts
                .iter()
                .map(|p| p.parse::<f64>().map_err(|_| Error::data(format!("bad float '{p}' in model file"))))
                .collect()
        };

        for line in lines {
            let mut parts = line.split_whitespace();
            let Some(tag) = parts.next() else { continue };
            let rest: Vec<&str> = parts.collect();
            match tag {
                "sensor" => sensor_id = Some(rest.join(" ")),
                "lag" => {
                    lag = Some(
                        rest.first()
                            .and_then(|v| v.parse::<usize>().ok())
                            .ok_or_else(|| Error::data("bad lag line"))?,
                    )
                }
                "signal-dim" => {
                    signal_dim = Some(
                        rest.first()
                            .and_then(|v| v.parse::<usize>().ok())
                            .ok_or_else(|| Error::data("bad signal-dim line"))?,
                    )
                }
                "spectrum" => spectrum = parse_floats(&rest)?,
                "basis-row" => basis_rows.push(parse_floats(&rest)?),
                "sphere" => {
                    let vals = parse_floats(&rest)?;
                    let dim = signal_dim.ok_or_else(|| Error::data("sphere before signal-dim"))?;
                    if vals.len() != dim + 1 {
                        return Err(Error::data("sphere line has wrong arity"));
                    }
                    sphere = Some(SphereBoundary {
                        centroid: DVector::from_column_slice(&vals[..dim]),
                        radius_sq: vals[dim],
                    });
                }
                "ellipsoid" => {
                    let vals = parse_floats(&rest)?;
                    let dim = signal_dim.ok_or_else(|| Error::data("ellipsoid before signal-dim"))?;
                    if vals.len() != 2 * dim + 1 {
                        return Err(Error::data("ellipsoid line has wrong arity"));
                    }
                    ellipsoid = Some(EllipsoidBoundary::from_parts(
                        DVector::from_column_slice(&vals[..dim]),
                        DVector::from_column_slice(&vals[dim..2 * dim]),
                        vals[2 * dim],
                    )?);
                }
                "end" => break,
                other => return Err(Error::data(format!("unknown model line '{other}'"))),
            }
        }

        let sensor_id = sensor_id.ok_or_else(|| Error::data("model file missing sensor id"))?;
        let lag = lag.ok_or_else(|| Error::data("model file missing lag"))?;
        let signal_dim = signal_dim.ok_or_else(|| Error::data("model file missing signal-dim"))?;
        if basis_rows.len() != lag {
            return Err(Error::data(format!(
                "model file has {} basis rows, expected {lag}",
                basis_rows.len()
            )));
        }
        if basis_rows.iter().any(|r| r.len() != signal_dim) {
            return Err(Error::data("basis row arity does not match signal-dim"));
        }
        let basis = DMatrix::from_fn(lag, signal_dim, |i, j| basis_rows[i][j]);
        let model = SubspaceModel::from_parts(lag, signal_dim, basis, spectrum)?;
        Ok(SensorModel { sensor_id, model, sphere, ellipsoid })
    }
}

fn model_path(dir: &Path, sensor_id: &str) -> PathBuf {
    dir.join(format!("{sensor_id}.model"))
}

/// Write a bundle directory: one model file per sensor plus a manifest.
pub fn save_bundle(dir: impl AsRef<Path>, models: &[SensorModel]) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let mut manifest = String::new();
    let _ = writeln!(manifest, "{MANIFEST_HEADER}");
    for m in models {
        std::fs::write(model_path(dir, &m.sensor_id), m.to_text())?;
        let _ = writeln!(manifest, "sensor {}", m.sensor_id);
    }
    std::fs::write(dir.join("manifest.txt"), manifest)?;
    Ok(())
}

/// Load a bundle directory in manifest order.
pub fn load_bundle(dir: impl AsRef<Path>) -> Result<Vec<SensorModel>> {
    let dir = dir.as_ref();
    let manifest = std::fs::read_to_string(dir.join("manifest.txt"))
        .map_err(|e| Error::data(format!("{}: missing manifest: {e}", dir.display())))?;
    let mut lines = manifest.lines();
    let header = lines.next().unwrap_or("");
    if header != MANIFEST_HEADER {
        return Err(Error::data(format!("unsupported bundle header '{header}'")));
    }
    let mut models = Vec::new();
    for line in lines {
        if let Some(sensor_id) = line.strip_prefix("sensor ") {
            let path = model_path(dir, sensor_id);
            let text = std::fs::read_to_string(&path)
                .map_err(|e| Error::data(format!("{}: {e}", path.display())))?;
            models.push(SensorModel::from_text(&text)?);
        }
    }
    Ok(models)
}
