//! Decision-boundary learning in signal space.
//!
//! Two boundary shapes enclose the cloud of projected normal windows: a
//! sphere around the projected training mean whose squared radius is the
//! largest observed departure, and a minimum-volume axis-aligned ellipsoid
//! around the per-dimension midrange. The ellipsoid weights solve
//!
//! ```text
//! maximize   sum_i log w_i
//! subject to a_j . w <= 1  for every cloud point j,  w > 0
//! ```
//!
//! where `a_j` is the element-wise squared deviation of point j from the
//! centroid. Minimizing the product of semi-axis lengths `prod_i w_i^(-1/2)`
//! is the same problem. The solver is a log-barrier interior-point method
//! with damped Newton centering; the `w > 0` constraint is enforced by the
//! objective itself.

use crate::error::{Error, Result};
use crate::ssa::SubspaceModel;
use nalgebra::{DMatrix, DVector};
use std::collections::HashSet;

/// Relative floor for the semi-axis of a dimension with zero range in the
/// cloud. An unbounded weight would alarm on any infinitesimal deviation,
/// which is the intended meaning but numerically explosive; the floor keeps
/// extreme sensitivity while keeping scores finite.
const DEGENERATE_AXIS_REL: f64 = 1e-6;
const DEGENERATE_AXIS_ABS: f64 = 1e-12;

/// Projections of the attack-free training + validation windows (R x K').
#[derive(Debug, Clone, PartialEq)]
pub struct SignalCloud {
    points: DMatrix<f64>,
}

impl SignalCloud {
    pub fn new(points: DMatrix<f64>) -> Result<Self> {
        if points.ncols() == 0 || points.nrows() == 0 {
            return Err(Error::parameter("signal cloud must contain at least one point"));
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(Error::data("signal cloud contains non-finite values"));
        }
        Ok(SignalCloud { points })
    }

    pub fn signal_dim(&self) -> usize {
        self.points.nrows()
    }

    /// Number of cloud points, K' = N' - L + 1.
    pub fn len(&self) -> usize {
        self.points.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.points.ncols() == 0
    }

    pub fn points(&self) -> &DMatrix<f64> {
        &self.points
    }

    pub fn column(&self, j: usize) -> DVector<f64> {
        self.points.column(j).into_owned()
    }

    /// Mean of the first `cols` columns; the spherical boundary centers on
    /// the mean of the training portion only.
    pub fn column_mean(&self, cols: usize) -> Result<DVector<f64>> {
        if cols == 0 || cols > self.len() {
            return Err(Error::parameter(format!(
                "mean over {} columns requested, cloud has {}",
                cols,
                self.len()
            )));
        }
        let mut mean = DVector::zeros(self.signal_dim());
        for j in 0..cols {
            mean += self.points.column(j);
        }
        Ok(mean / cols as f64)
    }
}

/// Project every lagged window of `values` into signal space.
pub fn collect_cloud(model: &SubspaceModel, values: &[f64]) -> Result<SignalCloud> {
    let lag = model.lag();
    if values.len() < lag {
        return Err(Error::parameter(format!(
            "window of length {} is shorter than lag {}",
            values.len(),
            lag
        )));
    }
    let k = values.len() - lag + 1;
    let dim = model.signal_dim();
    let mut points = DMatrix::zeros(dim, k);
    for j in 0..k {
        // Same code path the online detector uses, so replayed departures
        // reproduce training departures bit for bit.
        let x = model.project_window(&values[j..j + lag])?;
        points.set_column(j, &x);
    }
    SignalCloud::new(points)
}

/// Per-dimension midpoint of the cloud's range, (min + max) / 2.
pub fn midrange_centroid(cloud: &SignalCloud) -> DVector<f64> {
    let dim = cloud.signal_dim();
    let mut lo = DVector::from_element(dim, f64::INFINITY);
    let mut hi = DVector::from_element(dim, f64::NEG_INFINITY);
    for j in 0..cloud.len() {
        let col = cloud.points().column(j);
        for i in 0..dim {
            lo[i] = lo[i].min(col[i]);
            hi[i] = hi[i].max(col[i]);
        }
    }
    (lo + hi) / 2.0
}

/// Element-wise squared deviation from the centroid.
pub fn center_square(x: &DVector<f64>, centroid: &DVector<f64>) -> Result<DVector<f64>> {
    if x.len() != centroid.len() {
        return Err(Error::parameter(format!(
            "vector length {} does not match centroid length {}",
            x.len(),
            centroid.len()
        )));
    }
    Ok(DVector::from_fn(x.len(), |i, _| {
        let d = x[i] - centroid[i];
        d * d
    }))
}

/// Threshold with slack, theta = 1 + epsilon.
pub fn slack_threshold(epsilon: f64) -> Result<f64> {
    if !(epsilon >= 0.0) {
        return Err(Error::parameter(format!("slack must be non-negative, got {epsilon}")));
    }
    Ok(1.0 + epsilon)
}

/// Spherical decision boundary: centroid plus squared radius.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereBoundary {
    pub centroid: DVector<f64>,
    pub radius_sq: f64,
}

impl SphereBoundary {
    /// Squared Euclidean departure from the centroid. Alarm when > threshold.
    pub fn score(&self, x: &DVector<f64>) -> Result<f64> {
        if x.len() != self.centroid.len() {
            return Err(Error::parameter(format!(
                "point length {} does not match centroid length {}",
                x.len(),
                self.centroid.len()
            )));
        }
        Ok((&self.centroid - x).norm_squared())
    }

    pub fn threshold(&self) -> f64 {
        self.radius_sq
    }
}

/// Radius squared is the maximum departure over the whole cloud, so the
/// boundary is tight: at least one point attains it.
pub fn fit_sphere(cloud: &SignalCloud, centroid: &DVector<f64>) -> Result<SphereBoundary> {
    if centroid.len() != cloud.signal_dim() {
        return Err(Error::parameter("centroid dimension does not match cloud"));
    }
    let boundary = SphereBoundary { centroid: centroid.clone(), radius_sq: 0.0 };
    let mut radius_sq = 0.0f64;
    for j in 0..cloud.len() {
        let d = boundary.score(&cloud.column(j))?;
        radius_sq = radius_sq.max(d);
    }
    Ok(SphereBoundary { centroid: centroid.clone(), radius_sq })
}

/// Axis-aligned ellipsoid boundary: per-dimension weights are the inverse
/// squared semi-axis lengths, threshold is 1 + epsilon.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipsoidBoundary {
    pub centroid: DVector<f64>,
    pub weights: DVector<f64>,
    pub epsilon: f64,
}

impl EllipsoidBoundary {
    pub fn from_parts(centroid: DVector<f64>, weights: DVector<f64>, epsilon: f64) -> Result<Self> {
        if centroid.len() != weights.len() {
            return Err(Error::parameter("centroid and weights lengths differ"));
        }
        if weights.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::parameter("ellipsoid weights must be strictly positive"));
        }
        slack_threshold(epsilon)?;
        Ok(EllipsoidBoundary { centroid, weights, epsilon })
    }

    /// Fit on a cloud: midrange centroid, minimum-volume weights.
    pub fn fit(cloud: &SignalCloud, epsilon: f64, options: &FitOptions) -> Result<Self> {
        let centroid = midrange_centroid(cloud);
        let weights = fit_ellipsoid(cloud, &centroid, options)?;
        EllipsoidBoundary::from_parts(centroid, weights, epsilon)
    }

    /// Weighted squared departure w . (x - c)^2. Alarm when > threshold.
    pub fn score(&self, x: &DVector<f64>) -> Result<f64> {
        let sq = center_square(x, &self.centroid)?;
        Ok(self.weights.dot(&sq))
    }

    pub fn threshold(&self) -> f64 {
        1.0 + self.epsilon
    }

    /// Semi-axis length along dimension i, w_i^(-1/2).
    pub fn semi_axis(&self, i: usize) -> f64 {
        1.0 / self.weights[i].sqrt()
    }
}

/// Solver knobs for `fit_ellipsoid`.
#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    /// Duality-gap target; suboptimality of the returned weights is below this.
    pub tolerance: f64,
    /// Cap on total Newton iterations.
    pub max_iterations: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { tolerance: 1e-10, max_iterations: 100_000 }
    }
}

/// Fit diagnostics alongside the weights.
#[derive(Debug, Clone)]
pub struct EllipsoidFit {
    pub weights: DVector<f64>,
    /// Constraints within 1e-6 of active at the optimum.
    pub active_constraints: usize,
    /// Relative stationarity residual of the KKT system.
    pub kkt_residual: f64,
    pub iterations: usize,
}

/// Minimum-volume weights for the given centroid.
pub fn fit_ellipsoid(
    cloud: &SignalCloud,
    centroid: &DVector<f64>,
    options: &FitOptions,
) -> Result<DVector<f64>> {
    Ok(fit_ellipsoid_detailed(cloud, centroid, options)?.weights)
}

/// Full fit with diagnostics.
///
/// Dimensions are rescaled by their squared half-range before solving, which
/// conditions the Newton systems and makes the weights covariant under
/// per-axis scaling of the cloud. Identical constraint rows are deduplicated;
/// this cannot move the optimum.
pub fn fit_ellipsoid_detailed(
    cloud: &SignalCloud,
    centroid: &DVector<f64>,
    options: &FitOptions,
) -> Result<EllipsoidFit> {
    let dim = cloud.signal_dim();
    if centroid.len() != dim {
        return Err(Error::parameter("centroid dimension does not match cloud"));
    }

    // Squared deviations per point and per-dimension squared half-ranges.
    let mut ext2 = vec![0.0f64; dim];
    let mut raw_rows: Vec<Vec<f64>> = Vec::with_capacity(cloud.len());
    for j in 0..cloud.len() {
        let col = cloud.points().column(j);
        let mut row = Vec::with_capacity(dim);
        for i in 0..dim {
            let d = col[i] - centroid[i];
            let sq = d * d;
            if sq > ext2[i] {
                ext2[i] = sq;
            }
            row.push(sq);
        }
        raw_rows.push(row);
    }

    let scale = ext2.iter().fold(0.0f64, |acc, &e| acc.max(e.sqrt()));
    let floor_axis = (DEGENERATE_AXIS_REL * scale).max(DEGENERATE_AXIS_ABS);
    let floor_weight = 1.0 / (floor_axis * floor_axis);
    let active_dims: Vec<usize> = (0..dim).filter(|&i| ext2[i] > 0.0).collect();

    let mut weights = DVector::from_element(dim, floor_weight);
    if active_dims.is_empty() {
        // Every point sits exactly on the centroid.
        return Ok(EllipsoidFit { weights, active_constraints: 0, kkt_residual: 0.0, iterations: 0 });
    }

    // Normalized constraint rows over the non-degenerate dimensions; every
    // entry lands in [0, 1] with at least one 1 per dimension.
    let d = active_dims.len();
    let mut seen: HashSet<Vec<u64>> = HashSet::new();
    let mut rows: Vec<DVector<f64>> = Vec::new();
    for row in &raw_rows {
        let v = DVector::from_fn(d, |slot, _| row[active_dims[slot]] / ext2[active_dims[slot]]);
        if v.iter().all(|&x| x == 0.0) {
            continue;
        }
        let key: Vec<u64> = v.iter().map(|x| x.to_bits()).collect();
        if seen.insert(key) {
            rows.push(v);
        }
    }

    let (w_hat, t_final, iterations) = barrier_solve(&rows, d, options)?;

    // Diagnostics in the normalized space.
    let mut stationarity = DVector::from_fn(d, |i, _| 1.0 / w_hat[i]);
    let mut active = 0usize;
    for a in &rows {
        let s = 1.0 - a.dot(&w_hat);
        let lambda = 1.0 / (t_final * s);
        stationarity.axpy(-lambda, a, 1.0);
        if a.dot(&w_hat) >= 1.0 - 1e-6 {
            active += 1;
        }
    }
    let grad_scale = (0..d).map(|i| 1.0 / w_hat[i]).fold(0.0f64, f64::max);
    let kkt_residual = stationarity.amax() / grad_scale.max(1e-300);

    for (slot, &i) in active_dims.iter().enumerate() {
        weights[i] = w_hat[slot] / ext2[i];
    }

    // Feasibility postcondition on the raw constraints.
    let mut violation = 0.0f64;
    for row in &raw_rows {
        let dot: f64 = row.iter().zip(weights.iter()).map(|(a, w)| a * w).sum();
        violation = violation.max(dot - 1.0);
    }
    if violation > 1e-9 {
        return Err(Error::numerical(format!(
            "ellipsoid fit violates feasibility by {violation:.3e}"
        )));
    }

    Ok(EllipsoidFit { weights, active_constraints: active, kkt_residual, iterations })
}

/// Log-barrier interior point for max sum(log w) s.t. rows . w <= 1.
///
/// Returns the weights, the final barrier parameter (its reciprocal times the
/// slacks gives the KKT multipliers), and the Newton iteration count.
fn barrier_solve(
    rows: &[DVector<f64>],
    dim: usize,
    options: &FitOptions,
) -> Result<(DVector<f64>, f64, usize)> {
    let m = rows.len() as f64;
    // a_j . w0 <= (1 - 1e-3) because normalized entries are at most 1.
    let mut w = DVector::from_element(dim, (1.0 - 1e-3) / dim as f64);
    let mut t = 1.0f64;
    let mut iterations = 0usize;
    let gap_tol = options.tolerance.max(1e-14);

    let objective = |w: &DVector<f64>, t: f64| -> f64 {
        if w.iter().any(|&x| x <= 0.0) {
            return f64::NEG_INFINITY;
        }
        let mut f = t * w.iter().map(|x| x.ln()).sum::<f64>();
        for a in rows {
            let s = 1.0 - a.dot(w);
            if s <= 0.0 {
                return f64::NEG_INFINITY;
            }
            f += s.ln();
        }
        f
    };

    loop {
        // Damped Newton centering at the current barrier parameter.
        for _ in 0..200 {
            let mut slacks = Vec::with_capacity(rows.len());
            for a in rows {
                let s = 1.0 - a.dot(&w);
                if s <= 0.0 {
                    return Err(Error::numerical("barrier iterate left the feasible region"));
                }
                slacks.push(s);
            }

            let mut grad = DVector::from_fn(dim, |i, _| t / w[i]);
            let mut hess =
                DMatrix::from_fn(dim, dim, |i, j| if i == j { t / (w[i] * w[i]) } else { 0.0 });
            for (a, &s) in rows.iter().zip(&slacks) {
                let inv = 1.0 / s;
                grad.axpy(-inv, a, 1.0);
                hess.ger(inv * inv, a, a, 1.0);
            }

            let chol = match nalgebra::Cholesky::new(hess.clone()) {
                Some(c) => c,
                None => {
                    let ridge = 1e-12 * hess.trace().max(1e-300);
                    for i in 0..dim {
                        hess[(i, i)] += ridge;
                    }
                    nalgebra::Cholesky::new(hess)
                        .ok_or_else(|| Error::numerical("Newton system is not positive definite"))?
                }
            };
            let dir = chol.solve(&grad);
            let decrement_sq = grad.dot(&dir);
            if decrement_sq <= 2e-12 {
                break;
            }

            // Largest step that stays strictly feasible, then Armijo backtracking.
            let mut alpha = 1.0f64;
            for (a, &s) in rows.iter().zip(&slacks) {
                let ad = a.dot(&dir);
                if ad > 0.0 {
                    alpha = alpha.min(0.99 * s / ad);
                }
            }
            for i in 0..dim {
                if dir[i] < 0.0 {
                    alpha = alpha.min(0.99 * w[i] / -dir[i]);
                }
            }
            let f0 = objective(&w, t);
            let mut improved = false;
            for _ in 0..60 {
                let cand = &w + alpha * &dir;
                let f1 = objective(&cand, t);
                if f1 > f0 + 0.25 * alpha * decrement_sq {
                    w = cand;
                    improved = true;
                    break;
                }
                alpha *= 0.5;
            }

            iterations += 1;
            if iterations > options.max_iterations {
                let violation =
                    rows.iter().map(|a| a.dot(&w) - 1.0).fold(f64::NEG_INFINITY, f64::max).max(0.0);
                return Err(Error::numerical(format!(
                    "ellipsoid fit exceeded {} iterations (constraint violation {violation:.3e})",
                    options.max_iterations
                )));
            }
            if !improved {
                break; // stalled at float precision; centering is as good as it gets
            }
        }

        if m / t <= gap_tol {
            return Ok((w, t, iterations));
        }
        t *= 20.0;
    }
}
