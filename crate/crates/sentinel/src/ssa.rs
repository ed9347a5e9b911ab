//! Signal-subspace front end: Hankel trajectory embedding, lagged covariance,
//! symmetric eigendecomposition, and the projection basis.
//!
//! A training series is embedded into an L x K Hankel matrix whose columns are
//! consecutive L-length windows. The eigenvectors of the (unnormalized) lagged
//! covariance M*M^T span the deterministic structure of the series; keeping
//! the R leading ones gives a projection basis that discards noise.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Iteration cap for the symmetric eigensolver.
const EIGH_MAX_ITERATIONS: usize = 20_000;

/// L x K Hankel matrix of lagged windows: column j is `values[j..j+L]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryMatrix {
    lag: usize,
    data: DMatrix<f64>,
}

impl TrajectoryMatrix {
    pub fn lag(&self) -> usize {
        self.lag
    }

    /// Number of lagged windows, K = N - L + 1.
    pub fn columns(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }
}

/// Embed a series into its trajectory matrix. Requires 1 < L < N/2.
pub fn embed(values: &[f64], lag: usize) -> Result<TrajectoryMatrix> {
    let n = values.len();
    if lag <= 1 || 2 * lag >= n {
        return Err(Error::parameter(format!(
            "lag must satisfy 1 < L < N/2 (got L = {lag}, N = {n})"
        )));
    }
    let k = n - lag + 1;
    let data = DMatrix::from_fn(lag, k, |i, j| values[j + i]);
    Ok(TrajectoryMatrix { lag, data })
}

/// Unnormalized lagged covariance M*M^T (L x L, symmetric PSD).
pub fn lagged_covariance(m: &TrajectoryMatrix) -> DMatrix<f64> {
    m.data() * m.data().transpose()
}

/// One eigenvalue with its unit-norm eigenvector.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub eigenvalue: f64,
    pub eigenvector: DVector<f64>,
}

/// Full spectrum of a symmetric matrix, sorted by non-increasing eigenvalue.
///
/// Eigenvector signs are normalized so the largest-magnitude component of
/// each vector is positive; this removes the solver's sign nondeterminism and
/// makes trained models reproducible byte-for-byte.
pub fn eigh(s: &DMatrix<f64>) -> Result<Vec<EigenPair>> {
    if !s.is_square() {
        return Err(Error::parameter(format!("matrix is {}x{}, not square", s.nrows(), s.ncols())));
    }
    let scale = s.amax();
    let mut asym = 0.0f64;
    for i in 0..s.nrows() {
        for j in (i + 1)..s.ncols() {
            asym = asym.max((s[(i, j)] - s[(j, i)]).abs());
        }
    }
    if asym > 1e-8 * scale.max(1e-300) {
        return Err(Error::parameter(format!(
            "matrix is not symmetric: max |S - S^T| = {asym:e} exceeds tolerance"
        )));
    }

    let decomp = nalgebra::SymmetricEigen::try_new(s.clone(), f64::EPSILON, EIGH_MAX_ITERATIONS)
        .ok_or_else(|| {
            Error::numerical(format!(
                "symmetric eigendecomposition did not converge within {EIGH_MAX_ITERATIONS} iterations"
            ))
        })?;

    let mut pairs: Vec<EigenPair> = decomp
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(i, &lambda)| {
            let mut v: DVector<f64> = decomp.eigenvectors.column(i).into_owned();
            fix_sign(&mut v);
            EigenPair { eigenvalue: lambda, eigenvector: v }
        })
        .collect();
    pairs.sort_by(|a, b| b.eigenvalue.total_cmp(&a.eigenvalue));
    Ok(pairs)
}

/// Make the largest-magnitude component positive (first one on ties).
fn fix_sign(v: &mut DVector<f64>) {
    let mut idx = 0;
    let mut best = f64::NEG_INFINITY;
    for (i, &x) in v.iter().enumerate() {
        if x.abs() > best {
            best = x.abs();
            idx = i;
        }
    }
    if v[idx] < 0.0 {
        v.neg_mut();
    }
}

/// Trained projection basis: the R leading eigenvectors of the lagged
/// covariance of a training series.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceModel {
    lag: usize,
    signal_dim: usize,
    /// L x R, orthonormal columns.
    basis: DMatrix<f64>,
    /// Full eigenvalue list, kept for diagnostics.
    spectrum: Vec<f64>,
}

impl SubspaceModel {
    /// Assemble a model from parts (used by deserialization); checks shapes only.
    pub fn from_parts(lag: usize, signal_dim: usize, basis: DMatrix<f64>, spectrum: Vec<f64>) -> Result<Self> {
        if basis.nrows() != lag || basis.ncols() != signal_dim {
            return Err(Error::parameter(format!(
                "basis is {}x{}, expected {}x{}",
                basis.nrows(),
                basis.ncols(),
                lag,
                signal_dim
            )));
        }
        if signal_dim == 0 || signal_dim > lag {
            return Err(Error::parameter("signal_dim must satisfy 1 <= R <= L"));
        }
        Ok(SubspaceModel { lag, signal_dim, basis, spectrum })
    }

    pub fn lag(&self) -> usize {
        self.lag
    }

    pub fn signal_dim(&self) -> usize {
        self.signal_dim
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    /// Fraction of total spectral mass captured by the R leading eigenvalues.
    pub fn capture_ratio(&self) -> f64 {
        let total: f64 = self.spectrum.iter().sum();
        if total <= 0.0 {
            return 0.0;
        }
        self.spectrum.iter().take(self.signal_dim).sum::<f64>() / total
    }

    /// Project an L-length lagged vector into signal space (U^T * v).
    pub fn project(&self, lagged: &DVector<f64>) -> Result<DVector<f64>> {
        if lagged.len() != self.lag {
            return Err(Error::parameter(format!(
                "lagged vector has length {}, expected {}",
                lagged.len(),
                self.lag
            )));
        }
        Ok(self.basis.tr_mul(lagged))
    }

    /// Project a window given as a slice.
    pub fn project_window(&self, window: &[f64]) -> Result<DVector<f64>> {
        if window.len() != self.lag {
            return Err(Error::parameter(format!(
                "window has length {}, expected {}",
                window.len(),
                self.lag
            )));
        }
        Ok(self.basis.tr_mul(&DVector::from_column_slice(window)))
    }
}

/// Fit the subspace: embed, form M*M^T, decompose, keep R leading eigenvectors.
pub fn fit_subspace(values: &[f64], lag: usize, signal_dim: usize) -> Result<SubspaceModel> {
    if signal_dim == 0 || signal_dim > lag {
        return Err(Error::parameter(format!(
            "signal_dim must satisfy 1 <= R <= L (got R = {signal_dim}, L = {lag})"
        )));
    }
    let trajectory = embed(values, lag)?;
    let cov = lagged_covariance(&trajectory);
    let pairs = eigh(&cov)?;
    let spectrum: Vec<f64> = pairs.iter().map(|p| p.eigenvalue).collect();
    let basis = DMatrix::from_fn(lag, signal_dim, |i, j| pairs[j].eigenvector[i]);
    Ok(SubspaceModel { lag, signal_dim, basis, spectrum })
}
