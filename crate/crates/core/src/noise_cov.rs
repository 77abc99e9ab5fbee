//! Estimators of the diagonal noise covariance `Q` for a hypothesized number
//! of sources.
//!
//! Two estimators share the [`NoiseEstimator`] interface:
//!
//! * [`imlse_estimate`] alternates a rank-`q` maximum-likelihood fit of the
//!   signal factor `B` in the whitened domain with a diagonal update of `Q`,
//!   fitting `R = B Bᴴ + Q`.
//! * [`noniterative_estimate`] takes the noise subspace from a single
//!   eigendecomposition of the off-diagonal part of `R̂` and fits `Q` to it in
//!   closed form. It relies on the signal part having a constant diagonal,
//!   which holds for uncorrelated sources on a uniform linear array.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::array_model::{HermitianMatrix, NoiseDiag};
use crate::error::{Error, Result};
use crate::likelihood::{lprime_of_model, reconstruct_r_factored};
use crate::linalg::{self, c, CMatrix};

/// Output of a noise covariance estimator.
#[derive(Debug, Clone)]
pub struct NoiseEstimate {
    pub q_hat: NoiseDiag,
    /// Signal factor with `R ≈ B Bᴴ + Q`, when the estimator produces one.
    pub b_hat: Option<CMatrix>,
    pub iterations: usize,
    pub converged: bool,
    /// Concentrated objective `ln det(BBᴴ+Q) + tr[(BBᴴ+Q)⁻¹R̂]` after each
    /// iteration (iterative estimator only).
    pub objective_trace: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorOptions {
    pub max_iters: usize,
    /// Stop once the largest relative change of a noise power falls below this.
    pub rel_tol: f64,
    /// Noise powers are floored at `floor_ratio * tr(R̂) / M`.
    pub floor_ratio: f64,
    /// The noniterative estimator additionally keeps every noise power above
    /// this fraction of the smallest eigenvalue of `R̂`. With finite data a
    /// weak signal direction leaks into the estimated noise subspace, and
    /// without this clamp the quietest sensors can be driven to zero.
    pub min_eigen_ratio: f64,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        Self {
            max_iters: 50,
            rel_tol: 1e-6,
            floor_ratio: 1e-8,
            min_eigen_ratio: 0.1,
        }
    }
}

impl EstimatorOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::Config("rel_tol must be positive".into()));
        }
        if !(self.floor_ratio > 0.0 && self.floor_ratio <= 1e-3) {
            return Err(Error::Config("floor_ratio must lie in (0, 1e-3]".into()));
        }
        if !(0.0..=1.0).contains(&self.min_eigen_ratio) {
            return Err(Error::Config("min_eigen_ratio must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Selects one of the noise covariance estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Imlse,
    Noniterative,
}

impl EstimatorKind {
    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Imlse => "imlse",
            EstimatorKind::Noniterative => "noniterative",
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "imlse" => Ok(EstimatorKind::Imlse),
            "noniterative" | "noniter" => Ok(EstimatorKind::Noniterative),
            other => Err(Error::Config(format!("unknown noise estimator '{other}'"))),
        }
    }
}

/// Common interface of the noise covariance estimators.
pub trait NoiseEstimator {
    fn estimate(&self, r_hat: &HermitianMatrix, q: usize) -> Result<NoiseEstimate>;
}

/// An [`EstimatorKind`] bundled with its options.
#[derive(Debug, Clone, Copy)]
pub struct ConfiguredEstimator {
    pub kind: EstimatorKind,
    pub options: EstimatorOptions,
}

impl NoiseEstimator for ConfiguredEstimator {
    fn estimate(&self, r_hat: &HermitianMatrix, q: usize) -> Result<NoiseEstimate> {
        match self.kind {
            EstimatorKind::Imlse => imlse_estimate(r_hat, q, &self.options),
            EstimatorKind::Noniterative => noniterative_estimate(r_hat, q, &self.options),
        }
    }
}

fn check_input(r_hat: &HermitianMatrix, q: usize) -> Result<Vec<f64>> {
    let m = r_hat.dim();
    if q >= m {
        return Err(Error::Domain(format!(
            "cannot fit {q} sources with {m} sensors"
        )));
    }
    let diag = r_hat.diagonal_re();
    if let Some(d) = diag.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
        return Err(Error::Data(format!(
            "covariance diagonal entry {d} is not positive"
        )));
    }
    Ok(diag)
}

fn check_psd(eigenvalues: &[f64]) -> Result<()> {
    let max = eigenvalues.first().copied().unwrap_or(0.0);
    let min = eigenvalues.last().copied().unwrap_or(0.0);
    if min < -1e-10 * max.abs().max(f64::MIN_POSITIVE) {
        return Err(Error::Data(format!(
            "covariance is not positive semidefinite (min eigenvalue {min:.3e})"
        )));
    }
    Ok(())
}

fn floor_level(diag: &[f64], opts: &EstimatorOptions) -> f64 {
    opts.floor_ratio * diag.iter().sum::<f64>() / diag.len() as f64
}

/// Rank-`q` maximum-likelihood signal factor for fixed noise powers.
///
/// In the whitened domain the fit of `R̃ = B̃B̃ᴴ + I` keeps the leading
/// eigenpairs with eigenvalues shifted down by one.
fn ml_factor(r_hat: &HermitianMatrix, noise: &[f64], q: usize) -> CMatrix {
    let m = noise.len();
    let sqrt: Vec<f64> = noise.iter().map(|s| s.sqrt()).collect();
    let r = r_hat.as_matrix();
    let whitened = CMatrix::from_fn(m, m, |i, j| r[(i, j)] / (sqrt[i] * sqrt[j]));
    let (values, vectors) = linalg::hermitian_eigen(&whitened);
    CMatrix::from_fn(m, q, |i, k| {
        vectors[(i, k)] * ((values[k] - 1.0).max(0.0).sqrt() * sqrt[i])
    })
}

fn iterative_objective(b: &CMatrix, noise: &[f64], r_hat: &HermitianMatrix) -> f64 {
    NoiseDiag::new(noise.to_vec())
        .and_then(|q| reconstruct_r_factored(b, &q))
        .and_then(|model| lprime_of_model(&model, r_hat))
        .unwrap_or(f64::NAN)
}

/// Iterative maximum-likelihood estimate of `Q` and `B` with `R = BBᴴ + Q`.
pub fn imlse_estimate(
    r_hat: &HermitianMatrix,
    q: usize,
    opts: &EstimatorOptions,
) -> Result<NoiseEstimate> {
    opts.validate()?;
    let diag = check_input(r_hat, q)?;
    check_psd(&r_hat.eigenvalues())?;
    let floor = floor_level(&diag, opts);
    let r = r_hat.as_matrix();

    let mut noise: Vec<f64> = diag.iter().map(|d| d.max(floor)).collect();
    let mut iterations = 0;
    let mut converged = false;
    let mut objective_trace = Vec::new();
    while iterations < opts.max_iters {
        iterations += 1;
        let b = ml_factor(r_hat, &noise, q);
        let next: Vec<f64> = (0..noise.len())
            .map(|i| {
                let signal: f64 = b.row(i).iter().map(|z| z.norm_sqr()).sum();
                (r[(i, i)].re - signal).max(floor)
            })
            .collect();
        let change = next
            .iter()
            .zip(&noise)
            .map(|(new, old)| ((new - old) / old).abs())
            .fold(0.0, f64::max);
        noise = next;
        objective_trace.push(iterative_objective(&ml_factor(r_hat, &noise, q), &noise, r_hat));
        if change < opts.rel_tol {
            converged = true;
            break;
        }
    }
    let b_hat = ml_factor(r_hat, &noise, q);
    Ok(NoiseEstimate {
        q_hat: NoiseDiag::new(noise)?,
        b_hat: Some(b_hat),
        iterations,
        converged,
        objective_trace,
    })
}

/// One-shot eigendecomposition estimate of `Q`.
///
/// With uncorrelated sources on a uniform linear array the signal part
/// `A P Aᴴ` is Toeplitz with a constant diagonal `c0`. Removing the diagonal
/// of `R̂` leaves `A P Aᴴ − c0 I` (the noise is diagonal), which has the same
/// eigenvectors as `A P Aᴴ` whatever the noise powers are. Its `M − q` trailing
/// eigenvectors `Uₙ` therefore span the noise subspace (and its trailing
/// eigenvalues all equal `−c0`). The noise powers are the least-squares
/// solution of `Uₙᴴ (R̂ − Q) Uₙ = 0`; when that system leaves directions
/// undetermined they are taken from `R̂(m,m) − c0`. Estimates are clamped from
/// below at `min_eigen_ratio · λmin(R̂)`.
pub fn noniterative_estimate(
    r_hat: &HermitianMatrix,
    q: usize,
    opts: &EstimatorOptions,
) -> Result<NoiseEstimate> {
    opts.validate()?;
    let diag = check_input(r_hat, q)?;
    let m = diag.len();
    let eigenvalues = r_hat.eigenvalues();
    check_psd(&eigenvalues)?;
    let smallest = eigenvalues.last().copied().unwrap_or(0.0);
    let floor = floor_level(&diag, opts).max(opts.min_eigen_ratio * smallest);

    let mut hollow = r_hat.as_matrix().clone();
    for i in 0..m {
        hollow[(i, i)] = c(0.0);
    }
    let (values, vectors) = linalg::hermitian_eigen(&hollow);
    let signal_diagonal = -values[q..].iter().sum::<f64>() / (m - q) as f64;
    let anchor: Vec<f64> = diag.iter().map(|d| d - signal_diagonal).collect();
    let noise_subspace = vectors.columns(q, m - q).into_owned();
    let noise: Vec<f64> = subspace_noise_fit(&noise_subspace, r_hat.as_matrix(), &anchor)?
        .iter()
        .map(|s| s.max(floor))
        .collect();
    Ok(NoiseEstimate {
        q_hat: NoiseDiag::new(noise)?,
        b_hat: None,
        iterations: 1,
        converged: true,
        objective_trace: Vec::new(),
    })
}

/// Least-squares diagonal `Q` with `Uᴴ Q U ≈ Uᴴ R U`.
///
/// Each entry `(a, b)` with `a ≤ b` of the compressed matrices gives one real
/// equation on the diagonal and two off it. With fewer than `M` independent
/// equations (a thin noise subspace) the solution closest to `anchor` is used.
fn subspace_noise_fit(u: &CMatrix, r: &CMatrix, anchor: &[f64]) -> Result<Vec<f64>> {
    let (m, k) = u.shape();
    let compressed = u.adjoint() * r * u;
    let mut design = DMatrix::<f64>::zeros(k * k, m);
    let mut target = DVector::<f64>::zeros(k * k);
    let mut row = 0;
    for a in 0..k {
        for b in a..k {
            for i in 0..m {
                let z = u[(i, a)].conj() * u[(i, b)];
                design[(row, i)] = z.re;
                if a != b {
                    design[(row + 1, i)] = z.im;
                }
            }
            target[row] = compressed[(a, b)].re;
            if a == b {
                row += 1;
            } else {
                target[row + 1] = compressed[(a, b)].im;
                row += 2;
            }
        }
    }
    let anchor = DVector::from_column_slice(anchor);
    let offset = &design * &anchor;
    // Singular values of the design are O(1): its entries are products of
    // orthonormal vector components.
    let correction = design
        .svd(true, true)
        .solve(&(target - offset), 1e-10)
        .map_err(|e| Error::NumericDegeneracy(format!("noise least squares failed: {e}")))?;
    Ok((anchor + correction).iter().copied().collect())
}

/// Zero-source estimate `Q̂ = diag(R̂)`.
pub fn zero_source_estimate(r_hat: &HermitianMatrix) -> Result<NoiseEstimate> {
    let diag = check_input(r_hat, 0)?;
    Ok(NoiseEstimate {
        q_hat: NoiseDiag::new(diag)?,
        b_hat: None,
        iterations: 1,
        converged: true,
        objective_trace: Vec::new(),
    })
}
