//! Concentrated stochastic likelihood under diagonal (nonuniform) noise.
//!
//! All criteria are in the "negative normalized log-likelihood" form
//! `L'(psi, P, Q) = ln det R + tr(R⁻¹ R̂)` with `R = A P Aᴴ + Q`, which is
//! minimized. For fixed `psi` and `Q` the optimal signal covariance has a
//! closed form in the whitened domain `Ã = Q^{-1/2} A`,
//! `R̃ = Q^{-1/2} R̂ Q^{-1/2}`:
//!
//! ```text
//! P̂ = G⁻¹ Ãᴴ R̃ Ã G⁻¹ − G⁻¹,         G = ÃᴴÃ
//! L'(psi, P̂, Q) = ln det Q + ln det(Ãᴴ R̃ Ã G⁻¹) + tr[(I − P_Ã) R̃] + q
//! ```

use std::f64::consts::PI;

use crate::array_model::{steering_matrix, ArrayGeometry, HermitianMatrix, NoiseDiag};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix};

/// Largest admissible condition number of `ÃᴴÃ`.
pub const MAX_GRAM_CONDITION: f64 = 1e12;

/// Whitened steering matrix and sample covariance.
#[derive(Debug, Clone)]
pub struct WhitenedPair {
    pub a_tilde: CMatrix,
    pub r_tilde_hat: HermitianMatrix,
}

/// Fitted model parameters for one hypothesized source count.
#[derive(Debug, Clone)]
pub struct ModelFit {
    /// Sorted DOA estimates in degrees.
    pub psi_hat_deg: Vec<f64>,
    pub p_hat: HermitianMatrix,
    pub q_hat: NoiseDiag,
    /// Value of `L'` at the fitted parameters.
    pub lprime: f64,
}

impl ModelFit {
    /// Full log-likelihood `L = -N M ln(pi) - N L'` for `n` snapshots.
    pub fn loglik(&self, n: usize) -> f64 {
        loglik_from_lprime(self.lprime, n, self.q_hat.len())
    }
}

/// `L = -N M ln(pi) - N L'`.
pub fn loglik_from_lprime(lprime: f64, n: usize, m: usize) -> f64 {
    let n = n as f64;
    -n * m as f64 * PI.ln() - n * lprime
}

fn check_dims(r_hat: &HermitianMatrix, q: &NoiseDiag) -> Result<()> {
    if r_hat.dim() != q.len() {
        return Err(Error::Dimension(format!(
            "covariance is {0}x{0} but noise has {1} powers",
            r_hat.dim(),
            q.len()
        )));
    }
    Ok(())
}

/// `Ã = Q^{-1/2} A` and `R̃ = Q^{-1/2} R̂ Q^{-1/2}`.
pub fn whiten(a: &CMatrix, r_hat: &HermitianMatrix, q: &NoiseDiag) -> Result<WhitenedPair> {
    check_dims(r_hat, q)?;
    if a.nrows() != q.len() {
        return Err(Error::Dimension(format!(
            "steering matrix has {} rows for {} sensors",
            a.nrows(),
            q.len()
        )));
    }
    let inv_sqrt: Vec<f64> = q.powers().iter().map(|s| 1.0 / s.sqrt()).collect();
    let a_tilde = CMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * inv_sqrt[i]);
    let r = r_hat.as_matrix();
    let r_tilde = CMatrix::from_fn(r.nrows(), r.ncols(), |i, j| {
        r[(i, j)] * (inv_sqrt[i] * inv_sqrt[j])
    });
    Ok(WhitenedPair {
        a_tilde,
        r_tilde_hat: HermitianMatrix::from_symmetrized(r_tilde),
    })
}

/// Undoes [`whiten`].
pub fn unwhiten(pair: &WhitenedPair, q: &NoiseDiag) -> (CMatrix, HermitianMatrix) {
    let sqrt: Vec<f64> = q.powers().iter().map(|s| s.sqrt()).collect();
    let a = &pair.a_tilde;
    let a = CMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * sqrt[i]);
    let r = pair.r_tilde_hat.as_matrix();
    let r = CMatrix::from_fn(r.nrows(), r.ncols(), |i, j| r[(i, j)] * (sqrt[i] * sqrt[j]));
    (a, HermitianMatrix::from_symmetrized(r))
}

/// Intermediate products shared by the whitened criteria.
pub(crate) struct Reduced {
    gram: CMatrix,
    /// `Ãᴴ R̃ Ã`
    compressed: CMatrix,
    /// `G⁻¹ Ãᴴ R̃ Ã`
    gram_inv_compressed: CMatrix,
}

impl Reduced {
    pub(crate) fn new(a_tilde: &CMatrix, r_tilde: &CMatrix) -> Result<Self> {
        let gram = a_tilde.adjoint() * a_tilde;
        let cond = linalg::condition_number_hpd(&gram);
        if !(cond < MAX_GRAM_CONDITION) {
            return Err(Error::IllConditioned { cond });
        }
        let compressed = a_tilde.adjoint() * r_tilde * a_tilde;
        let gram_inv_compressed = linalg::solve_hpd(&gram, &compressed, "ÃᴴÃ")?;
        Ok(Self {
            gram,
            compressed,
            gram_inv_compressed,
        })
    }

    /// `tr[(I − P_Ã) R̃]` given `tr R̃`.
    pub(crate) fn residual(&self, trace_r_tilde: f64) -> f64 {
        trace_r_tilde - linalg::trace_re(&self.gram_inv_compressed)
    }

    /// `ln det(Ãᴴ R̃ Ã G⁻¹) + tr[(I − P_Ã) R̃] + q`.
    pub(crate) fn concentrated(&self, trace_r_tilde: f64) -> Result<f64> {
        let ln_det_h = linalg::ln_det_hpd(&self.compressed, "ÃᴴR̃Ã")?;
        let ln_det_g = linalg::ln_det_hpd(&self.gram, "ÃᴴÃ")?;
        Ok(ln_det_h - ln_det_g + self.residual(trace_r_tilde) + self.gram.nrows() as f64)
    }
}

impl WhitenedPair {
    pub fn sources(&self) -> usize {
        self.a_tilde.ncols()
    }

    pub fn gram(&self) -> CMatrix {
        self.a_tilde.adjoint() * &self.a_tilde
    }

    fn reduce(&self) -> Result<Reduced> {
        Reduced::new(&self.a_tilde, self.r_tilde_hat.as_matrix())
    }

    fn trace_r_tilde(&self) -> f64 {
        linalg::trace_re(self.r_tilde_hat.as_matrix())
    }

    /// Closed-form signal covariance minimizing `L'` for fixed `psi`, `Q`.
    ///
    /// The result is Hermitian but not necessarily positive semidefinite.
    pub fn estimate_p(&self) -> Result<HermitianMatrix> {
        let red = self.reduce()?;
        // G⁻¹ H G⁻¹ = G⁻¹ (G⁻¹ H)ᴴ since H is Hermitian.
        let sandwich = linalg::solve_hpd(&red.gram, &red.gram_inv_compressed.adjoint(), "ÃᴴÃ")?;
        let q = self.sources();
        let gram_inv = linalg::solve_hpd(&red.gram, &CMatrix::identity(q, q), "ÃᴴÃ")?;
        Ok(HermitianMatrix::from_symmetrized(sandwich - gram_inv))
    }

    /// Orthogonal projector onto the column space of `Ã`.
    pub fn projector(&self) -> Result<HermitianMatrix> {
        projector(&self.a_tilde)
    }

    /// Concentrated criterion without the `ln det Q` term.
    pub fn concentrated_value(&self) -> Result<f64> {
        self.reduce()?.concentrated(self.trace_r_tilde())
    }

    /// `tr[(I − P_Ã) R̃]`.
    pub fn residual_power(&self) -> Result<f64> {
        Ok(self.reduce()?.residual(self.trace_r_tilde()))
    }
}

/// `P_Ã = Ã (ÃᴴÃ)⁻¹ Ãᴴ`.
pub fn projector(a_tilde: &CMatrix) -> Result<HermitianMatrix> {
    let gram = a_tilde.adjoint() * a_tilde;
    let cond = linalg::condition_number_hpd(&gram);
    if !(cond < MAX_GRAM_CONDITION) {
        return Err(Error::IllConditioned { cond });
    }
    let coeffs = linalg::solve_hpd(&gram, &a_tilde.adjoint(), "ÃᴴÃ")?;
    Ok(HermitianMatrix::from_symmetrized(a_tilde * coeffs))
}

/// Concentrated criterion `L'(psi, P̂, Q)` with `P̂` at its closed-form optimum.
pub fn concentrated_criterion(
    geometry: &ArrayGeometry,
    psi_deg: &[f64],
    q: &NoiseDiag,
    r_hat: &HermitianMatrix,
) -> Result<f64> {
    let a = steering_matrix(geometry, psi_deg)?;
    let pair = whiten(&a, r_hat, q)?;
    Ok(q.ln_det() + pair.concentrated_value()?)
}

/// Closed-form `P̂` at the given angles and noise powers.
pub fn estimate_p(
    geometry: &ArrayGeometry,
    psi_deg: &[f64],
    q: &NoiseDiag,
    r_hat: &HermitianMatrix,
) -> Result<HermitianMatrix> {
    let a = steering_matrix(geometry, psi_deg)?;
    whiten(&a, r_hat, q)?.estimate_p()
}

/// Model covariance `A(psi) P Aᴴ(psi) + Q`.
pub fn reconstruct_r(
    geometry: &ArrayGeometry,
    psi_deg: &[f64],
    p: &HermitianMatrix,
    q: &NoiseDiag,
) -> Result<HermitianMatrix> {
    if p.dim() != psi_deg.len() {
        return Err(Error::Dimension(format!(
            "P is {0}x{0} for {1} angles",
            p.dim(),
            psi_deg.len()
        )));
    }
    if q.len() != geometry.sensors() {
        return Err(Error::Dimension("noise/geometry size mismatch".into()));
    }
    let a = steering_matrix(geometry, psi_deg)?;
    let mut r = &a * p.as_matrix() * a.adjoint();
    add_diag(&mut r, q);
    Ok(HermitianMatrix::from_symmetrized(r))
}

/// Model covariance in factored form `B Bᴴ + Q`.
pub fn reconstruct_r_factored(b: &CMatrix, q: &NoiseDiag) -> Result<HermitianMatrix> {
    if b.nrows() != q.len() {
        return Err(Error::Dimension("factor/noise size mismatch".into()));
    }
    let mut r = b * b.adjoint();
    add_diag(&mut r, q);
    Ok(HermitianMatrix::from_symmetrized(r))
}

fn add_diag(r: &mut CMatrix, q: &NoiseDiag) {
    for (i, s) in q.powers().iter().enumerate() {
        r[(i, i)] += c(*s);
    }
}

/// `ln det R_model + tr(R_model⁻¹ R̂)` for an explicit model covariance.
pub fn lprime_of_model(r_model: &HermitianMatrix, r_hat: &HermitianMatrix) -> Result<f64> {
    if r_model.dim() != r_hat.dim() {
        return Err(Error::Dimension("model and sample covariance differ in size".into()));
    }
    let ln_det = linalg::ln_det_hpd(r_model.as_matrix(), "model covariance")?;
    let x = linalg::solve_hpd(r_model.as_matrix(), r_hat.as_matrix(), "model covariance")?;
    Ok(ln_det + linalg::trace_re(&x))
}

/// Unconcentrated `L'(psi, P, Q)`.
pub fn lprime_full(
    geometry: &ArrayGeometry,
    psi_deg: &[f64],
    p: &HermitianMatrix,
    q: &NoiseDiag,
    r_hat: &HermitianMatrix,
) -> Result<f64> {
    check_dims(r_hat, q)?;
    let r_model = reconstruct_r(geometry, psi_deg, p, q)?;
    lprime_of_model(&r_model, r_hat)
}

/// Maximum-likelihood fit with no sources: `sigma_i^2 = R̂(i,i)` and
/// `L' = sum_i ln R̂(i,i) + M`.
pub fn zero_source_fit(r_hat: &HermitianMatrix) -> Result<(NoiseDiag, f64)> {
    let diag = r_hat.diagonal_re();
    if let Some(d) = diag.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
        return Err(Error::Data(format!(
            "sample covariance has a nonpositive diagonal entry {d}"
        )));
    }
    let lprime = diag.iter().map(|d| d.ln()).sum::<f64>() + diag.len() as f64;
    Ok((NoiseDiag::new(diag)?, lprime))
}
