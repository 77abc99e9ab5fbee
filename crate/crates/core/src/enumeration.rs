//! Source enumeration with SML-based information criteria.
//!
//! Every criterion is built from the profile `L'(θ̂_q)`, q = 0..M-1, of the
//! minimized negative log-likelihood. The q = 0 entry always comes from the
//! closed-form zero-source fit; the remaining entries are produced by one of
//! three approaches:
//!
//! 1. IMLSE estimates of `(Q̂_q, B̂_q)` and `R̂_q = B̂B̂ᴴ + Q̂`.
//! 2. IMLSE `Q̂_q`, then SML angle search and closed-form `P̂_q`.
//! 3. As 2, with `Q̂_q` from the noniterative estimator.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::array_model::{sample_covariance, ArrayGeometry, HermitianMatrix, SnapshotMatrix};
use crate::doa::{estimate_doa, DoaMethod, SearchOptions};
use crate::error::{Error, Result};
use crate::likelihood::{
    lprime_of_model, reconstruct_r, reconstruct_r_factored, zero_source_fit, ModelFit,
};
use crate::linalg;
use crate::noise_cov::{imlse_estimate, noniterative_estimate, EstimatorOptions};

/// How `L'(θ̂_q)` is computed for q ≥ 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Approach {
    /// Unconstrained IMLSE factor model.
    ImlseFactor = 1,
    /// IMLSE noise estimate plus SML angle search.
    ImlseSml = 2,
    /// Noniterative noise estimate plus SML angle search.
    NoniterativeSml = 3,
}

impl Approach {
    pub const ALL: [Approach; 3] = [
        Approach::ImlseFactor,
        Approach::ImlseSml,
        Approach::NoniterativeSml,
    ];

    pub fn number(self) -> u8 {
        self as u8
    }
}

impl TryFrom<u8> for Approach {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            1 => Ok(Approach::ImlseFactor),
            2 => Ok(Approach::ImlseSml),
            3 => Ok(Approach::NoniterativeSml),
            other => Err(Error::Config(format!("approach must be 1, 2 or 3, got {other}"))),
        }
    }
}

impl From<Approach> for u8 {
    fn from(a: Approach) -> u8 {
        a.number()
    }
}

impl fmt::Display for Approach {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

impl FromStr for Approach {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.trim()
            .parse::<u8>()
            .map_err(|_| Error::Config(format!("invalid approach '{s}'")))
            .and_then(Approach::try_from)
    }
}

/// Information criterion used to pick the source count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Criterion {
    Aic,
    Mdl,
    Eef,
}

impl Criterion {
    pub const ALL: [Criterion; 3] = [Criterion::Aic, Criterion::Mdl, Criterion::Eef];

    pub fn name(self) -> &'static str {
        match self {
            Criterion::Aic => "aic",
            Criterion::Mdl => "mdl",
            Criterion::Eef => "eef",
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct EnumOptions {
    pub estimator: EstimatorOptions,
    pub search: SearchOptions,
}

/// `L'(θ̂_q)` for q = 0..M-1.
#[derive(Debug, Clone)]
pub struct LprimeProfile {
    pub values: Vec<f64>,
    pub approach: Approach,
    /// Angle/covariance fits per q (approaches 2 and 3; `None` otherwise and at q = 0).
    pub per_q_fits: Vec<Option<ModelFit>>,
}

#[derive(Debug, Clone)]
pub struct EnumerationResult {
    pub q_hat_aic: usize,
    pub q_hat_mdl: usize,
    pub q_hat_eef: usize,
    pub aic: Vec<f64>,
    pub mdl: Vec<f64>,
    pub eef: Vec<f64>,
    pub profile: LprimeProfile,
}

impl EnumerationResult {
    pub fn q_hat(&self, criterion: Criterion) -> usize {
        match criterion {
            Criterion::Aic => self.q_hat_aic,
            Criterion::Mdl => self.q_hat_mdl,
            Criterion::Eef => self.q_hat_eef,
        }
    }
}

/// Number of free real parameters `q² + q + M`.
pub fn k_free_params(q: usize, m: usize) -> usize {
    q * q + q + m
}

/// Profile from raw snapshots.
pub fn lprime_profile(
    geometry: &ArrayGeometry,
    x: &SnapshotMatrix,
    approach: Approach,
    opts: &EnumOptions,
) -> Result<LprimeProfile> {
    lprime_profile_from_covariance(geometry, &sample_covariance(x), approach, opts)
}

/// Profile from a (sample or exact) covariance matrix.
pub fn lprime_profile_from_covariance(
    geometry: &ArrayGeometry,
    r_hat: &HermitianMatrix,
    approach: Approach,
    opts: &EnumOptions,
) -> Result<LprimeProfile> {
    let m = geometry.sensors();
    if r_hat.dim() != m {
        return Err(Error::Dimension(format!(
            "covariance is {0}x{0} for {m} sensors",
            r_hat.dim()
        )));
    }
    let (_, l0) = zero_source_fit(r_hat)?;
    let mut values = vec![l0];
    let mut per_q_fits = vec![None];
    for q in 1..m {
        let (value, fit) = match approach {
            Approach::ImlseFactor => {
                let est = imlse_estimate(r_hat, q, &opts.estimator)?;
                let b = est.b_hat.as_ref().expect("IMLSE always returns a factor");
                let model = reconstruct_r_factored(b, &est.q_hat)?;
                (lprime_of_model(&model, r_hat)?, None)
            }
            Approach::ImlseSml | Approach::NoniterativeSml => {
                let est = if approach == Approach::ImlseSml {
                    imlse_estimate(r_hat, q, &opts.estimator)?
                } else {
                    noniterative_estimate(r_hat, q, &opts.estimator)?
                };
                let doa = estimate_doa(geometry, r_hat, q, &est.q_hat, DoaMethod::Sml, &opts.search)?;
                let mut fit = doa.fit.expect("SML search always returns a fit");
                fit.p_hat =
                    HermitianMatrix::from_symmetrized(linalg::psd_project(fit.p_hat.as_matrix()));
                let model = reconstruct_r(geometry, &fit.psi_hat_deg, &fit.p_hat, &fit.q_hat)?;
                fit.lprime = lprime_of_model(&model, r_hat)?;
                (fit.lprime, Some(fit))
            }
        };
        if !value.is_finite() {
            return Err(Error::NumericDegeneracy(format!(
                "L' is not finite for q = {q}"
            )));
        }
        values.push(value);
        per_q_fits.push(fit);
    }
    Ok(LprimeProfile {
        values,
        approach,
        per_q_fits,
    })
}

fn penalized(profile: &LprimeProfile, n: usize, per_param: f64) -> Vec<f64> {
    let m = profile.values.len();
    profile
        .values
        .iter()
        .enumerate()
        .map(|(q, l)| n as f64 * l + per_param * k_free_params(q, m) as f64)
        .collect()
}

/// `AIC(q) = N L'(θ̂_q) + k_q`.
pub fn aic_scores(profile: &LprimeProfile, n: usize) -> Vec<f64> {
    penalized(profile, n, 1.0)
}

/// `MDL(q) = N L'(θ̂_q) + ½ k_q ln N`.
pub fn mdl_scores(profile: &LprimeProfile, n: usize) -> Vec<f64> {
    penalized(profile, n, 0.5 * (n as f64).ln())
}

/// Exponentially embedded family scores.
///
/// With `L_G(q) = -2N [L'(θ̂_q) - L'(θ̂_0)]` the score is
/// `L_G - k_q (ln(L_G/k_q) + 1)` when `L_G/k_q ≥ 1` and exactly zero
/// otherwise, so the logarithm never sees a nonpositive argument.
pub fn eef_scores(profile: &LprimeProfile, n: usize) -> Vec<f64> {
    let m = profile.values.len();
    let l0 = profile.values[0];
    profile
        .values
        .iter()
        .enumerate()
        .map(|(q, l)| {
            let lg = -2.0 * n as f64 * (l - l0);
            eef_term(lg, k_free_params(q, m) as f64)
        })
        .collect()
}

pub(crate) fn eef_term(lg: f64, k: f64) -> f64 {
    let ratio = lg / k;
    if ratio >= 1.0 {
        lg - k * (ratio.ln() + 1.0)
    } else {
        0.0
    }
}

/// Index of the smallest score; ties go to the smaller index.
pub fn argmin(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in scores.iter().enumerate().skip(1) {
        if *v < scores[best] {
            best = i;
        }
    }
    best
}

/// Index of the largest score; ties go to the smaller index.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in scores.iter().enumerate().skip(1) {
        if *v > scores[best] {
            best = i;
        }
    }
    best
}

/// Scores all three criteria on an already computed profile.
pub fn enumerate_from_profile(profile: LprimeProfile, n: usize) -> EnumerationResult {
    let aic = aic_scores(&profile, n);
    let mdl = mdl_scores(&profile, n);
    let eef = eef_scores(&profile, n);
    EnumerationResult {
        q_hat_aic: argmin(&aic),
        q_hat_mdl: argmin(&mdl),
        q_hat_eef: argmax(&eef),
        aic,
        mdl,
        eef,
        profile,
    }
}

/// Estimates the number of sources from snapshots.
pub fn enumerate_sources(
    geometry: &ArrayGeometry,
    x: &SnapshotMatrix,
    approach: Approach,
    opts: &EnumOptions,
) -> Result<EnumerationResult> {
    let profile = lprime_profile(geometry, x, approach, opts)?;
    Ok(enumerate_from_profile(profile, x.snapshots()))
}

/// Same as [`enumerate_sources`] for a covariance matrix built from `n`
/// snapshots.
pub fn enumerate_from_covariance(
    geometry: &ArrayGeometry,
    r_hat: &HermitianMatrix,
    n: usize,
    approach: Approach,
    opts: &EnumOptions,
) -> Result<EnumerationResult> {
    let profile = lprime_profile_from_covariance(geometry, r_hat, approach, opts)?;
    Ok(enumerate_from_profile(profile, n))
}
