//! Direction-of-arrival estimation with a plug-in noise covariance.
//!
//! Both criteria are evaluated in the domain whitened by the supplied `Q̂`:
//!
//! * SML: the concentrated stochastic likelihood (minimized by alternating
//!   maximization, AM).
//! * DML: the deterministic residual `tr[(I − P_Ã) R̃]` (minimized by
//!   alternating projection, AP).
//!
//! The multi-angle search is a cyclic one-angle-at-a-time scheme. Sources are
//! first placed sequentially by a full grid scan, each conditioned on the
//! previously placed ones; afterwards every angle is re-optimized in turn by
//! a local scan plus golden-section refinement until no angle moves by more
//! than the refinement tolerance.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::array_model::{steering_matrix, ArrayGeometry, HermitianMatrix, NoiseDiag};
use crate::error::{Error, Result};
use crate::likelihood::{self, ModelFit, Reduced};
use crate::linalg::{self, CMatrix};

/// Which likelihood the angle search minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DoaMethod {
    Sml,
    Dml,
}

impl DoaMethod {
    pub fn name(self) -> &'static str {
        match self {
            DoaMethod::Sml => "sml",
            DoaMethod::Dml => "dml",
        }
    }
}

impl fmt::Display for DoaMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DoaMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sml" => Ok(DoaMethod::Sml),
            "dml" => Ok(DoaMethod::Dml),
            other => Err(Error::Config(format!("unknown DOA method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    pub coarse_step_deg: f64,
    pub refine_tol_deg: f64,
    pub max_cycles: usize,
    /// Open interval of admissible angles.
    pub angle_bounds_deg: (f64, f64),
    /// Minimum separation kept between estimated sources, both while placing
    /// them and while refining.
    pub exclusion_deg: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            coarse_step_deg: 0.1,
            refine_tol_deg: 0.01,
            max_cycles: 20,
            angle_bounds_deg: (-90.0, 90.0),
            exclusion_deg: 0.5,
        }
    }
}

impl SearchOptions {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.angle_bounds_deg;
        if !(self.coarse_step_deg > 0.0) {
            return Err(Error::Config("coarse_step_deg must be positive".into()));
        }
        if !(self.refine_tol_deg > 0.0 && self.refine_tol_deg < self.coarse_step_deg) {
            return Err(Error::Config(
                "refine_tol_deg must be positive and below coarse_step_deg".into(),
            ));
        }
        if self.max_cycles == 0 {
            return Err(Error::Config("max_cycles must be at least 1".into()));
        }
        if !(lo >= -90.0 && hi <= 90.0 && lo < hi) {
            return Err(Error::Config(format!(
                "angle bounds ({lo}, {hi}) must be an interval inside (-90, 90)"
            )));
        }
        if !(self.exclusion_deg >= 0.0) {
            return Err(Error::Config("exclusion_deg must be nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct DoaResult {
    /// Estimated angles, ascending.
    pub psi_hat_deg: Vec<f64>,
    pub criterion_value: f64,
    /// Number of refinement cycles performed.
    pub cycles: usize,
    pub method: DoaMethod,
    /// Criterion value after initialization and after every cycle.
    pub cycle_values: Vec<f64>,
    /// Fitted model at the final angles. Always present for SML.
    pub fit: Option<ModelFit>,
}

/// Criterion evaluator with the whitened sample covariance precomputed.
struct Objective<'a> {
    geometry: &'a ArrayGeometry,
    inv_sqrt: Vec<f64>,
    r_tilde: CMatrix,
    trace_r_tilde: f64,
    method: DoaMethod,
}

impl<'a> Objective<'a> {
    fn new(
        geometry: &'a ArrayGeometry,
        r_hat: &HermitianMatrix,
        q_hat: &NoiseDiag,
        method: DoaMethod,
    ) -> Result<Self> {
        let m = geometry.sensors();
        if r_hat.dim() != m || q_hat.len() != m {
            return Err(Error::Dimension(format!(
                "geometry has {m} sensors, covariance is {0}x{0}, noise has {1} powers",
                r_hat.dim(),
                q_hat.len()
            )));
        }
        let inv_sqrt: Vec<f64> = q_hat.powers().iter().map(|s| 1.0 / s.sqrt()).collect();
        let r = r_hat.as_matrix();
        let r_tilde = CMatrix::from_fn(m, m, |i, j| r[(i, j)] * (inv_sqrt[i] * inv_sqrt[j]));
        let trace_r_tilde = linalg::trace_re(&r_tilde);
        Ok(Self {
            geometry,
            inv_sqrt,
            r_tilde,
            trace_r_tilde,
            method,
        })
    }

    fn try_eval(&self, psi_deg: &[f64]) -> Result<f64> {
        let a = steering_matrix(self.geometry, psi_deg)?;
        let a_tilde = CMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * self.inv_sqrt[i]);
        let red = Reduced::new(&a_tilde, &self.r_tilde)?;
        match self.method {
            DoaMethod::Sml => red.concentrated(self.trace_r_tilde),
            DoaMethod::Dml => Ok(red.residual(self.trace_r_tilde)),
        }
    }

    /// Criterion value, or `+inf` where it is undefined.
    fn eval(&self, psi_deg: &[f64]) -> f64 {
        match self.try_eval(psi_deg) {
            Ok(v) if v.is_finite() => v,
            _ => f64::INFINITY,
        }
    }
}

/// Concentrated SML criterion (delegates to the likelihood module).
pub fn sml_criterion(
    geometry: &ArrayGeometry,
    psi_deg: &[f64],
    q_hat: &NoiseDiag,
    r_hat: &HermitianMatrix,
) -> Result<f64> {
    likelihood::concentrated_criterion(geometry, psi_deg, q_hat, r_hat)
}

/// SML criterion without the additive constant `ln det Q̂`, which is what the
/// angle search minimizes.
pub fn sml_search_criterion(
    geometry: &ArrayGeometry,
    psi_deg: &[f64],
    q_hat: &NoiseDiag,
    r_hat: &HermitianMatrix,
) -> Result<f64> {
    Objective::new(geometry, r_hat, q_hat, DoaMethod::Sml)?.try_eval(psi_deg)
}

/// Deterministic ML criterion `tr[(I − P_Ã) R̃]`.
pub fn dml_criterion(
    geometry: &ArrayGeometry,
    psi_deg: &[f64],
    q_hat: &NoiseDiag,
    r_hat: &HermitianMatrix,
) -> Result<f64> {
    Objective::new(geometry, r_hat, q_hat, DoaMethod::Dml)?.try_eval(psi_deg)
}

fn grid_points(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut k = 1;
    loop {
        let x = lo + k as f64 * step;
        if x >= hi - 1e-9 {
            break;
        }
        out.push(x);
        k += 1;
    }
    out
}

/// Golden-section minimization of `f` on `[a, b]` until the bracket is
/// narrower than `tol`. Returns the best point evaluated.
fn golden_section(mut f: impl FnMut(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut best = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    while b - a > tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
            if f1 < best.1 {
                best = (x1, f1);
            }
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
            if f2 < best.1 {
                best = (x2, f2);
            }
        }
    }
    best
}

/// Estimates `q` source directions from `r_hat` with noise powers `q_hat`.
pub fn estimate_doa(
    geometry: &ArrayGeometry,
    r_hat: &HermitianMatrix,
    q: usize,
    q_hat: &NoiseDiag,
    method: DoaMethod,
    opts: &SearchOptions,
) -> Result<DoaResult> {
    opts.validate()?;
    let m = geometry.sensors();
    if q == 0 || q >= m {
        return Err(Error::Domain(format!(
            "DOA search needs 1 <= q < M, got q = {q}, M = {m}"
        )));
    }
    let objective = Objective::new(geometry, r_hat, q_hat, method)?;
    let (lo, hi) = opts.angle_bounds_deg;
    let step = opts.coarse_step_deg;
    let tol = opts.refine_tol_deg;
    // Keep strictly inside the open angle interval.
    let inner_lo = lo + 1e-6;
    let inner_hi = hi - 1e-6;

    // Sequential initialization.
    let grid = grid_points(lo, hi, step);
    let mut angles: Vec<f64> = Vec::with_capacity(q);
    for l in 0..q {
        let mut trial = angles.clone();
        trial.push(0.0);
        let mut best = (f64::INFINITY, f64::NAN);
        for &g in &grid {
            if angles.iter().any(|a| (a - g).abs() < opts.exclusion_deg) {
                continue;
            }
            trial[l] = g;
            let v = objective.eval(&trial);
            if v < best.0 {
                best = (v, g);
            }
        }
        if !best.0.is_finite() {
            return Err(Error::NumericDegeneracy(format!(
                "{} criterion is not finite anywhere on the search grid",
                method.name()
            )));
        }
        angles.push(best.1);
    }

    // Cyclic refinement; a move is only accepted if it lowers the criterion.
    let mut value = objective.eval(&angles);
    let mut cycle_values = vec![value];
    let mut cycles = 0;
    while cycles < opts.max_cycles {
        cycles += 1;
        let mut largest_move = 0.0_f64;
        for l in 0..q {
            let current = angles[l];
            let mut trial = angles.clone();
            let others: Vec<f64> = angles
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != l)
                .map(|(_, &a)| a)
                .collect();
            let mut at = |x: f64| {
                if others.iter().any(|a| (a - x).abs() < opts.exclusion_deg) {
                    return f64::INFINITY;
                }
                trial[l] = x;
                objective.eval(&trial)
            };

            // Local coarse scan, walking further while the edge keeps improving.
            let mut best = (current, value);
            for k in [-2i32, -1, 1, 2] {
                let x = current + k as f64 * step;
                if x > inner_lo && x < inner_hi {
                    let v = at(x);
                    if v < best.1 {
                        best = (x, v);
                    }
                }
            }
            for dir in [-1.0, 1.0] {
                if (best.0 - (current + dir * 2.0 * step)).abs() > 1e-12 {
                    continue;
                }
                loop {
                    let x = best.0 + dir * step;
                    if !(x > inner_lo && x < inner_hi) {
                        break;
                    }
                    let v = at(x);
                    if v < best.1 {
                        best = (x, v);
                    } else {
                        break;
                    }
                }
            }

            let a = (best.0 - step).max(inner_lo);
            let b = (best.0 + step).min(inner_hi);
            let refined = golden_section(&mut at, a, b, 0.5 * tol);
            if refined.1 < best.1 {
                best = refined;
            }
            if best.1 < value {
                largest_move = largest_move.max((best.0 - current).abs());
                angles[l] = best.0;
                value = best.1;
            }
        }
        cycle_values.push(value);
        if largest_move <= tol {
            break;
        }
    }

    // The fit is computed in search order, where the criterion was known to be
    // finite, and then permuted to ascending angles.
    let fit = match method {
        DoaMethod::Sml => Some(fit_at(geometry, &angles, q_hat, r_hat)?),
        DoaMethod::Dml => fit_at(geometry, &angles, q_hat, r_hat).ok(),
    };
    let mut order: Vec<usize> = (0..q).collect();
    order.sort_by(|&i, &j| angles[i].total_cmp(&angles[j]));
    let angles: Vec<f64> = order.iter().map(|&i| angles[i]).collect();
    let fit = fit.map(|f| {
        let p = f.p_hat.as_matrix();
        let permuted = CMatrix::from_fn(q, q, |i, j| p[(order[i], order[j])]);
        ModelFit {
            psi_hat_deg: angles.clone(),
            p_hat: HermitianMatrix::from_symmetrized(permuted),
            ..f
        }
    });
    Ok(DoaResult {
        psi_hat_deg: angles,
        criterion_value: value,
        cycles,
        method,
        cycle_values,
        fit,
    })
}

/// Closed-form signal covariance and concentrated `L'` at fixed angles.
pub fn fit_at(
    geometry: &ArrayGeometry,
    psi_deg: &[f64],
    q_hat: &NoiseDiag,
    r_hat: &HermitianMatrix,
) -> Result<ModelFit> {
    let a = steering_matrix(geometry, psi_deg)?;
    let pair = likelihood::whiten(&a, r_hat, q_hat)?;
    let p_hat = pair.estimate_p()?;
    let lprime = q_hat.ln_det() + pair.concentrated_value()?;
    Ok(ModelFit {
        psi_hat_deg: psi_deg.to_vec(),
        p_hat,
        q_hat: q_hat.clone(),
        lprime,
    })
}
