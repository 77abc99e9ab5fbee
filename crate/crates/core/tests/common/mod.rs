// Helpers shared by the integration tests. The oracles here deliberately avoid
// the library's own linear algebra so that they check it independently.
#![allow(dead_code)]

use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use nusml::array_model::{HermitianMatrix, NoiseDiag};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type CMat = DMatrix<Complex64>;

pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(name)
}

pub fn uneven_noise() -> NoiseDiag {
    NoiseDiag::new(vec![9.0, 1.0, 25.0, 0.25, 6.25, 25.0]).unwrap()
}

/// Half-wavelength ULA steering matrix written out from its definition.
pub fn ula_steering(m: usize, psi_deg: &[f64]) -> CMat {
    CMat::from_fn(m, psi_deg.len(), |i, l| {
        let phase = std::f64::consts::PI * i as f64 * psi_deg[l].to_radians().sin();
        Complex64::from_polar(1.0, phase)
    })
}

/// `ln det R + tr(R⁻¹ R̂)` through LU factorization.
pub fn lprime_oracle(r_model: &CMat, r_hat: &CMat) -> f64 {
    let det = r_model.clone().lu().determinant();
    let inv = r_model.clone().try_inverse().expect("model covariance is invertible");
    let tr = (inv * r_hat).trace();
    det.re.ln() + tr.re
}

pub fn complex_normal(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

/// Sample covariance of `n` random snapshots with per-sensor scales drawn
/// log-uniformly over two decades.
pub fn random_sample_covariance(rng: &mut ChaCha8Rng, m: usize, n: usize) -> HermitianMatrix {
    let scale: Vec<f64> = (0..m).map(|_| 10f64.powf(rng.random_range(-1.0..1.0))).collect();
    let mix = complex_normal(rng, m, m);
    let x = complex_normal(rng, m, n);
    let y = CMat::from_fn(m, m, |i, j| mix[(i, j)] * scale[i].sqrt()) * x;
    let r = &y * y.adjoint() / Complex64::new(n as f64, 0.0);
    HermitianMatrix::new((&r + r.adjoint()) * Complex64::new(0.5, 0.0)).unwrap()
}

pub fn random_noise(rng: &mut ChaCha8Rng, m: usize) -> NoiseDiag {
    NoiseDiag::new((0..m).map(|_| 10f64.powf(rng.random_range(-1.0..1.0))).collect()).unwrap()
}

/// `q` angles in `(-lim, lim)` at least `min_sep` degrees apart.
pub fn random_angles(rng: &mut ChaCha8Rng, q: usize, lim: f64, min_sep: f64) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..q).map(|_| rng.random_range(-lim..lim)).collect();
        v.sort_by(f64::total_cmp);
        if v.windows(2).all(|w| w[1] - w[0] >= min_sep) {
            return v;
        }
    }
}

/// Minimizer of a unimodal function on `[a, b]`.
pub fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

pub fn real_diag(v: &[f64]) -> CMat {
    CMat::from_diagonal(&DVector::from_iterator(
        v.len(),
        v.iter().map(|&x| Complex64::new(x, 0.0)),
    ))
}
