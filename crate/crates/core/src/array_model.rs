//! Array geometry, narrowband signal model and synthetic data.
//!
//! Sensors sit on a line at positions measured in half-wavelengths, so a
//! plane wave arriving from angle `psi` (measured from broadside) produces the
//! phase `exp(j * pi * position * sin(psi))` at each element. The observation
//! model is `x(t) = A(psi) s(t) + n(t)` with circularly symmetric complex
//! Gaussian sources of covariance `P` and spatially white noise of diagonal
//! covariance `Q`.

use std::f64::consts::PI;

use nalgebra::Cholesky;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, CVector};

/// Two steering angles closer than this (degrees) are considered identical.
pub const DUPLICATE_ANGLE_DEG: f64 = 1e-9;

/// Positions of the sensors of a linear array, in half-wavelength units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GeometrySpec", into = "GeometrySpec")]
pub struct ArrayGeometry {
    positions: Vec<f64>,
}

/// Wire form of [`ArrayGeometry`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum GeometrySpec {
    Ula { sensors: usize },
    Linear { positions: Vec<f64> },
}

impl TryFrom<GeometrySpec> for ArrayGeometry {
    type Error = Error;

    fn try_from(spec: GeometrySpec) -> Result<Self> {
        match spec {
            GeometrySpec::Ula { sensors } => ArrayGeometry::ula(sensors),
            GeometrySpec::Linear { positions } => ArrayGeometry::new(positions),
        }
    }
}

impl From<ArrayGeometry> for GeometrySpec {
    fn from(g: ArrayGeometry) -> Self {
        if g.is_ula() {
            GeometrySpec::Ula {
                sensors: g.sensors(),
            }
        } else {
            GeometrySpec::Linear {
                positions: g.positions,
            }
        }
    }
}

impl ArrayGeometry {
    /// Arbitrary linear array. Positions must be finite and strictly increasing.
    pub fn new(positions: Vec<f64>) -> Result<Self> {
        if positions.len() < 2 {
            return Err(Error::Domain(format!(
                "an array needs at least 2 sensors, got {}",
                positions.len()
            )));
        }
        if positions.iter().any(|p| !p.is_finite()) {
            return Err(Error::Domain("sensor positions must be finite".into()));
        }
        if positions.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain(
                "sensor positions must be strictly increasing".into(),
            ));
        }
        Ok(Self { positions })
    }

    /// Uniform linear array with half-wavelength spacing: positions `0..m`.
    pub fn ula(m: usize) -> Result<Self> {
        Self::new((0..m).map(|i| i as f64).collect())
    }

    pub fn sensors(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    fn is_ula(&self) -> bool {
        self.positions
            .iter()
            .enumerate()
            .all(|(i, &p)| p == i as f64)
    }
}

fn check_angle(psi_deg: f64) -> Result<()> {
    if !(psi_deg > -90.0 && psi_deg < 90.0) {
        return Err(Error::Domain(format!(
            "angle {psi_deg} deg is outside the open interval (-90, 90)"
        )));
    }
    Ok(())
}

/// Array response `a(psi)` to a unit plane wave from `psi_deg`.
pub fn steering_vector(geometry: &ArrayGeometry, psi_deg: f64) -> Result<CVector> {
    check_angle(psi_deg)?;
    let phase = PI * psi_deg.to_radians().sin();
    Ok(CVector::from_iterator(
        geometry.sensors(),
        geometry
            .positions
            .iter()
            .map(|&p| Complex64::from_polar(1.0, phase * p)),
    ))
}

/// `A(psi) = [a(psi_1), ..., a(psi_q)]`.
pub fn steering_matrix(geometry: &ArrayGeometry, doas_deg: &[f64]) -> Result<CMatrix> {
    let m = geometry.sensors();
    let q = doas_deg.len();
    if q >= m {
        return Err(Error::Domain(format!(
            "{q} sources cannot be resolved by {m} sensors"
        )));
    }
    for (i, a) in doas_deg.iter().enumerate() {
        for b in &doas_deg[i + 1..] {
            if (a - b).abs() <= DUPLICATE_ANGLE_DEG {
                return Err(Error::DegenerateManifold(format!(
                    "duplicate steering angle {a} deg"
                )));
            }
        }
    }
    let mut out = CMatrix::zeros(m, q);
    for (l, &psi) in doas_deg.iter().enumerate() {
        out.set_column(l, &steering_vector(geometry, psi)?);
    }
    Ok(out)
}

/// A complex matrix that is Hermitian to working precision.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(CMatrix);

impl HermitianMatrix {
    /// Relative tolerance on `max|m - mᴴ|` accepted by [`HermitianMatrix::new`].
    pub const TOLERANCE: f64 = 1e-12;

    /// Validates Hermitian symmetry and stores the symmetrized matrix.
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Dimension(format!(
                "expected a square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Data("matrix has non-finite entries".into()));
        }
        let scale = linalg::max_abs(&m);
        let skew = linalg::max_abs(&(&m - m.adjoint()));
        if skew > Self::TOLERANCE * scale {
            return Err(Error::Data(format!(
                "matrix is not Hermitian (skew {skew:.3e}, scale {scale:.3e})"
            )));
        }
        Ok(Self(linalg::symmetrize(&m)))
    }

    /// Symmetrizes `m` without checking how far from Hermitian it was.
    pub(crate) fn from_symmetrized(m: CMatrix) -> Self {
        Self(linalg::symmetrize(&m))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        Self(CMatrix::from_diagonal(&CVector::from_iterator(
            diag.len(),
            diag.iter().map(|&d| c(d)),
        )))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    /// Real diagonal entries.
    pub fn diagonal_re(&self) -> Vec<f64> {
        self.0.diagonal().iter().map(|z| z.re).collect()
    }

    /// Eigenvalues in descending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::hermitian_eigenvalues(&self.0)
    }
}

/// Per-sensor noise powers `sigma_m^2`, all strictly positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct NoiseDiag(Vec<f64>);

impl TryFrom<Vec<f64>> for NoiseDiag {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        NoiseDiag::new(v)
    }
}

impl From<NoiseDiag> for Vec<f64> {
    fn from(n: NoiseDiag) -> Self {
        n.0
    }
}

impl NoiseDiag {
    pub fn new(powers: Vec<f64>) -> Result<Self> {
        if let Some(p) = powers.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
            return Err(Error::Domain(format!(
                "noise powers must be finite and positive, got {p}"
            )));
        }
        Ok(Self(powers))
    }

    pub fn uniform(m: usize, power: f64) -> Result<Self> {
        Self::new(vec![power; m])
    }

    pub fn powers(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `ln det Q`.
    pub fn ln_det(&self) -> f64 {
        self.0.iter().map(|p| p.ln()).sum()
    }

    pub fn to_matrix(&self) -> HermitianMatrix {
        HermitianMatrix::from_real_diagonal(&self.0)
    }

    /// Multiplies every power by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.0.iter().map(|p| p * factor).collect())
    }
}

/// The M x N observation block, one column per snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotMatrix(CMatrix);

impl SnapshotMatrix {
    pub fn new(data: CMatrix) -> Result<Self> {
        if data.ncols() == 0 {
            return Err(Error::Domain("at least one snapshot is required".into()));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Data("snapshots must be finite".into()));
        }
        Ok(Self(data))
    }

    pub fn sensors(&self) -> usize {
        self.0.nrows()
    }

    pub fn snapshots(&self) -> usize {
        self.0.ncols()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }
}

/// A complete simulation scenario.
///
/// This is also the JSON scenario file format; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub geometry: ArrayGeometry,
    pub doas_deg: Vec<f64>,
    /// Power of each source.
    pub source_power: f64,
    /// Pairwise (real) correlation coefficient between sources.
    pub correlation: f64,
    pub noise_diag: NoiseDiag,
    pub snapshots: usize,
    pub runs: usize,
    #[serde(default)]
    pub snr_grid_db: Vec<f64>,
    pub base_seed: u64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let m = self.geometry.sensors();
        if self.doas_deg.len() >= m {
            return Err(Error::Domain(format!(
                "{} sources but only {m} sensors",
                self.doas_deg.len()
            )));
        }
        for &psi in &self.doas_deg {
            check_angle(psi)?;
        }
        if self.noise_diag.len() != m {
            return Err(Error::Dimension(format!(
                "noise_diag has {} entries for {m} sensors",
                self.noise_diag.len()
            )));
        }
        if !(self.source_power.is_finite() && self.source_power > 0.0) {
            return Err(Error::Domain("source_power must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.correlation) {
            return Err(Error::Domain("correlation must lie in [0, 1)".into()));
        }
        if self.snapshots == 0 || self.runs == 0 {
            return Err(Error::Domain("snapshots and runs must be at least 1".into()));
        }
        if self.snr_grid_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::Domain("snr_grid_db must be finite".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn sources(&self) -> usize {
        self.doas_deg.len()
    }

    /// Source covariance `P` of this scenario.
    pub fn source_covariance(&self) -> Result<HermitianMatrix> {
        source_covariance(self.sources(), self.source_power, self.correlation)
    }

    /// Exact array covariance `R = A P Aᴴ + Q`.
    pub fn model_covariance(&self) -> Result<HermitianMatrix> {
        let a = steering_matrix(&self.geometry, &self.doas_deg)?;
        let p = self.source_covariance()?;
        let apa = &a * p.as_matrix() * a.adjoint();
        let mut r = apa;
        for (i, s) in self.noise_diag.powers().iter().enumerate() {
            r[(i, i)] += c(*s);
        }
        Ok(HermitianMatrix::from_symmetrized(r))
    }

    /// Copy of this scenario with the source power set to reach `snr_db`.
    pub fn with_snr_db(&self, snr_db: f64) -> Self {
        let mut s = self.clone();
        s.source_power = required_sigma_s2(snr_db, &self.noise_diag, self.geometry.sensors());
        s
    }
}

/// Equal-power sources with pairwise real correlation `rho`.
pub fn source_covariance(q: usize, sigma_s2: f64, rho: f64) -> Result<HermitianMatrix> {
    if rho >= 1.0 {
        return Err(Error::SingularCovariance(format!(
            "correlation {rho} makes the source covariance singular"
        )));
    }
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::Domain(format!("correlation {rho} must lie in [0, 1)")));
    }
    if !(sigma_s2.is_finite() && sigma_s2 > 0.0) {
        return Err(Error::Domain("source power must be positive".into()));
    }
    let p = CMatrix::from_fn(q, q, |i, j| {
        if i == j {
            c(sigma_s2)
        } else {
            c(rho * sigma_s2)
        }
    });
    Ok(HermitianMatrix(p))
}

/// Seed of an individual Monte Carlo run.
///
/// The run index is passed through the SplitMix64 finalizer so that
/// consecutive runs draw from unrelated streams.
pub fn run_seed(base_seed: u64, run_index: u64) -> u64 {
    let mut z = run_index.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    base_seed ^ (z ^ (z >> 31))
}

fn complex_normal(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Draws the observation block of one Monte Carlo run.
///
/// The result depends only on the scenario and `run_index`.
pub fn synthesize_snapshots(scenario: &Scenario, run_index: u64) -> Result<SnapshotMatrix> {
    scenario.validate()?;
    let m = scenario.geometry.sensors();
    let q = scenario.sources();
    let n = scenario.snapshots;
    let a = steering_matrix(&scenario.geometry, &scenario.doas_deg)?;
    let p = scenario.source_covariance()?;
    let shaping = if q > 0 {
        Cholesky::new(p.into_matrix())
            .ok_or_else(|| Error::SingularCovariance("source covariance is not PD".into()))?
            .unpack()
    } else {
        CMatrix::zeros(0, 0)
    };
    let noise_scale: Vec<f64> = scenario.noise_diag.powers().iter().map(|s| s.sqrt()).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(run_seed(scenario.base_seed, run_index));
    let mut x = CMatrix::zeros(m, n);
    let mut z = CVector::zeros(q);
    for t in 0..n {
        for zi in z.iter_mut() {
            *zi = complex_normal(&mut rng);
        }
        let s = &shaping * &z;
        let mut col = &a * s;
        for (i, scale) in noise_scale.iter().enumerate() {
            col[i] += complex_normal(&mut rng) * *scale;
        }
        x.set_column(t, &col);
    }
    SnapshotMatrix::new(x)
}

/// `(1/N) X Xᴴ`.
pub fn sample_covariance(x: &SnapshotMatrix) -> HermitianMatrix {
    let data = x.as_matrix();
    let r = data * data.adjoint() * c(1.0 / x.snapshots() as f64);
    HermitianMatrix::from_symmetrized(r)
}

/// Per-source SNR `(sigma_s^2 / M) * sum_i 1/sigma_i^2`, linear scale.
pub fn snr_linear(scenario: &Scenario) -> f64 {
    scenario.source_power * mean_inverse_power(&scenario.noise_diag)
}

pub fn snr_db(scenario: &Scenario) -> f64 {
    10.0 * snr_linear(scenario).log10()
}

fn mean_inverse_power(noise: &NoiseDiag) -> f64 {
    noise.powers().iter().map(|s| 1.0 / s).sum::<f64>() / noise.len() as f64
}

/// Source power that yields `snr_db` for the given noise powers on `m` sensors.
pub fn required_sigma_s2(snr_db: f64, noise: &NoiseDiag, m: usize) -> f64 {
    let inv_sum: f64 = noise.powers().iter().map(|s| 1.0 / s).sum();
    10f64.powf(snr_db / 10.0) * m as f64 / inv_sum
}

/// Worst noise power ratio, `max sigma^2 / min sigma^2`.
pub fn wnpr(noise: &NoiseDiag) -> f64 {
    let max = noise.powers().iter().copied().fold(f64::MIN, f64::max);
    let min = noise.powers().iter().copied().fold(f64::MAX, f64::min);
    max / min
}
