//! Stochastic maximum-likelihood direction finding and source enumeration
//! for sensor arrays with spatially white but nonuniform noise.
//!
//! The crate is organized bottom-up:
//!
//! * [`array_model`]: geometry, steering vectors, scenarios and synthetic data.
//! * [`likelihood`]: the concentrated likelihood, closed-form signal covariance
//!   and the zero-source fit.
//! * [`noise_cov`]: iterative and noniterative noise covariance estimators.
//! * [`doa`]: SML and DML angle search with a plug-in noise estimate.
//! * [`enumeration`]: AIC, MDL and EEF source enumeration.
//! * [`harness`]: seeded Monte Carlo benchmarks and CSV output.
//!
//! ```
//! use nusml::array_model::{sample_covariance, synthesize_snapshots, ArrayGeometry, NoiseDiag, Scenario};
//! use nusml::doa::{estimate_doa, DoaMethod, SearchOptions};
//! use nusml::noise_cov::{imlse_estimate, EstimatorOptions};
//!
//! let scenario = Scenario {
//!     geometry: ArrayGeometry::ula(6).unwrap(),
//!     doas_deg: vec![-3.0, 4.0],
//!     source_power: 1.0,
//!     correlation: 0.0,
//!     noise_diag: NoiseDiag::new(vec![9.0, 1.0, 25.0, 0.25, 6.25, 25.0]).unwrap(),
//!     snapshots: 300,
//!     runs: 1,
//!     snr_grid_db: vec![],
//!     base_seed: 7,
//! }
//! .with_snr_db(20.0);
//! let r_hat = sample_covariance(&synthesize_snapshots(&scenario, 0).unwrap());
//! let noise = imlse_estimate(&r_hat, 2, &EstimatorOptions::default()).unwrap();
//! let doa = estimate_doa(&scenario.geometry, &r_hat, 2, &noise.q_hat, DoaMethod::Sml,
//!                        &SearchOptions::default()).unwrap();
//! assert!((doa.psi_hat_deg[0] + 3.0).abs() < 1.0);
//! ```

pub mod array_model;
pub mod doa;
pub mod enumeration;
pub mod error;
pub mod harness;
pub mod likelihood;
pub mod linalg;
pub mod noise_cov;

pub use error::{Error, Result};
