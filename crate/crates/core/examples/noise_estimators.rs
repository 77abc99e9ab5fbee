//! Compares the iterative and the one-shot noise estimators on uncorrelated
//! and on highly correlated sources.
//!
//! cargo run --release --example noise_estimators

use nusml::array_model::{sample_covariance, synthesize_snapshots, ArrayGeometry, NoiseDiag, Scenario};
use nusml::noise_cov::{imlse_estimate, noniterative_estimate, EstimatorOptions};

fn fmt(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:7.3}")).collect::<Vec<_>>().join(" ")
}

fn main() -> nusml::Result<()> {
    let truth = NoiseDiag::new(vec![9.0, 1.0, 25.0, 0.25, 6.25, 25.0])?;
    let opts = EstimatorOptions::default();
    println!("truth        {}", fmt(truth.powers()));
    for rho in [0.0, 0.95] {
        let scenario = Scenario {
            geometry: ArrayGeometry::ula(6)?,
            doas_deg: vec![-3.0, 4.0],
            source_power: 1.0,
            correlation: rho,
            noise_diag: truth.clone(),
            snapshots: 300,
            runs: 1,
            snr_grid_db: vec![],
            base_seed: 5,
        }
        .with_snr_db(0.0);
        let r_hat = sample_covariance(&synthesize_snapshots(&scenario, 0)?);
        let it = imlse_estimate(&r_hat, 2, &opts)?;
        let one = noniterative_estimate(&r_hat, 2, &opts)?;
        println!("rho = {rho}");
        println!(
            "  iterative  {}  ({} iterations, converged: {})",
            fmt(it.q_hat.powers()),
            it.iterations,
            it.converged
        );
        println!("  one-shot   {}", fmt(one.q_hat.powers()));
    }
    Ok(())
}
