//! Builds the six-sensor scenario with strongly nonuniform noise, draws
//! snapshots and compares the sample covariance with the model.
//!
//! cargo run --release --example signal_model

use nusml::array_model::{
    sample_covariance, snr_db, steering_matrix, synthesize_snapshots, wnpr, ArrayGeometry,
    NoiseDiag, Scenario,
};

fn main() -> nusml::Result<()> {
    let geometry = ArrayGeometry::ula(6)?;
    let a = steering_matrix(&geometry, &[-3.0, 4.0])?;
    println!("steering matrix (columns at -3 and 4 degrees):\n{a:.3}");

    let scenario = Scenario {
        geometry,
        doas_deg: vec![-3.0, 4.0],
        source_power: 1.0,
        correlation: 0.0,
        noise_diag: NoiseDiag::new(vec![9.0, 1.0, 25.0, 0.25, 6.25, 25.0])?,
        snapshots: 300,
        runs: 1,
        snr_grid_db: vec![],
        base_seed: 11,
    }
    .with_snr_db(10.0);
    println!(
        "SNR {:.2} dB, worst-to-best noise power ratio {}",
        snr_db(&scenario),
        wnpr(&scenario.noise_diag)
    );

    let r = scenario.model_covariance()?;
    for n in [30, 300, 30_000] {
        let s = Scenario { snapshots: n, ..scenario.clone() };
        let r_hat = sample_covariance(&synthesize_snapshots(&s, 0)?);
        let err = (r_hat.as_matrix() - r.as_matrix()).norm() / r.as_matrix().norm();
        println!("N = {n:>6}: relative Frobenius error {err:.4}");
    }
    Ok(())
}
