//! Evaluates the concentrated likelihood along a one-source scan and checks
//! it against the full likelihood at the closed-form signal power.
//!
//! cargo run --release --example likelihood

use nusml::array_model::{sample_covariance, synthesize_snapshots, ArrayGeometry, NoiseDiag, Scenario};
use nusml::likelihood::{concentrated_criterion, estimate_p, lprime_full, zero_source_fit};

fn main() -> nusml::Result<()> {
    let scenario = Scenario {
        geometry: ArrayGeometry::ula(6)?,
        doas_deg: vec![4.0],
        source_power: 1.0,
        correlation: 0.0,
        noise_diag: NoiseDiag::new(vec![9.0, 1.0, 25.0, 0.25, 6.25, 25.0])?,
        snapshots: 200,
        runs: 1,
        snr_grid_db: vec![],
        base_seed: 3,
    }
    .with_snr_db(5.0);
    let r_hat = sample_covariance(&synthesize_snapshots(&scenario, 0)?);
    let (g, q) = (&scenario.geometry, &scenario.noise_diag);

    let (_, l0) = zero_source_fit(&r_hat)?;
    println!("no sources: L' = {l0:.4}");
    println!("  psi     L'(psi)   P_hat   full L' at P_hat");
    for psi in [-40.0, -10.0, 0.0, 3.0, 4.0, 5.0, 10.0, 40.0] {
        let concentrated = concentrated_criterion(g, &[psi], q, &r_hat)?;
        let p = estimate_p(g, &[psi], q, &r_hat)?;
        let full = lprime_full(g, &[psi], &p, q, &r_hat)?;
        println!(
            "{psi:6.1}  {concentrated:9.4}  {:6.3}  {full:9.4}",
            p.as_matrix()[(0, 0)].re
        );
    }
    Ok(())
}
