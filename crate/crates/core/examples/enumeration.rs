//! Counts sources with AIC, MDL and EEF under each way of fitting the
//! hypothesized models.
//!
//! cargo run --release --example enumeration

use nusml::array_model::{synthesize_snapshots, ArrayGeometry, NoiseDiag, Scenario};
use nusml::enumeration::{enumerate_sources, Approach, EnumOptions};

fn main() -> nusml::Result<()> {
    let scenario = Scenario {
        geometry: ArrayGeometry::ula(6)?,
        doas_deg: vec![-5.0, 6.0],
        source_power: 1.0,
        correlation: 0.0,
        noise_diag: NoiseDiag::new(vec![9.0, 1.0, 25.0, 0.25, 6.25, 25.0])?,
        snapshots: 100,
        runs: 1,
        snr_grid_db: vec![],
        base_seed: 77,
    }
    .with_snr_db(15.0);
    let x = synthesize_snapshots(&scenario, 0)?;
    for approach in Approach::ALL {
        let res = enumerate_sources(&scenario.geometry, &x, approach, &EnumOptions::default())?;
        let profile: Vec<String> = res.profile.values.iter().map(|v| format!("{v:.3}")).collect();
        println!("approach {approach}: L' = [{}]", profile.join(", "));
        println!(
            "  AIC -> {}, MDL -> {}, EEF -> {}",
            res.q_hat_aic, res.q_hat_mdl, res.q_hat_eef
        );
    }
    Ok(())
}
