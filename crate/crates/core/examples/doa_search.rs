//! Estimates two closely spaced directions with SML and DML, each fed by
//! either noise estimator.
//!
//! cargo run --release --example doa_search

use nusml::array_model::{sample_covariance, synthesize_snapshots, ArrayGeometry, NoiseDiag, Scenario};
use nusml::doa::{estimate_doa, DoaMethod, SearchOptions};
use nusml::noise_cov::{ConfiguredEstimator, EstimatorKind, EstimatorOptions, NoiseEstimator};

fn main() -> nusml::Result<()> {
    let scenario = Scenario {
        geometry: ArrayGeometry::ula(6)?,
        doas_deg: vec![-3.0, 4.0],
        source_power: 1.0,
        correlation: 0.0,
        noise_diag: NoiseDiag::new(vec![9.0, 1.0, 25.0, 0.25, 6.25, 25.0])?,
        snapshots: 300,
        runs: 1,
        snr_grid_db: vec![],
        base_seed: 2024,
    }
    .with_snr_db(10.0);
    let r_hat = sample_covariance(&synthesize_snapshots(&scenario, 0)?);
    println!("true directions {:?}", scenario.doas_deg);

    for kind in [EstimatorKind::Imlse, EstimatorKind::Noniterative] {
        let estimator = ConfiguredEstimator { kind, options: EstimatorOptions::default() };
        let noise = estimator.estimate(&r_hat, 2)?;
        for method in [DoaMethod::Sml, DoaMethod::Dml] {
            let res = estimate_doa(
                &scenario.geometry,
                &r_hat,
                2,
                &noise.q_hat,
                method,
                &SearchOptions::default(),
            )?;
            let label = format!("{method}-{kind}");
            println!(
                "{label:<18} {:>8.3} {:>8.3}   criterion {:.4} after {} cycles",
                res.psi_hat_deg[0], res.psi_hat_deg[1], res.criterion_value, res.cycles
            );
        }
    }
    Ok(())
}
