// Sensor-grid forward operator, its preadjoint and a synthetic experiment.
//
// ```bash
// cargo run --release --example forward_model
// ```

use spikeslide::experiment::{generate_experiment, ExperimentKind};
use spikeslide::forward::{half_sq_norm, ForwardModel};
use spikeslide::measures::{DiscreteMeasure, Domain, Sign};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let model = ForwardModel::<1>::sensor_grid(Domain::unit(), [100], 0.05);
    let mu = DiscreteMeasure::from_spikes([([0.3], 1.0), ([0.7], 2.0)], Sign::Nonnegative)?;
    let a_mu = model.apply_a(&mu);
    println!("{} sensors, ‖Aμ‖²/2 = {:.4}", model.sensor_count(), half_sq_norm(&a_mu));

    // ⟨Aμ, z⟩ = ∫ A*z dμ
    let z: Vec<f64> = (0..model.sensor_count()).map(|i| (i as f64 * 0.1).sin()).collect();
    let lhs: f64 = a_mu.iter().zip(&z).map(|(a, b)| a * b).sum();
    let rhs: f64 = mu.spikes().iter().map(|s| s.weight * model.preadjoint_apply(&z, &s.loc)).sum();
    println!("⟨Aμ, z⟩ = {lhs:.10}, ∫A*z dμ = {rhs:.10}");
    assert!((lhs - rhs).abs() < 1e-10);
    println!("estimated L = {:.4}", model.estimate_l(2000)?);

    let e = generate_experiment::<2>(ExperimentKind::Fast2d, 3);
    println!(
        "{}: {} true spikes, {} sensors, α = {}, SNR {:.2} dB",
        e.kind,
        e.truth.len(),
        e.model.sensor_count(),
        e.params.alpha,
        e.observation.snr_db()
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
