// Discrete measures, transport plans and the unbalanced transport cost.
//
// ```bash
// cargo run --release --example measures
// ```

use spikeslide::kernels::fast_spread_pair;
use spikeslide::measures::{
    d_norm_sq, radon_norm, v_cost, DiscreteMeasure, Domain, MarginalEnergy, Sign, TransportPlan,
};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let domain = Domain::<1>::unit();
    let diam = domain.diameter();

    let mu = DiscreteMeasure::from_spikes([([0.2], 1.0), ([0.5], 0.5), ([0.5], 0.25)], Sign::Nonnegative)?;
    let mu = mu.prune(diam);
    println!("μ = {:?}", mu.spikes());
    assert_eq!(mu.len(), 2, "coincident spikes are combined");

    let nu = DiscreteMeasure::from_spikes([([0.25], 1.0), ([0.8], 0.25)], Sign::Nonnegative)?;
    println!("‖μ‖ = {:.3}, ‖ν‖ = {:.3}", radon_norm(&mu, diam), radon_norm(&nu, diam));

    // negative weights are rejected for nonnegative measures
    assert!(DiscreteMeasure::<1>::from_spikes([([0.1], -1.0)], Sign::Nonnegative).is_err());

    let (_, rho) = fast_spread_pair::<1>(0.05);
    let diff = nu.sub(&mu, diam);
    println!("‖ν − μ‖²_𝒟 = {:.6}", d_norm_sq(&diff, &rho)?);

    // move the spike at 0.2 to 0.25 and leave the rest to the marginal energy
    let mut gamma = TransportPlan::empty();
    gamma.push([0.2], [0.25], 1.0);
    for (name, energy) in [("radon", MarginalEnergy::RadonSquared), ("𝒟", MarginalEnergy::DSquared(rho))] {
        let with_plan = v_cost(&mu, &nu, &gamma, &energy, 1.0, 1.0, diam);
        let without = v_cost(&mu, &nu, &TransportPlan::empty(), &energy, 1.0, 1.0, diam);
        println!("{name:>5} energy: cost with plan {with_plan:.6}, without {without:.6}");
    }

    let mut csv = Vec::new();
    mu.write_csv(&mut csv)?;
    let back = DiscreteMeasure::<1>::read_csv(csv.as_slice(), Sign::Nonnegative)?;
    assert_eq!(back, mu);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
