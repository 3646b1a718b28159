// Driving the sliding forward-backward solver step by step.
//
// ```bash
// cargo run --release --example sliding_solver
// ```

use spikeslide::algorithms::{Method, Problem, Solver, StepConfig};
use spikeslide::experiment::{generate_experiment, ExperimentKind};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let e = generate_experiment::<1>(ExperimentKind::Fast1d, 1);
    let problem = Problem::new(&e.model, &e.observation.b, e.params.alpha);
    let mut solver = Solver::new(problem, Method::Sfb, StepConfig::defaults(Method::Sfb, 1))?;
    let steps = solver.steps();
    println!("τ = {:.4}, θ₀ = {}, L = {:.3}, step inequalities hold: {}", steps.tau, steps.theta0, steps.l, steps.all_hold());

    let r0 = solver.initial_record();
    println!("k {:>3}  v {:.6}", r0.k, r0.value);
    for _ in 0..60 {
        let r = solver.step();
        if r.k % 10 == 0 {
            println!(
                "k {:>3}  v {:.6}  spikes {:>2}  |γ| {:.3}  ε {:.2e}  slack {:+.2e}",
                r.k, r.value, r.spikes, r.gamma_mass, r.epsilon, r.quasi_slack
            );
        }
        assert!(r.quasi_slack >= 0.0);
    }
    let merged = solver.finish();
    let mu = &solver.state().mu;
    println!("after clean-up ({merged} merges): {} spikes", mu.len());
    for s in mu.spikes() {
        println!("  x = {:.4}  w = {:.4}", s.loc[0], s.weight);
    }
    println!("truth: {:?}", e.truth.spikes().iter().map(|s| (s.loc[0], s.weight)).collect::<Vec<_>>());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
