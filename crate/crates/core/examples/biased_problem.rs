// Joint recovery of spikes and a piecewise-constant bias with sliding PDPS.
//
// The total-variation weight decides how much of the data the bias may
// absorb; a small weight lets it explain the spikes too.
//
// ```bash
// cargo run --release --example biased_problem
// ```

use spikeslide::algorithms::{GradientOperator, Method, Problem, Solver, StepConfig};
use spikeslide::experiment::{generate_experiment, ExperimentKind};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let e = generate_experiment::<1>(ExperimentKind::Biased1d, 4);
    let grad = GradientOperator::new([e.model.sensor_count()]);
    let truth = e.truth_bias.as_ref().expect("true bias");
    println!("true bias TV {:.3}, {} true spikes", grad.tv(truth), e.truth.len());

    let default_lambda = e.params.lambda.expect("biased experiment has a TV weight");
    for lambda in [default_lambda, 0.5] {
        let problem = Problem::new(&e.model, &e.observation.b, e.params.alpha).with_bias(lambda);
        let mut solver = Solver::new(problem, Method::Spdps, StepConfig::defaults(Method::Spdps, 1))?;
        for _ in 0..1000 {
            solver.step();
        }
        solver.finish();
        let state = solver.state();
        let z = state.z.as_ref().expect("bias estimate");
        let err = z.iter().zip(truth).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        println!(
            "λ = {lambda}: value {:.6}, {} spikes, TV(z) {:.3}, max |z − bias| {err:.3}",
            state.value,
            state.mu.len(),
            grad.tv(z)
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
