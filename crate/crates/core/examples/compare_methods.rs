// Runs every applicable method on the same problem and compares values.
//
// ```bash
// cargo run --release --example compare_methods
// ```

use spikeslide::algorithms::Method;
use spikeslide::experiment::{generate_experiment, ExperimentKind};
use spikeslide::harness::{assign_relative_errors, run_method, MethodSpec};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let kind = ExperimentKind::Fast1d;
    let e = generate_experiment::<1>(kind, 2);
    let mut runs: Vec<_> = Method::roster(kind)
        .into_iter()
        .map(|m| run_method(&e, &MethodSpec::defaults(m, kind), 150, None))
        .collect();
    let (v0, v_min, _) = assign_relative_errors(&mut runs);
    println!("v⁰ = {v0:.6}, best value seen {v_min:.6}");
    for r in &runs {
        if let Some(err) = &r.error {
            println!("{:<10} failed: {err}", r.method.name());
            continue;
        }
        let last = r.log.last().expect("log has the initial row");
        println!(
            "{:<10} v {:.6}  rel. error {:.2e}  spikes {:>2}  cpu {:.3} s",
            r.method.name(),
            r.final_value,
            last.rel_error,
            r.final_spikes(),
            r.cpu_seconds
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
