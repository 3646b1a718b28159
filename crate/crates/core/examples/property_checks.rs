// Cross-checks of the building blocks against slow reference solvers.
//
// ```bash
// cargo run --release --example property_checks
// ```

use spikeslide::verify::property_suite;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let outcomes = property_suite();
    for o in &outcomes {
        println!("{o}");
    }
    let failed: Vec<_> = outcomes.iter().filter(|o| !o.passed).map(|o| o.name.clone()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(format!("failed: {}", failed.join(", ")).into())
    }
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
