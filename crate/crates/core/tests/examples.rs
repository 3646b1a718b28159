mod measures_example {
    #![allow(dead_code)]
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/measures.rs"));
}

#[test]
fn measures_example_runs() {
    measures_example::run_example().expect("measures example should run");
}

mod spread_kernels_example {
    #![allow(dead_code)]
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/spread_kernels.rs"));
}

#[test]
fn spread_kernels_example_runs() {
    spread_kernels_example::run_example().expect("spread_kernels example should run");
}

mod forward_model_example {
    #![allow(dead_code)]
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/forward_model.rs"));
}

#[test]
fn forward_model_example_runs() {
    forward_model_example::run_example().expect("forward_model example should run");
}

mod weight_subproblem_example {
    #![allow(dead_code)]
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/weight_subproblem.rs"));
}

#[test]
fn weight_subproblem_example_runs() {
    weight_subproblem_example::run_example().expect("weight_subproblem example should run");
}

mod branch_and_bound_example {
    #![allow(dead_code)]
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/branch_and_bound.rs"));
}

#[test]
fn branch_and_bound_example_runs() {
    branch_and_bound_example::run_example().expect("branch_and_bound example should run");
}

mod sliding_solver_example {
    #![allow(dead_code)]
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/sliding_solver.rs"));
}

#[test]
fn sliding_solver_example_runs() {
    sliding_solver_example::run_example().expect("sliding_solver example should run");
}

mod compare_methods_example {
    #![allow(dead_code)]
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/compare_methods.rs"));
}

#[test]
fn compare_methods_example_runs() {
    compare_methods_example::run_example().expect("compare_methods example should run");
}

mod biased_problem_example {
    #![allow(dead_code)]
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/biased_problem.rs"));
}

#[test]
fn biased_problem_example_runs() {
    biased_problem_example::run_example().expect("biased_problem example should run");
}

mod harness_run_example {
    #![allow(dead_code)]
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/harness_run.rs"));
}

#[test]
fn harness_run_example_runs() {
    harness_run_example::run_example().expect("harness_run example should run");
}

mod property_checks_example {
    #![allow(dead_code)]
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/property_checks.rs"));
}

#[test]
fn property_checks_example_runs() {
    property_checks_example::run_example().expect("property_checks example should run");
}
