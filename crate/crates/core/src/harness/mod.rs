//! End-to-end experiment runs: every method of a roster on one observation,
//! with logarithmically sampled iteration logs, reconstructions, SVG plots
//! and run metadata written to an output directory.

pub mod metrics;
pub mod plot;
pub mod spec;

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::algorithms::{Family, InsertionEvent, IterationRecord, Method, Problem, ResolvedSteps, Solver};
use crate::experiment::{generate_with_model, model_for, Experiment};
use crate::measures::DiscreteMeasure;
use metrics::{is_log_sample, process_cpu_seconds, relative_error};
use plot::{Plot, Scale, Series};
pub use spec::{ExperimentSpec, MethodSpec, DEFAULT_ITERATIONS};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
    #[error("every method failed: {}", .0.join("; "))]
    AllFailed(Vec<String>),
}

/// One logged iteration. Time columns come last so that runs can be compared
/// on the remaining columns.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct LogRow {
    pub k: usize,
    pub value: f64,
    pub rel_error: f64,
    pub spikes: usize,
    pub inner_iterations: usize,
    pub insert_calls: usize,
    pub inserted: usize,
    pub gamma_mass: f64,
    pub theta: f64,
    pub curvature_retries: usize,
    pub remainder_retries: usize,
    pub convexity_retries: usize,
    pub support_drops: usize,
    pub epsilon: f64,
    pub c_check: f64,
    pub quasi_slack: f64,
    pub certified: bool,
    pub merges: usize,
    pub cpu_seconds: f64,
    pub wall_seconds: f64,
}

/// Number of leading [`LogRow`] columns that do not depend on timing.
pub const DETERMINISTIC_COLUMNS: usize = 18;

impl LogRow {
    fn from_record(r: &IterationRecord, cpu_seconds: f64, wall_seconds: f64) -> Self {
        LogRow {
            k: r.k,
            value: r.value,
            rel_error: f64::NAN,
            spikes: r.spikes,
            inner_iterations: r.inner_iterations,
            insert_calls: r.insert_calls,
            inserted: r.inserted,
            gamma_mass: r.gamma_mass,
            theta: r.theta,
            curvature_retries: r.curvature_retries,
            remainder_retries: r.remainder_retries,
            convexity_retries: r.convexity_retries,
            support_drops: r.support_drops,
            epsilon: r.epsilon,
            c_check: r.c_check,
            quasi_slack: r.quasi_slack,
            certified: r.certified,
            merges: r.merges,
            cpu_seconds,
            wall_seconds,
        }
    }
}

/// Outcome of one method.
#[derive(Clone, Debug)]
pub struct MethodRun {
    pub method: Method,
    pub experimental: bool,
    pub steps: Option<ResolvedSteps>,
    /// Rows at `k = 0`, the logarithmic samples and the last iteration.
    pub log: Vec<LogRow>,
    /// `v(xᵏ)` for every `k`.
    pub values: Vec<f64>,
    /// Objective after the clean-up merge.
    pub final_value: f64,
    pub cleanup_merges: usize,
    /// Iterations with `v(μᵏ⁺¹) > v(μᵏ) + Č·εᵏ⁺¹` (sliding-step methods only).
    pub quasi_violations: usize,
    /// Final spikes as `(location, weight)`.
    pub reconstruction: Vec<(Vec<f64>, f64)>,
    pub bias: Option<Vec<f64>>,
    pub cpu_seconds: f64,
    pub wall_seconds: f64,
    pub error: Option<String>,
}

impl MethodRun {
    fn failed(method: Method, error: String) -> Self {
        MethodRun {
            method,
            experimental: method.is_experimental(),
            steps: None,
            log: Vec::new(),
            values: Vec::new(),
            final_value: f64::NAN,
            cleanup_merges: 0,
            quasi_violations: 0,
            reconstruction: Vec::new(),
            bias: None,
            cpu_seconds: 0.0,
            wall_seconds: 0.0,
            error: Some(error),
        }
    }

    pub fn succeeded(&self) -> bool {
        self.error.is_none()
    }

    pub fn final_spikes(&self) -> usize {
        self.reconstruction.len()
    }

    /// First logged `k` with relative error at most `level`.
    pub fn first_below(&self, level: f64) -> Option<usize> {
        self.log.iter().find(|r| r.rel_error <= level).map(|r| r.k)
    }
}

#[derive(Clone, Debug)]
pub struct RunArtifacts {
    pub out_dir: PathBuf,
    pub snr_db: f64,
    /// Shared initial objective `v(x⁰)`.
    pub v0: f64,
    /// Smallest objective over all iterates of all methods.
    pub v_min: f64,
    /// `v(x⁰) = v_min`; relative errors are then zero after `k = 0`.
    pub degenerate: bool,
    pub runs: Vec<MethodRun>,
    pub files: Vec<PathBuf>,
}

impl RunArtifacts {
    pub fn run(&self, method: Method) -> Option<&MethodRun> {
        self.runs.iter().find(|r| r.method == method)
    }
}

/// Runs one method for `iterations` steps. `observer` sees every insertion.
pub fn run_method<'a, const N: usize>(
    experiment: &'a Experiment<N>,
    method: &MethodSpec,
    iterations: usize,
    observer: Option<Box<dyn FnMut(&InsertionEvent<'_, N>) + 'a>>,
) -> MethodRun {
    let m = method.method;
    let outcome = catch_unwind(AssertUnwindSafe(|| {
        let mut problem = Problem::new(&experiment.model, &experiment.observation.b, experiment.params.alpha);
        if let Some(lambda) = experiment.params.lambda {
            problem = problem.with_bias(lambda);
        }
        let mut solver = Solver::new(problem, m, method.config).map_err(|e| e.to_string())?;
        if let Some(mut obs) = observer {
            solver.set_observer(move |e| obs(e));
        }
        let cpu0 = process_cpu_seconds();
        let wall0 = Instant::now();
        let mut log = vec![LogRow::from_record(&solver.initial_record(), 0.0, 0.0)];
        let mut values = vec![solver.state().value];
        let mut quasi_violations = 0;
        let checks_quasi = matches!(m.family(), Family::ForwardBackward | Family::BiasedPdps);
        for k in 1..=iterations {
            let rec = solver.step();
            if !rec.value.is_finite() {
                return Err(format!("nonfinite objective at iteration {k}"));
            }
            if checks_quasi && rec.quasi_slack < 0.0 {
                quasi_violations += 1;
            }
            values.push(rec.value);
            if is_log_sample(k) || k == iterations {
                log.push(LogRow::from_record(
                    &rec,
                    process_cpu_seconds() - cpu0,
                    wall0.elapsed().as_secs_f64(),
                ));
            }
        }
        let cleanup_merges = solver.finish();
        let state = solver.state();
        Ok(MethodRun {
            method: m,
            experimental: m.is_experimental(),
            steps: Some(solver.steps().clone()),
            log,
            values,
            final_value: state.value,
            cleanup_merges,
            quasi_violations,
            reconstruction: state.mu.spikes().iter().map(|s| (s.loc.to_vec(), s.weight)).collect(),
            bias: state.z.clone(),
            cpu_seconds: process_cpu_seconds() - cpu0,
            wall_seconds: wall0.elapsed().as_secs_f64(),
            error: None,
        })
    }));
    match outcome {
        Ok(Ok(run)) => run,
        Ok(Err(e)) => MethodRun::failed(m, e),
        Err(panic) => {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            MethodRun::failed(m, format!("panicked: {msg}"))
        }
    }
}

/// Fills in relative errors against the smallest value of all runs.
/// Returns `(v0, v_min, degenerate)`.
pub fn assign_relative_errors(runs: &mut [MethodRun]) -> (f64, f64, bool) {
    let ok = || runs.iter().filter(|r| r.succeeded());
    let v0 = ok().find_map(|r| r.values.first().copied()).unwrap_or(f64::NAN);
    let v_min = ok().flat_map(|r| r.values.iter().copied()).fold(f64::INFINITY, f64::min);
    let mut degenerate = false;
    for run in runs.iter_mut() {
        let values: Vec<f64> = run.log.iter().map(|r| r.value).collect();
        let (e, d) = relative_error(&values, v0, v_min);
        degenerate |= d;
        for (row, e) in run.log.iter_mut().zip(e) {
            row.rel_error = e;
        }
        // e⁰ = 1 by definition, also when the series is degenerate.
        if let Some(first) = run.log.first_mut() {
            first.rel_error = 1.0;
        }
    }
    (v0, v_min, degenerate)
}

/// Runs every method of `spec` on one generated observation and writes the
/// artifacts to `out_dir`. Fails only if the configuration is invalid, the
/// output cannot be written or every method fails.
pub fn run_experiment(spec: &ExperimentSpec, out_dir: &Path) -> Result<RunArtifacts, HarnessError> {
    spec.validate()?;
    fs::create_dir_all(out_dir)?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(spec.threads).build()?;
    match spec.kind.dim() {
        1 => pool.install(|| run_dim::<1>(spec, out_dir)),
        _ => pool.install(|| run_dim::<2>(spec, out_dir)),
    }
}

fn run_dim<const N: usize>(spec: &ExperimentSpec, out_dir: &Path) -> Result<RunArtifacts, HarnessError> {
    let experiment = generate_with_model::<N>(spec.kind, spec.seed, model_for(spec.kind), spec.params);
    let mut runs: Vec<MethodRun> = spec.methods.iter().map(|m| run_method(&experiment, m, spec.iterations, None)).collect();
    let failures: Vec<String> =
        runs.iter().filter_map(|r| r.error.as_ref().map(|e| format!("{}: {e}", r.method))).collect();
    if failures.len() == runs.len() {
        return Err(HarnessError::AllFailed(failures));
    }
    let (v0, v_min, degenerate) = assign_relative_errors(&mut runs);
    let mut artifacts = RunArtifacts {
        out_dir: out_dir.to_path_buf(),
        snr_db: experiment.observation.snr_db(),
        v0,
        v_min,
        degenerate,
        runs,
        files: Vec::new(),
    };
    write_artifacts(spec, &experiment, &mut artifacts)?;
    Ok(artifacts)
}

fn write_artifacts<const N: usize>(
    spec: &ExperimentSpec,
    experiment: &Experiment<N>,
    art: &mut RunArtifacts,
) -> Result<(), HarnessError> {
    let dir = art.out_dir.clone();
    let mut files = Vec::new();
    let mut put = |name: &str, text: String| -> Result<(), HarnessError> {
        let path = dir.join(name);
        fs::write(&path, text)?;
        files.push(path);
        Ok(())
    };

    put("spec.toml", spec.to_toml())?;
    put("observation.csv", observation_csv(experiment)?)?;
    put("truth.csv", measure_csv(&experiment.truth)?)?;
    if let Some(z) = &experiment.truth_bias {
        put("truth_bias.csv", vector_csv(z)?)?;
    }
    for run in art.runs.iter().filter(|r| r.succeeded()) {
        let name = run.method.name();
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &run.log {
            w.serialize(row)?;
        }
        put(&format!("{name}_iterations.csv"), into_string(w)?)?;
        let mut w = csv::Writer::from_writer(Vec::new());
        let header: Vec<String> = (1..=N).map(|i| format!("x{i}")).chain(["weight".to_string()]).collect();
        w.write_record(&header)?;
        for (loc, weight) in &run.reconstruction {
            w.write_record(loc.iter().chain([weight]).map(|v| v.to_string()))?;
        }
        put(&format!("{name}_reconstruction.csv"), into_string(w)?)?;
        if let Some(z) = &run.bias {
            put(&format!("{name}_bias.csv"), vector_csv(z)?)?;
        }
    }

    let ok: Vec<&MethodRun> = art.runs.iter().filter(|r| r.succeeded()).collect();
    let series = |f: &dyn Fn(&LogRow) -> (f64, f64)| -> Vec<Series> {
        ok.iter().map(|r| Series { label: r.method.name().into(), points: r.log.iter().map(f).collect() }).collect()
    };
    let title = format!("{} (seed {})", spec.kind, spec.seed);
    let plots = [
        ("objective_vs_iteration.svg", "iteration", "relative error", series(&|r| (r.k as f64, r.rel_error))),
        ("objective_vs_cpu_time.svg", "CPU time (s)", "relative error", series(&|r| (r.cpu_seconds, r.rel_error))),
        ("spikes_vs_iteration.svg", "iteration", "spikes", series(&|r| (r.k as f64, r.spikes as f64))),
    ];
    for (file, x_label, y_label, series) in plots {
        let plot = Plot {
            title: title.clone(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            x_scale: Scale::Log,
            y_scale: Scale::Log,
            series,
        };
        put(file, plot.to_svg())?;
    }

    put("metadata.toml", metadata_toml(spec, art))?;
    art.files = files;
    Ok(())
}

#[derive(Serialize)]
struct Metadata<'a> {
    kind: String,
    seed: u64,
    iterations: usize,
    threads: usize,
    snr_db: f64,
    noise: &'static str,
    v0: f64,
    v_min: f64,
    degenerate: bool,
    methods: Vec<MethodMetadata<'a>>,
}

#[derive(Serialize)]
struct MethodMetadata<'a> {
    method: &'static str,
    experimental: bool,
    ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<&'a str>,
    final_value: f64,
    final_spikes: usize,
    cleanup_merges: usize,
    quasi_violations: usize,
    cpu_seconds: f64,
    wall_seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    steps: Option<&'a ResolvedSteps>,
}

fn metadata_toml(spec: &ExperimentSpec, art: &RunArtifacts) -> String {
    let meta = Metadata {
        kind: spec.kind.to_string(),
        seed: spec.seed,
        iterations: spec.iterations,
        threads: spec.threads,
        snr_db: art.snr_db,
        noise: "ChaCha20 seeded from the run seed, Box-Muller normals",
        v0: art.v0,
        v_min: art.v_min,
        degenerate: art.degenerate,
        methods: art
            .runs
            .iter()
            .map(|r| MethodMetadata {
                method: r.method.name(),
                experimental: r.experimental,
                ok: r.succeeded(),
                error: r.error.as_deref(),
                final_value: r.final_value,
                final_spikes: r.final_spikes(),
                cleanup_merges: r.cleanup_merges,
                quasi_violations: r.quasi_violations,
                cpu_seconds: r.cpu_seconds,
                wall_seconds: r.wall_seconds,
                steps: r.steps.as_ref(),
            })
            .collect(),
    };
    toml::to_string_pretty(&meta).expect("metadata serialises")
}

fn into_string(w: csv::Writer<Vec<u8>>) -> Result<String, HarnessError> {
    let bytes = w.into_inner().map_err(|e| HarnessError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn measure_csv<const N: usize>(mu: &DiscreteMeasure<N>) -> Result<String, HarnessError> {
    let mut buf = Vec::new();
    mu.write_csv(&mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

fn vector_csv(z: &[f64]) -> Result<String, HarnessError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["index", "value"])?;
    for (i, v) in z.iter().enumerate() {
        w.write_record([i.to_string(), v.to_string()])?;
    }
    into_string(w)
}

fn observation_csv<const N: usize>(e: &Experiment<N>) -> Result<String, HarnessError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let header: Vec<String> =
        (1..=N).map(|i| format!("x{i}")).chain(["clean".to_string(), "observed".to_string()]).collect();
    w.write_record(&header)?;
    for ((c, clean), b) in e.model.centers().iter().zip(&e.observation.clean).zip(&e.observation.b) {
        w.write_record(c.iter().chain([clean, b]).map(|v| v.to_string()))?;
    }
    into_string(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::ExperimentKind;

    #[test]
    fn zero_iterations_give_initial_rows() {
        let dir = tempfile::tempdir().unwrap();
        let spec = ExperimentSpec::new(ExperimentKind::Fast1d, 3).with_iterations(0);
        let art = run_experiment(&spec, dir.path()).unwrap();
        assert!(art.degenerate);
        for run in &art.runs {
            assert_eq!(run.log.len(), 1);
            assert_eq!(run.log[0].k, 0);
            assert_eq!(run.log[0].rel_error, 1.0);
        }
        assert!(dir.path().join("metadata.toml").exists());
        assert!(dir.path().join("objective_vs_iteration.svg").exists());
    }

    #[test]
    fn relative_errors_use_global_minimum() {
        let mk = |values: Vec<f64>| {
            let mut r = MethodRun::failed(Method::MuFb, String::new());
            r.error = None;
            r.log = values.iter().enumerate().map(|(k, &value)| LogRow { k, value, ..LogRow::default() }).collect();
            r.values = values;
            r
        };
        let mut runs = vec![mk(vec![4.0, 3.0, 2.0]), mk(vec![4.0, 1.0, 0.0])];
        let (v0, v_min, degenerate) = assign_relative_errors(&mut runs);
        assert_eq!((v0, v_min, degenerate), (4.0, 0.0, false));
        let e: Vec<f64> = runs[0].log.iter().map(|r| r.rel_error).collect();
        assert_eq!(e, vec![1.0, 0.75, 0.5]);
    }
}
