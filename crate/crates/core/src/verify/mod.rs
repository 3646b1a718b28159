//! Property and acceptance suites, shared by the `check` command and the
//! integration tests.

pub mod checks;
pub mod oracles;

use std::cell::RefCell;
use std::fmt;
use std::path::Path;
use std::rc::Rc;
use std::time::Instant;

use rayon::prelude::*;

use crate::algorithms::{InsertionEvent, Method, Problem, Solver, StepConfig};
use crate::experiment::{generate_experiment, ExperimentKind};
use crate::harness::metrics::log_log_slope;
use crate::harness::{assign_relative_errors, run_experiment, run_method, ExperimentSpec, MethodRun, MethodSpec};
use crate::measures::{dist, Sign, DEDUP_TOLERANCE};

#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        CheckOutcome { name: name.into(), passed, detail: detail.into() }
    }
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

/// Dense-scan statistics of insertion certificates.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CertificateScan {
    pub scanned: usize,
    pub skipped_bootstrap: usize,
    pub violations: usize,
    /// Smallest `(min_grid + ε + slack)` seen; negative means a violation.
    pub worst_margin: f64,
    pub seconds: f64,
}

impl CertificateScan {
    /// Scans `τv̌ + τα + 𝒟(μ − μ̌)` on `points` grid points of `[0, 1]`.
    pub fn observe(&mut self, event: &InsertionEvent<'_, 1>, points: usize) {
        let Some(cert) = &event.insertion.certificate else { return };
        if event.bootstrap {
            self.skipped_bootstrap += 1;
            return;
        }
        let t = Instant::now();
        let h = 1.0 / (points - 1) as f64;
        let min = (0..points).into_par_iter().map(|i| cert.eval(&[i as f64 * h])).reduce(|| f64::INFINITY, f64::min);
        let slack = cert.global_lipschitz().0 * h / 2.0;
        let margin = min + event.insertion.eps + slack;
        if self.scanned == 0 || margin < self.worst_margin {
            self.worst_margin = margin;
        }
        self.scanned += 1;
        if margin < 0.0 {
            self.violations += 1;
        }
        self.seconds += t.elapsed().as_secs_f64();
    }
}

/// The shared fast1d run behind the first five acceptance criteria.
#[derive(Clone, Debug)]
pub struct Fast1dRun {
    pub iterations: usize,
    pub runs: Vec<MethodRun>,
    /// Per method, excluding time spent in the certificate scans.
    pub solver_seconds: Vec<(Method, f64)>,
    pub scans: Vec<(Method, CertificateScan)>,
    pub v0: f64,
    pub v_min: f64,
}

pub const SCAN_POINTS: usize = 10_000;

impl Fast1dRun {
    pub fn execute(iterations: usize, seed: u64) -> Self {
        let kind = ExperimentKind::Fast1d;
        let experiment = generate_experiment::<1>(kind, seed);
        let mut runs = Vec::new();
        let mut scans = Vec::new();
        let mut solver_seconds = Vec::new();
        for method in Method::roster(kind) {
            let scan = Rc::new(RefCell::new(CertificateScan::default()));
            let sink = Rc::clone(&scan);
            let observer = Box::new(move |e: &InsertionEvent<'_, 1>| sink.borrow_mut().observe(e, SCAN_POINTS));
            let run = run_method(&experiment, &MethodSpec::defaults(method, kind), iterations, Some(observer));
            let scan = scan.borrow().clone();
            solver_seconds.push((method, run.wall_seconds - scan.seconds));
            scans.push((method, scan));
            runs.push(run);
        }
        let (v0, v_min, _) = assign_relative_errors(&mut runs);
        Fast1dRun { iterations, runs, solver_seconds, scans, v0, v_min }
    }

    pub fn run(&self, method: Method) -> &MethodRun {
        self.runs.iter().find(|r| r.method == method).expect("method in roster")
    }

    fn seconds(&self, method: Method) -> f64 {
        self.solver_seconds.iter().find(|s| s.0 == method).map_or(f64::NAN, |s| s.1)
    }

    /// First iteration with relative error at most `level`, over all iterates.
    pub fn iterations_to(&self, method: Method, level: f64) -> Option<usize> {
        let span = self.v0 - self.v_min;
        self.run(method).values.iter().position(|v| (v - self.v_min) <= level * span)
    }
}

const FB_FAMILY: [Method; 4] = [Method::MuFb, Method::Sfb, Method::Radon2Fb, Method::Radon2Sfb];
const RUNTIME_LIMIT: f64 = 300.0;

pub fn quasi_monotonicity(run: &Fast1dRun) -> CheckOutcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for m in FB_FAMILY {
        let r = run.run(m);
        let secs = run.seconds(m);
        ok &= r.succeeded() && r.quasi_violations == 0 && secs <= RUNTIME_LIMIT;
        parts.push(format!("{m} {} violations in {:.0} s", r.quasi_violations, secs));
    }
    CheckOutcome::new(
        "1 quasi-monotonicity",
        ok,
        format!("{} iterations: {} (limit {RUNTIME_LIMIT} s per method)", run.iterations, parts.join(", ")),
    )
}

pub fn insertion_certificates(run: &Fast1dRun) -> CheckOutcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for (m, s) in &run.scans {
        if s.scanned + s.skipped_bootstrap == 0 {
            continue;
        }
        ok &= s.violations == 0;
        parts.push(format!(
            "{m} {} scans, {} violations, min margin {:.2e} ({} bootstrap calls skipped)",
            s.scanned, s.violations, s.worst_margin, s.skipped_bootstrap
        ));
    }
    CheckOutcome::new("2 insertion certificate", ok && !parts.is_empty(), format!("{SCAN_POINTS}-point scans: {}", parts.join("; ")))
}

pub fn decay_rate(run: &Fast1dRun) -> CheckOutcome {
    let r = run.run(Method::Sfb);
    let span = run.v0 - run.v_min;
    let points: Vec<(f64, f64)> = (10..=1000.min(run.iterations))
        .filter(|k| crate::harness::metrics::is_log_sample(*k))
        .map(|k| (k as f64, (r.values[k] - run.v_min) / span))
        .collect();
    let slope = log_log_slope(points.iter().copied());
    let secs_1000 = r.log.iter().filter(|row| row.k <= 1000).map(|row| row.wall_seconds).fold(0.0, f64::max);
    let ok = slope.is_some_and(|s| s <= -0.8) && secs_1000 <= RUNTIME_LIMIT;
    CheckOutcome::new(
        "3 decay rate",
        ok,
        format!(
            "sfb slope of log e against log k over k in [10, 1000]: {} (limit -0.8), {} samples, {:.0} s",
            slope.map_or("undefined".into(), |s| format!("{s:.3}")),
            points.len(),
            secs_1000
        ),
    )
}

pub fn cross_method_agreement(run: &Fast1dRun) -> CheckOutcome {
    let methods = [Method::MuFb, Method::Sfb, Method::Fwf, Method::Radon2Fb, Method::Radon2Sfb];
    let values: Vec<(Method, f64)> = methods.iter().map(|&m| (m, run.run(m).final_value)).collect();
    let best = values.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
    let worst = values.iter().map(|v| (v.1 - best) / best.abs()).fold(0.0, f64::max);
    let ok = values.iter().all(|v| v.1.is_finite()) && worst <= 0.01;
    let list: Vec<String> = values.iter().map(|(m, v)| format!("{m} {v:.6}")).collect();
    CheckOutcome::new("4 cross-method agreement", ok, format!("{}; largest relative gap {worst:.2e} (limit 1e-2)", list.join(", ")))
}

pub fn sliding_advantage(run: &Fast1dRun) -> CheckOutcome {
    let k = |m| run.iterations_to(m, 1e-2);
    let (s, f, w) = (k(Method::Sfb), k(Method::MuFb), k(Method::Fwf));
    let show = |v: Option<usize>| v.map_or("never".into(), |v| v.to_string());
    let ok = match s {
        Some(s) => f.is_none_or(|f| s < f) && w.is_none_or(|w| s < w),
        None => false,
    };
    CheckOutcome::new(
        "5 sliding advantage",
        ok,
        format!("iterations to e <= 1e-2: sfb {}, mufb {}, fwf {}", show(s), show(f), show(w)),
    )
}

/// Iteration CSVs of two runs, with the time columns cut off.
fn deterministic_csvs(dir: &Path) -> Vec<(String, Vec<String>)> {
    let mut out: Vec<(String, Vec<String>)> = std::fs::read_dir(dir)
        .map(|it| {
            it.filter_map(|e| e.ok())
                .map(|e| e.path())
                .filter(|p| p.to_string_lossy().ends_with("_iterations.csv"))
                .map(|p| {
                    let text = std::fs::read_to_string(&p).unwrap_or_default();
                    let rows = text
                        .lines()
                        .map(|l| l.split(',').take(crate::harness::DETERMINISTIC_COLUMNS).collect::<Vec<_>>().join(","))
                        .collect();
                    (p.file_name().unwrap_or_default().to_string_lossy().into_owned(), rows)
                })
                .collect()
        })
        .unwrap_or_default();
    out.sort();
    out
}

pub fn determinism(iterations: usize) -> CheckOutcome {
    let base = std::env::temp_dir().join(format!("spikeslide-determinism-{}", std::process::id()));
    let mut details = Vec::new();
    let mut ok = true;
    for kind in [ExperimentKind::Fast1d, ExperimentKind::Biased1d] {
        let mut outputs = Vec::new();
        for (i, threads) in [1, 1, 4].into_iter().enumerate() {
            let dir = base.join(format!("{kind}-{i}"));
            let spec = ExperimentSpec::new(kind, 11).with_iterations(iterations).with_threads(threads);
            match run_experiment(&spec, &dir) {
                Ok(_) => outputs.push(deterministic_csvs(&dir)),
                Err(e) => {
                    ok = false;
                    details.push(format!("{kind}: {e}"));
                }
            }
        }
        let same = outputs.len() == 3 && !outputs[0].is_empty() && outputs.iter().all(|o| o == &outputs[0]);
        ok &= same;
        details.push(format!("{kind} {} CSVs identical across two runs and 1/4 threads: {same}", outputs.first().map_or(0, |o| o.len())));
    }
    let _ = std::fs::remove_dir_all(&base);
    CheckOutcome::new("12 determinism", ok, format!("{iterations} iterations; {}", details.join("; ")))
}

/// Invariants on a short sliding run: nonnegativity, support discipline and
/// quasi-monotonicity.
pub fn short_run_invariants(iterations: usize) -> CheckOutcome {
    let kind = ExperimentKind::Fast1d;
    let e = generate_experiment::<1>(kind, 2);
    let p = Problem::new(&e.model, &e.observation.b, e.params.alpha);
    let mut solver = match Solver::new(p, Method::Sfb, StepConfig::defaults(Method::Sfb, 1)) {
        Ok(s) => s,
        Err(err) => return CheckOutcome::new("short-run invariants", false, err.to_string()),
    };
    let (mut negative, mut off_support, mut quasi) = (0, 0, 0);
    let diam = e.model.domain.diameter();
    for _ in 0..iterations {
        let rec = solver.step();
        let st = solver.state();
        if st.mu.sign() != Sign::Nonnegative || st.mu.weights().any(|w| w < 0.0) {
            negative += 1;
        }
        let on_support = |y| st.mu.locations().any(|x| dist(x, y) <= DEDUP_TOLERANCE * diam);
        if st.gamma.atoms.iter().any(|a| a.mass != 0.0 && !on_support(&a.target)) {
            off_support += 1;
        }
        if rec.quasi_slack < 0.0 {
            quasi += 1;
        }
    }
    CheckOutcome::new(
        "short-run invariants",
        negative + off_support + quasi == 0,
        format!(
            "sfb on fast1d, {iterations} iterations: negative weights {negative}, plan targets off support {off_support}, quasi-monotonicity violations {quasi}"
        ),
    )
}

/// Fast invariant suite.
pub fn property_suite() -> Vec<CheckOutcome> {
    vec![
        checks::subproblem_oracles(50, 200_000),
        checks::prox_correctness(1000),
        checks::bnb_certification(20, 100_000),
        checks::identities(1000),
        checks::gradient_checks(100),
        short_run_invariants(200),
    ]
}

/// All twelve acceptance criteria. The fast1d criteria share one run of
/// `iterations` steps.
pub fn acceptance_suite(iterations: usize) -> Vec<CheckOutcome> {
    let run = Fast1dRun::execute(iterations, 1);
    let mut out = vec![
        quasi_monotonicity(&run),
        insertion_certificates(&run),
        decay_rate(&run),
        cross_method_agreement(&run),
        sliding_advantage(&run),
    ];
    let numbered = [
        ("6", checks::subproblem_oracles(200, 1_000_000)),
        ("7", checks::prox_correctness(1000)),
        ("8", checks::bnb_certification(100, 1_000_000)),
        ("9", checks::identities(1000)),
        ("10", checks::gradient_checks(100)),
        ("11", checks::biased_problem(2000)),
    ];
    for (n, mut c) in numbered {
        c.name = format!("{n} {}", c.name);
        out.push(c);
    }
    out.push(determinism(200));
    out
}
