//! Individual numerical checks. Each returns a [`CheckOutcome`] with the
//! measured worst case in its detail line.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::oracles::{grid_min_1d, nested_grid, projected_gradient, tv_denoise_1d};
use super::CheckOutcome;
use crate::algorithms::{Method, Problem, Solver, StepConfig};
use crate::experiment::{generate_experiment, ExperimentKind};
use crate::forward::ForwardModel;
use crate::inner::{
    bnb_minimize, prox_l1sq_l1_pos, solve_weights_d, solve_weights_radon, BnbTask, WeightProblemD, WeightProblemRadon,
};
use crate::kernels::{fast_spread, fast_spread_pair, CertificateFunction};
use crate::measures::{d_inner, v_cost, DiscreteMeasure, Domain, MarginalEnergy, Sign, TransportPlan};
use crate::Loc;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// Weight subproblems against projected gradient and nested grid search.
pub fn subproblem_oracles(instances: usize, pg_iterations: usize) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (_, rho) = fast_spread_pair::<1>(0.05);
    let (mut worst_d, mut worst_r) = (0.0f64, 0.0f64);
    for _ in 0..instances {
        let n = rng.gen_range(1..=4);
        // Separated atoms keep the Gram matrix well conditioned for the oracle.
        let mut locs: Vec<f64> = Vec::new();
        while locs.len() < n {
            let x = rng.gen_range(0.0..1.0);
            if locs.iter().all(|y: &f64| (x - y).abs() > 0.05) {
                locs.push(x);
            }
        }
        let d = DMatrix::from_fn(n, n, |i, j| rho.eval(&[locs[i] - locs[j]]));
        let eta = DVector::from_fn(n, |_, _| rng.gen_range(-3.0..1.0));
        let reg = rng.gen_range(0.0..0.5);
        let p = WeightProblemD { d: d.clone(), eta: eta.clone(), reg, accuracy: 1e-13 };
        let ours = p.objective(&solve_weights_d(&p, None).beta);
        let oracle = p.objective(&projected_gradient(&d, &eta, reg, pg_iterations));
        worst_d = worst_d.max((ours - oracle).abs());

        let alpha: Vec<f64> = (0..n).map(|_| if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.0..3.0) }).collect();
        let eta: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let reg = rng.gen_range(0.0..0.5);
        let p = WeightProblemRadon { alpha: alpha.clone(), eta: eta.clone(), reg, accuracy: 1e-12 };
        let ours = p.objective(&solve_weights_radon(&p).beta);
        let hi = alpha.iter().fold(0.0f64, |m, a| m.max(*a)) + eta.iter().fold(0.0f64, |m, e| m.max((e + reg).abs())) + 0.1;
        let (_, oracle) = nested_grid(|b| p.objective(b), n, hi, 80);
        worst_r = worst_r.max((ours - oracle).abs());
    }
    CheckOutcome::new(
        "subproblem oracles",
        worst_d <= 1e-8 && worst_r <= 1e-6,
        format!("{instances} instances, worst |Δf|: D {worst_d:.2e} (tol 1e-8), radon {worst_r:.2e} (tol 1e-6)"),
    )
}

/// Largest violation of `point − β − c ∈ s‖β − α‖₁·∂‖· − α‖₁(β) + N_{≥0}(β)`.
pub fn prox_optimality_violation(alpha: &[f64], point: &[f64], s: f64, c: f64, beta: &[f64]) -> f64 {
    let t: f64 = beta.iter().zip(alpha).map(|(b, a)| (b - a).abs()).sum();
    let mut worst: f64 = 0.0;
    for i in 0..beta.len() {
        let r = point[i] - beta[i] - c;
        let u = beta[i] - alpha[i];
        let (lo, hi) = if u > 0.0 {
            (s * t, s * t)
        } else if u < 0.0 {
            (-s * t, -s * t)
        } else {
            (-s * t, s * t)
        };
        let lo = if beta[i] == 0.0 { f64::NEG_INFINITY } else { lo };
        let v = if r < lo { lo - r } else if r > hi { r - hi } else { 0.0 };
        let scale = 1.0 + point[i].abs() + alpha[i].abs();
        worst = worst.max(v / scale).max(if beta[i] < 0.0 { -beta[i] } else { 0.0 });
    }
    worst
}

pub fn prox_correctness(instances: usize) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let n = rng.gen_range(1..=6);
        let alpha: Vec<f64> = (0..n).map(|_| if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.0..3.0) }).collect();
        let point: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..4.0)).collect();
        let s = rng.gen_range(0.01..5.0);
        let c = rng.gen_range(0.0..1.0);
        let beta = prox_l1sq_l1_pos(&alpha, &point, s, c);
        worst = worst.max(prox_optimality_violation(&alpha, &point, s, c, &beta));
    }
    CheckOutcome::new("prox optimality", worst <= 1e-10, format!("{instances} instances, worst violation {worst:.2e} (tol 1e-10)"))
}

fn random_certificate(rng: &mut ChaCha8Rng) -> CertificateFunction<1> {
    let bumps: Vec<(Loc<1>, f64)> =
        (0..rng.gen_range(1..=3)).map(|_| ([rng.gen_range(0.0..1.0)], rng.gen_range(-2.0..2.0))).collect();
    let kernel = fast_spread::<1>(rng.gen_range(0.03..0.2));
    CertificateFunction::constant(rng.gen_range(-0.5..0.5)).with_bumps(kernel, bumps)
}

pub fn bnb_certification(instances: usize, grid_points: usize) -> CheckOutcome {
    const TOL: f64 = 1e-8;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let pools: Vec<rayon::ThreadPool> =
        [1, 2, 4].iter().map(|&t| rayon::ThreadPoolBuilder::new().num_threads(t).build().expect("pool")).collect();
    let (mut worst, mut mismatches) = (0.0f64, 0);
    let h = 1.0 / (grid_points - 1) as f64;
    for _ in 0..instances {
        let f = random_certificate(&mut rng);
        let results: Vec<_> =
            pools.iter().map(|p| p.install(|| bnb_minimize(&BnbTask::minimize(&f, Domain::unit(), TOL)))).collect();
        if results.iter().any(|r| r != &results[0]) {
            mismatches += 1;
        }
        let r = &results[0];
        let (_, grid) = grid_min_1d(&f, grid_points);
        let (_, l2) = f.global_lipschitz();
        // The grid can miss the true minimum by at most L₂h²/8.
        let slack = TOL + l2 * h * h / 8.0;
        let excess = (r.value - grid - TOL).max(grid - slack - r.value).max(r.bound - grid - TOL);
        worst = worst.max(excess);
        if excess > 0.0 || r.budget_exhausted {
            mismatches += 1;
        }
    }
    CheckOutcome::new(
        "branch-and-bound certification",
        mismatches == 0,
        format!("{instances} certificates, {grid_points}-point grid, 1/2/4 workers: failures {mismatches}, worst excess over tolerance {worst:.2e}"),
    )
}

fn random_measure(rng: &mut ChaCha8Rng, n: usize, sign: Sign) -> DiscreteMeasure<1> {
    DiscreteMeasure::from_spikes(
        (0..n).map(|_| {
            let w = rng.gen_range(0.1..3.0);
            ([rng.gen_range(0.0..1.0)], if sign == Sign::Signed && rng.gen_bool(0.5) { -w } else { w })
        }),
        sign,
    )
    .expect("valid weights")
}

/// Bregman three-point identity for `J = ½‖·‖²_𝒟`, the Pythagoras
/// expansion and diagonal invariance of the transport cost.
pub fn identities(instances: usize) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (_, rho) = fast_spread_pair::<1>(0.05);
    let j = |m: &DiscreteMeasure<1>| 0.5 * d_inner(m, m, &rho);
    let bregman = |a: &DiscreteMeasure<1>, b: &DiscreteMeasure<1>| {
        j(a) - j(b) - d_inner(b, &a.add_scaled(-1.0, b), &rho)
    };
    let (mut w3, mut wp, mut wd) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..instances {
        let x = random_measure(&mut rng, 3, Sign::Signed);
        let y = random_measure(&mut rng, 3, Sign::Signed);
        let z = random_measure(&mut rng, 3, Sign::Signed);
        // B(x, z) = B(x, y) + B(y, z) + ⟨∇J(y) − ∇J(z), x − y⟩
        let lhs = bregman(&x, &z);
        let rhs = bregman(&x, &y) + bregman(&y, &z) + d_inner(&y.add_scaled(-1.0, &z), &x.add_scaled(-1.0, &y), &rho);
        w3 = w3.max(rel(lhs, rhs));

        let p: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let q: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let r: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let sq = |a: &[f64; 3], b: &[f64; 3]| 0.5 * (0..3).map(|i| (a[i] - b[i]).powi(2)).sum::<f64>();
        // ½|z−x|² − ½|y−x|² = ⟨y−x, z−y⟩ + ½|z−y|² with (x, y, z) = (p, q, r).
        let lhs = sq(&r, &p) - sq(&q, &p);
        let rhs = (0..3).map(|i| (q[i] - p[i]) * (r[i] - q[i])).sum::<f64>() + sq(&r, &q);
        wp = wp.max((lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE));

        let mu0 = random_measure(&mut rng, 3, Sign::Nonnegative);
        let mu1 = random_measure(&mut rng, 3, Sign::Nonnegative);
        let mut gamma = TransportPlan::empty();
        for (a, b) in mu0.spikes().iter().zip(mu1.spikes()) {
            gamma.push(a.loc, b.loc, rng.gen_range(0.0..a.weight.min(b.weight)));
        }
        let theta = random_measure(&mut rng, 2, Sign::Signed);
        for energy in [MarginalEnergy::RadonSquared, MarginalEnergy::DSquared(rho)] {
            let a = v_cost(&mu0, &mu1, &gamma, &energy, 1.3, 0.7, 1.0);
            let b = v_cost(&mu0, &mu1, &gamma.with_diagonal(&theta), &energy, 1.3, 0.7, 1.0);
            wd = wd.max((a - b).abs() / a.abs().max(f64::MIN_POSITIVE));
        }
    }
    CheckOutcome::new(
        "identities",
        w3 <= 1e-10 && wp <= 1e-10 && wd <= 1e-12,
        format!(
            "{instances} instances, worst relative error: three-point {w3:.2e}, Pythagoras {wp:.2e} (tol 1e-10), diagonal {wd:.2e} (tol 1e-12)"
        ),
    )
}

fn gradient_error<const N: usize>(model: &ForwardModel<N>, b: &[f64], rng: &mut ChaCha8Rng, points: usize) -> f64 {
    let mu = DiscreteMeasure::from_spikes(
        (0..3).map(|_| (std::array::from_fn(|_| rng.gen_range(0.1..0.9)), rng.gen_range(0.5..5.0))),
        Sign::Nonnegative,
    )
    .expect("positive weights");
    let v = model.preadjoint(&model.residual(&mu, b));
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for _ in 0..points {
        let x: Loc<N> = std::array::from_fn(|_| rng.gen_range(0.0..1.0));
        let g = v.grad(&x);
        let mut err = 0.0;
        let mut norm = 0.0;
        for i in 0..N {
            let mut xp = x;
            let mut xm = x;
            xp[i] += h;
            xm[i] -= h;
            let fd = (v.eval(&xp) - v.eval(&xm)) / (2.0 * h);
            err += (g[i] - fd).powi(2);
            norm += g[i] * g[i];
        }
        worst = worst.max(err.sqrt() / norm.sqrt().max(1.0));
    }
    worst
}

/// `∇vᵏ` against central differences. The error is relative to `max(‖∇v‖, 1)`.
pub fn gradient_checks(points: usize) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut parts = Vec::new();
    let mut worst: f64 = 0.0;
    for kind in ExperimentKind::ALL {
        let e = match kind.dim() {
            1 => {
                let e = generate_experiment::<1>(kind, 1);
                gradient_error(&e.model, &e.observation.b, &mut rng, points)
            }
            _ => {
                let e = generate_experiment::<2>(kind, 1);
                gradient_error(&e.model, &e.observation.b, &mut rng, points)
            }
        };
        worst = worst.max(e);
        parts.push(format!("{kind} {e:.1e}"));
    }
    CheckOutcome::new("gradient checks", worst <= 1e-5, format!("{points} points per kind: {} (tol 1e-5)", parts.join(", ")))
}

/// Step inequalities, quasi-monotonicity and the frozen-measure bias problem
/// against exact 1D TV denoising.
pub fn biased_problem(iterations: usize) -> CheckOutcome {
    let e = generate_experiment::<1>(ExperimentKind::Biased1d, 1);
    let lambda = e.params.lambda.expect("biased experiment");
    let problem = || Problem::new(&e.model, &e.observation.b, e.params.alpha).with_bias(lambda);
    let config = StepConfig::defaults(Method::Spdps, 1);

    let mut solver = match Solver::new(problem(), Method::Spdps, config) {
        Ok(s) => s,
        Err(err) => return CheckOutcome::new("biased problem", false, err.to_string()),
    };
    let steps_hold = solver.steps().all_hold();
    let mut violations = 0;
    for _ in 0..iterations {
        if solver.step().quasi_slack < 0.0 {
            violations += 1;
        }
    }
    let full_value = solver.state().value;

    let mut frozen = Solver::new(problem(), Method::Spdps, config).expect("checked above");
    frozen.freeze_measure();
    for _ in 0..iterations {
        frozen.step();
    }
    let ours = frozen.state().value;
    let z = tv_denoise_1d(&e.observation.b, lambda);
    let oracle = problem().objective(&DiscreteMeasure::nonnegative(), Some(&z));
    let gap = (ours - oracle).abs();
    CheckOutcome::new(
        "biased problem",
        steps_hold && violations == 0 && gap <= 1e-6,
        format!(
            "step inequalities hold: {steps_hold}; quasi-monotonicity violations {violations} in {iterations} iterations (final value {full_value:.6}); frozen-measure objective {ours:.9} vs TV oracle {oracle:.9}, |Δ| {gap:.2e} (tol 1e-6)"
        ),
    )
}
