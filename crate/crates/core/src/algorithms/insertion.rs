//! Spike insertion and weight adjustment for the two marginal energies.

use nalgebra::{DMatrix, DVector};

use super::Method;
use crate::inner::{bnb_minimize, solve_weights_d, solve_weights_radon, BnbTask, WeightProblemD, WeightProblemRadon};
use crate::kernels::{CertificateFunction, Kernel};
use crate::measures::{dist, DiscreteMeasure, Domain, Sign, DEDUP_TOLERANCE};
use crate::Loc;


#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InsertionConfig {
    pub tau: f64,
    pub alpha: f64,
    /// Tolerance `ε` of the stopping test.
    pub eps: f64,
    /// Fractional tolerance of the weight subproblem.
    pub kappa: f64,
    /// Cap on newly inserted points; `Some(1)` during the bootstrap phase.
    pub max_new: Option<usize>,
    pub max_rounds: usize,
}

impl InsertionConfig {
    pub fn new(tau: f64, alpha: f64, eps: f64) -> Self {
        InsertionConfig { tau, alpha, eps, kappa: 0.5, max_new: None, max_rounds: 100 }
    }

    fn weight_accuracy(&self) -> f64 {
        self.kappa * self.eps
    }

    fn bnb_tolerance(&self) -> f64 {
        self.kappa * self.eps / 4.0
    }
}

#[derive(Clone, Debug)]
pub struct Insertion<const N: usize> {
    pub mu: DiscreteMeasure<N>,
    pub eps: f64,
    /// Rounds of the insert/re-solve loop.
    pub rounds: usize,
    /// Weight-solver iterations, summed over rounds.
    pub inner_iterations: usize,
    pub inserted: usize,
    /// `τv̌ + τα + 𝒟(μ − μ̌)` at the returned `μ` (D-marginal only).
    pub certificate: Option<CertificateFunction<N>>,
    /// Certified lower bound of the certificate over the domain (D-marginal only).
    pub bound: Option<f64>,
    /// The stopping test holds with the certified bound.
    pub certified: bool,
    /// The loop stopped because of `max_new`.
    pub capped: bool,
    pub weight_residual: f64,
    pub weight_target: f64,
    pub weight_fallback: bool,
    /// `f(β) ≤ κε‖β‖₁/(1 + ‖β‖₁)`, the mass estimate implied by the weight accuracy.
    pub mass_estimate_holds: bool,
    /// `‖μ‖_ℳ / (κε + (τα)⁻²‖η‖_∞)`.
    pub mass_bound_ratio: f64,
}

/// Passed to the solver's observer after every insertion call.
#[derive(Debug)]
pub struct InsertionEvent<'a, const N: usize> {
    pub k: usize,
    pub method: Method,
    pub bootstrap: bool,
    pub insertion: &'a Insertion<N>,
}

fn d_matrix<const N: usize>(rho: &Kernel<N>, locs: &[Loc<N>]) -> DMatrix<f64> {
    DMatrix::from_fn(locs.len(), locs.len(), |i, j| rho.eval(&crate::measures::sub(&locs[i], &locs[j])))
}

fn weight_objective(d: &DMatrix<f64>, eta: &DVector<f64>, reg: f64, beta: &[f64]) -> f64 {
    let b = DVector::from_column_slice(beta);
    0.5 * b.dot(&(d * &b)) + eta.dot(&b) + reg * b.sum()
}

/// Algorithm-1 insertion: alternately re-optimises the weights on the
/// current support and adds the minimiser of `τv̌ + τα + 𝒟(μ − μ̌)` until its
/// certified minimum is at least `−ε`.
pub fn insert_and_adjust<const N: usize>(
    mu_check: &DiscreteMeasure<N>,
    v_check: &CertificateFunction<N>,
    rho: &Kernel<N>,
    domain: &Domain<N>,
    cfg: &InsertionConfig,
) -> Insertion<N> {
    insert_and_adjust_warm(mu_check, mu_check, v_check, rho, domain, cfg)
}

/// [`insert_and_adjust`] with the candidate support and initial weights
/// taken from `start` instead of `μ̌`. Mass of `μ̌` outside `supp start`
/// enters only through `𝒟μ̌`.
pub fn insert_and_adjust_warm<const N: usize>(
    mu_check: &DiscreteMeasure<N>,
    start: &DiscreteMeasure<N>,
    v_check: &CertificateFunction<N>,
    rho: &Kernel<N>,
    domain: &Domain<N>,
    cfg: &InsertionConfig,
) -> Insertion<N> {
    let diam = domain.diameter();
    let base = mu_check.prune(diam);
    let start = start.prune(diam);
    let mut locs: Vec<Loc<N>> = start.locations().copied().collect();
    let mut beta: Vec<f64> = start.weights().collect();
    let reg = cfg.tau * cfg.alpha;
    let mut d = d_matrix(rho, &locs);
    let d_mu_check = |x: &Loc<N>| crate::kernels::apply_d(&base, rho, x);
    let mut eta: Vec<f64> = locs.iter().map(|x| cfg.tau * v_check.eval(x) - d_mu_check(x)).collect();

    // Bumps of μ̌ at candidate points are folded into the β bumps, which keeps
    // the local Lipschitz bounds of the certificate tight.
    let mut alpha_ext = vec![0.0; locs.len()];
    let mut residue = Vec::new();
    for s in base.spikes() {
        match locs.iter().position(|y| dist(y, &s.loc) <= DEDUP_TOLERANCE * diam) {
            Some(i) => alpha_ext[i] += s.weight,
            None => residue.push((s.loc, -s.weight)),
        }
    }
    let mut offset_fn = v_check.clone().scaled(cfg.tau).with_bumps(*rho, residue);
    offset_fn.offset += reg;

    let mut rounds = 0;
    let mut inner = 0;
    let mut inserted = 0;
    let mut fallback = false;
    let (mut residual, mut target);
    loop {
        rounds += 1;
        let problem = WeightProblemD {
            d: d.clone(),
            eta: DVector::from_column_slice(&eta),
            reg,
            accuracy: cfg.weight_accuracy(),
        };
        let sol = solve_weights_d(&problem, Some(&beta));
        inner += sol.iterations;
        fallback |= sol.fallback;
        residual = sol.residual;
        target = problem.target(&sol.beta);
        beta = sol.beta;

        let cert = offset_fn
            .clone()
            .with_bumps(*rho, locs.iter().copied().zip(beta.iter().zip(&alpha_ext).map(|(b, a)| b - a)));
        let res = bnb_minimize(&BnbTask::minimize(&cert, *domain, cfg.bnb_tolerance()));
        let certified = res.bound >= -cfg.eps;
        let capped = cfg.max_new.is_some_and(|m| inserted >= m);
        let duplicate = locs.iter().any(|y| dist(y, &res.point) <= DEDUP_TOLERANCE * diam);
        if certified || capped || duplicate || rounds >= cfg.max_rounds {
            let mu = DiscreteMeasure::from_spikes(locs.iter().copied().zip(beta.iter().copied()), Sign::Nonnegative)
                .expect("weights are clamped to be nonnegative")
                .prune(diam);
            let dmat = &d;
            let eta_v = DVector::from_column_slice(&eta);
            let norm1: f64 = beta.iter().sum();
            let f = weight_objective(dmat, &eta_v, reg, &beta);
            let scale = 1.0 + f.abs() + norm1 * (1.0 + eta_v.amax());
            let mass_estimate_holds = f <= cfg.weight_accuracy() * norm1 / (1.0 + norm1) + 1e-12 * scale;
            let mass_bound_ratio = norm1 / (cfg.weight_accuracy() + eta_v.amax() / (reg * reg));
            return Insertion {
                mu,
                eps: cfg.eps,
                rounds,
                inner_iterations: inner,
                inserted,
                certificate: Some(cert),
                bound: Some(res.bound),
                certified,
                capped: capped && !certified,
                weight_residual: residual,
                weight_target: target,
                weight_fallback: fallback,
                mass_estimate_holds,
                mass_bound_ratio,
            };
        }
        let x = res.point;
        inserted += 1;
        let col: Vec<f64> = locs.iter().map(|y| rho.eval(&crate::measures::sub(y, &x))).collect();
        let n = locs.len();
        d = d.resize(n + 1, n + 1, 0.0);
        for i in 0..n {
            d[(i, n)] = col[i];
            d[(n, i)] = col[i];
        }
        d[(n, n)] = rho.eval(&[0.0; N]);
        eta.push(cfg.tau * v_check.eval(&x) - d_mu_check(&x));
        locs.push(x);
        beta.push(0.0);
        alpha_ext.push(0.0);
    }
}

/// Algorithm-2 insertion: adds the minimiser of `v̌` with zero weight and
/// solves the `ℓ¹²`-proximal weight problem on the enlarged support.
pub fn insert_and_adjust_radon<const N: usize>(
    mu_check: &DiscreteMeasure<N>,
    v_check: &CertificateFunction<N>,
    domain: &Domain<N>,
    cfg: &InsertionConfig,
) -> Insertion<N> {
    let diam = domain.diameter();
    let base = mu_check.prune(diam);
    let mut locs: Vec<Loc<N>> = base.locations().copied().collect();
    let mut alpha: Vec<f64> = base.weights().collect();
    let res = bnb_minimize(&BnbTask::minimize(v_check, *domain, cfg.bnb_tolerance() / cfg.tau.max(f64::MIN_POSITIVE)));
    let mut inserted = 0;
    if !locs.iter().any(|y| dist(y, &res.point) <= DEDUP_TOLERANCE * diam) {
        locs.push(res.point);
        alpha.push(0.0);
        inserted = 1;
    }
    let eta: Vec<f64> = locs.iter().map(|x| cfg.tau * v_check.eval(x)).collect();
    let problem =
        WeightProblemRadon { alpha, eta, reg: cfg.tau * cfg.alpha, accuracy: cfg.weight_accuracy() };
    let sol = solve_weights_radon(&problem);
    let norm1: f64 = sol.beta.iter().sum();
    let f = problem.objective(&sol.beta) - problem.objective(&vec![0.0; sol.beta.len()]);
    let eta_sup = problem.eta.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    let reg = problem.reg;
    let mu = DiscreteMeasure::from_spikes(locs.into_iter().zip(sol.beta.iter().copied()), Sign::Nonnegative)
        .expect("weights are clamped to be nonnegative")
        .prune(diam);
    Insertion {
        mu,
        eps: cfg.eps,
        rounds: 1,
        inner_iterations: sol.iterations,
        inserted,
        certificate: None,
        bound: None,
        certified: sol.converged,
        capped: false,
        weight_residual: sol.residual,
        weight_target: problem.target(&sol.beta),
        weight_fallback: !sol.converged,
        mass_estimate_holds: f <= cfg.weight_accuracy() * norm1 / (1.0 + norm1) + 1e-12 * (1.0 + f.abs()),
        mass_bound_ratio: norm1 / (cfg.weight_accuracy() + eta_sup / (reg * reg)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::fast_spread_pair;

    fn setup() -> (Kernel<1>, Kernel<1>, Domain<1>) {
        let (psi, rho) = fast_spread_pair::<1>(0.05);
        (psi, rho, Domain::unit())
    }

    #[test]
    fn zero_certificate_gives_zero() {
        let (_, rho, dom) = setup();
        let out = insert_and_adjust(
            &DiscreteMeasure::nonnegative(),
            &CertificateFunction::constant(0.0),
            &rho,
            &dom,
            &InsertionConfig::new(1.0, 0.1, 1e-3),
        );
        assert!(out.mu.is_empty() && out.certified && out.inserted == 0);
    }

    #[test]
    fn single_well_inserts_one_spike() {
        let (psi, rho, dom) = setup();
        let v = CertificateFunction::constant(0.0).with_bumps(psi, [([0.42], -2.0)]);
        let cfg = InsertionConfig::new(1.0, 0.5, 1e-4);
        let out = insert_and_adjust(&DiscreteMeasure::nonnegative(), &v, &rho, &dom, &cfg);
        assert!(out.certified);
        let s = out.mu.spikes();
        assert!(!s.is_empty() && s.iter().all(|s| s.weight > 0.0));
        let heaviest = s.iter().max_by(|a, b| a.weight.total_cmp(&b.weight)).unwrap();
        assert!((heaviest.loc[0] - 0.42).abs() < 0.01, "{}", out.mu);
        // Dense-grid check of the certificate.
        let cert = out.certificate.as_ref().unwrap();
        let min = (0..=10_000).map(|i| cert.eval(&[i as f64 * 1e-4])).fold(f64::INFINITY, f64::min);
        assert!(min >= -cfg.eps - 1e-9);
        assert!(out.mass_estimate_holds);
    }

    #[test]
    fn idempotent_on_own_output() {
        let (psi, rho, dom) = setup();
        let v = CertificateFunction::constant(0.0).with_bumps(psi, [([0.3], -1.0), ([0.7], -0.6)]);
        let cfg = InsertionConfig::new(0.8, 0.2, 1e-4);
        let mu_check = DiscreteMeasure::from_spikes([([0.31], 1.0)], Sign::Nonnegative).unwrap();
        let first = insert_and_adjust(&mu_check, &v, &rho, &dom, &cfg);
        let again = insert_and_adjust_warm(&mu_check, &first.mu, &v, &rho, &dom, &cfg);
        assert!(again.certified && again.inserted == 0 && again.inner_iterations == 0);
        assert_eq!(again.mu, first.mu);
    }

    #[test]
    fn bootstrap_caps_insertions() {
        let (psi, rho, dom) = setup();
        let v = CertificateFunction::constant(0.0).with_bumps(psi, [([0.2], -3.0), ([0.6], -3.0), ([0.85], -2.0)]);
        let mut cfg = InsertionConfig::new(1.0, 0.1, 1e-4);
        cfg.max_new = Some(1);
        let out = insert_and_adjust(&DiscreteMeasure::nonnegative(), &v, &rho, &dom, &cfg);
        assert_eq!(out.inserted, 1);
        assert!(out.capped);
        assert_eq!(out.mu.len(), 1);
    }

    #[test]
    fn radon_zero_and_exact_fit() {
        let (psi, _, dom) = setup();
        let cfg = InsertionConfig::new(1.0, 0.3, 1e-6);
        let out = insert_and_adjust_radon(&DiscreteMeasure::nonnegative(), &CertificateFunction::constant(0.0), &dom, &cfg);
        assert!(out.mu.is_empty());
        let mu = DiscreteMeasure::from_spikes([([0.2], 1.5), ([0.7], 0.5)], Sign::Nonnegative).unwrap();
        let cfg = InsertionConfig::new(1.0, 0.0, 1e-6);
        let out = insert_and_adjust_radon(&mu, &CertificateFunction::constant(0.0), &dom, &cfg);
        assert_eq!(out.mu, mu);
        let _ = psi;
    }

    #[test]
    fn radon_single_well_closed_form() {
        // With μ̌ = 0 the weight problem is ½β² + (τv̌(x̄) + τα)β, so β = −τ(v̌(x̄) + α).
        let (psi, _, dom) = setup();
        let v = CertificateFunction::constant(0.0).with_bumps(psi, [([0.55], -1.0)]);
        let (tau, alpha) = (0.7, 0.4);
        let peak = v.eval(&[0.55]);
        let out = insert_and_adjust_radon(&DiscreteMeasure::nonnegative(), &v, &dom, &InsertionConfig::new(tau, alpha, 1e-8));
        assert_eq!(out.mu.len(), 1);
        let s = out.mu.spikes()[0];
        assert!((s.loc[0] - 0.55).abs() < 1e-3);
        assert!((s.weight + tau * (peak + alpha)).abs() < 1e-6, "{} vs {}", s.weight, -tau * (peak + alpha));
    }
}
