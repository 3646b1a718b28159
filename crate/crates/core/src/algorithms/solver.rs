//! Outer iterations of every method.

use serde::Serialize;

use super::insertion::{insert_and_adjust_radon, insert_and_adjust_warm, Insertion, InsertionConfig, InsertionEvent};
use super::merge::{merge_spikes, MergePolicy};
use super::steps::{resolve_steps, ResolvedSteps};
use super::transport::{
    convexity_control, curvature_control, drop_trivial, enforce_support, moved_support, remainder_control, transport_step, transported,
};
use super::{Family, LipschitzRule, Marginal, Method, Problem, StepConfig, ToleranceSchedule};
use crate::inner::{bnb_minimize, solve_weights_d, BnbTask, WeightProblemD};
use crate::kernels::CertificateFunction;
use crate::measures::{dist, radon_norm, DiscreteMeasure, Sign, TransportPlan, DEDUP_TOLERANCE};

/// Rounds of the insert/control loop before the plan is dropped.
const MAX_CONTROL_ROUNDS: usize = 50;
/// Constant `C′` of the quasi-monotonicity estimate.
const C_PRIME: f64 = 2.0;

#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    #[error("infeasible step configuration: {0}")]
    InfeasibleSteps(String),
    #[error("method {0} does not apply to this problem")]
    NotApplicable(Method),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverState<const N: usize> {
    pub k: usize,
    pub mu: DiscreteMeasure<N>,
    /// Bias estimate, for biased problems.
    pub z: Option<Vec<f64>>,
    /// Dual variable: of the data term for μPDPS, of the total variation for biased problems.
    pub y: Option<Vec<f64>>,
    /// Plan of the last step.
    pub gamma: TransportPlan<N>,
    pub value: f64,
}

/// What happened in one outer iteration.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct IterationRecord {
    pub k: usize,
    pub value: f64,
    pub spikes: usize,
    pub inner_iterations: usize,
    pub insert_calls: usize,
    pub inserted: usize,
    pub gamma_mass: f64,
    pub theta: f64,
    pub l_f: f64,
    pub l_r: f64,
    pub curvature_retries: usize,
    pub remainder_retries: usize,
    pub convexity_retries: usize,
    pub support_drops: usize,
    pub epsilon: f64,
    /// `Č` of the quasi-monotonicity estimate `v(μᵏ⁺¹) ≤ v(μᵏ) + Č·εᵏ⁺¹`.
    pub c_check: f64,
    /// `v(μᵏ) + Č·εᵏ⁺¹ − v(μᵏ⁺¹)`; negative means a violation.
    pub quasi_slack: f64,
    /// Every insertion met its stopping test (or its bootstrap cap).
    pub certified: bool,
    pub merges: usize,
}

type Observer<'a, const N: usize> = Box<dyn FnMut(&InsertionEvent<'_, N>) + 'a>;

pub struct Solver<'a, const N: usize> {
    problem: Problem<'a, N>,
    method: Method,
    config: StepConfig,
    steps: ResolvedSteps,
    schedule: ToleranceSchedule,
    state: SolverState<N>,
    observer: Option<Observer<'a, N>>,
    frozen: bool,
}

impl<'a, const N: usize> Solver<'a, N> {
    pub fn new(problem: Problem<'a, N>, method: Method, config: StepConfig) -> Result<Self, SolverError> {
        if (method.family() == Family::BiasedPdps) != problem.bias.is_some() {
            return Err(SolverError::NotApplicable(method));
        }
        let grad_norm = problem.bias.as_ref().map(|b| b.grad.norm_sq_bound());
        let steps = resolve_steps(method, &config, &problem.model.constants, grad_norm)?;
        let schedule = ToleranceSchedule::new(steps.tau * problem.alpha);
        let m = problem.model.sensor_count();
        let (z, y) = match (&problem.bias, method.family()) {
            (Some(b), _) => (Some(vec![0.0; m]), Some(vec![0.0; b.grad.cells() * N])),
            (None, Family::MeasurePdps) => (None, Some(vec![0.0; m])),
            _ => (None, None),
        };
        let mu = DiscreteMeasure::zero(Sign::Nonnegative);
        let value = problem.objective(&mu, z.as_deref());
        let state = SolverState { k: 0, mu, z, y, gamma: TransportPlan::empty(), value };
        Ok(Solver { problem, method, config, steps, schedule, state, observer: None, frozen: false })
    }

    /// Replaces the initial measure.
    pub fn with_initial(mut self, mu: DiscreteMeasure<N>) -> Self {
        self.state.value = self.problem.objective(&mu, self.state.z.as_deref());
        self.state.mu = mu;
        self
    }

    /// Calls `f` after every insertion.
    pub fn set_observer(&mut self, f: impl FnMut(&InsertionEvent<'_, N>) + 'a) {
        self.observer = Some(Box::new(f));
    }

    /// Keeps the measure fixed; only the bias and dual variables move.
    pub fn freeze_measure(&mut self) {
        self.frozen = true;
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn config(&self) -> &StepConfig {
        &self.config
    }

    pub fn steps(&self) -> &ResolvedSteps {
        &self.steps
    }

    pub fn schedule(&self) -> &ToleranceSchedule {
        &self.schedule
    }

    pub fn state(&self) -> &SolverState<N> {
        &self.state
    }

    pub fn problem(&self) -> &Problem<'a, N> {
        &self.problem
    }

    /// Record for the initial iterate.
    pub fn initial_record(&self) -> IterationRecord {
        IterationRecord {
            k: self.state.k,
            value: self.state.value,
            spikes: self.state.mu.len(),
            certified: true,
            ..IterationRecord::default()
        }
    }

    pub fn step(&mut self) -> IterationRecord {
        let n = self.state.k + 1;
        let rec = match self.method.family() {
            Family::ForwardBackward | Family::BiasedPdps => self.sliding_step(n),
            Family::MeasurePdps => self.measure_pdps_step(n),
            Family::ConditionalGradient => self.conditional_gradient_step(n),
        };
        self.state.k = n;
        rec
    }

    /// Clean-up merge after the last step. Returns the number of merges.
    pub fn finish(&mut self) -> usize {
        let policy = match self.config.merge {
            MergePolicy::None => MergePolicy::Interpolate { radius: self.config.cleanup_radius },
            p => p,
        };
        let slack = self.schedule.eps(self.state.k.max(1)) / self.steps.tau;
        let z = self.state.z.clone();
        let (mu, merges) = merge_spikes(&self.state.mu, policy, |m| self.problem.objective(m, z.as_deref()), slack);
        self.state.value = self.problem.objective(&mu, z.as_deref());
        self.state.mu = mu;
        merges
    }

    fn insertion_config(&self, eps: f64, bootstrap: bool) -> InsertionConfig {
        InsertionConfig {
            tau: self.steps.tau,
            alpha: self.problem.alpha,
            eps,
            kappa: self.config.kappa,
            max_new: bootstrap.then_some(1),
            max_rounds: 100,
        }
    }

    fn insert(
        &self,
        mu_check: &DiscreteMeasure<N>,
        v_check: &CertificateFunction<N>,
        eps: f64,
        bootstrap: bool,
    ) -> Insertion<N> {
        self.insert_from(mu_check, mu_check, v_check, eps, bootstrap)
    }

    /// Insertion with candidate support `supp start` (D-marginal only; the
    /// Radon insertion keeps all of `supp μ̌`).
    fn insert_from(
        &self,
        mu_check: &DiscreteMeasure<N>,
        start: &DiscreteMeasure<N>,
        v_check: &CertificateFunction<N>,
        eps: f64,
        bootstrap: bool,
    ) -> Insertion<N> {
        let cfg = self.insertion_config(eps, bootstrap);
        let model = self.problem.model;
        match self.method.marginal() {
            Marginal::D => insert_and_adjust_warm(mu_check, start, v_check, &model.rho, &model.domain, &cfg),
            Marginal::Radon => insert_and_adjust_radon(mu_check, v_check, &model.domain, &cfg),
        }
    }

    fn notify(&mut self, k: usize, bootstrap: bool, ins: &Insertion<N>) {
        let method = self.method;
        if let Some(o) = self.observer.as_mut() {
            o(&InsertionEvent { k, method, bootstrap, insertion: ins });
        }
    }

    /// `Aμ̌ + z⁺ − b` and, for biased problems, the primal bias update `z⁺`
    /// computed from `μ̌`.
    fn dual_residual(&self, mu_check: &DiscreteMeasure<N>) -> (Vec<f64>, Option<Vec<f64>>) {
        let p = &self.problem;
        match (&p.bias, &self.state.z, &self.state.y) {
            (Some(bias), Some(z), Some(y)) => {
                let sp = self.steps.sigma_p.expect("biased steps resolved");
                let r = p.residual(mu_check, Some(z));
                let ky = bias.grad.adjoint(y);
                let z_new: Vec<f64> = (0..z.len()).map(|i| z[i] - sp * r[i] - sp * ky[i]).collect();
                (p.residual(mu_check, Some(&z_new)), Some(z_new))
            }
            _ => (p.residual(mu_check, None), None),
        }
    }

    /// `Č = (‖μᵏ‖ + ‖γ‖ + ‖μᵏ⁺¹‖ + 1 + C′ + C_con)/τ`.
    fn c_check(&self, mass_prev: f64, gamma_mass: f64, mass_next: f64) -> f64 {
        let c = &self.problem.model.constants;
        let tau = self.steps.tau;
        let diam = self.problem.diameter();
        let l_m = self.problem.model.rho.lipschitz_grad()
            + tau * (2.0 * c.n_psi as f64).sqrt() * c.m_phi * c.l_grad_phi;
        let c_con = self.config.c_con * 0.5 * l_m * diam * diam;
        (mass_prev + gamma_mass + mass_next + 1.0 + C_PRIME + c_con) / tau
    }

    /// Forward-backward step with optional transport; for biased problems
    /// also the primal-dual bias update.
    fn sliding_step(&mut self, n: usize) -> IterationRecord {
        let diam = self.problem.diameter();
        let eps = self.schedule.eps(n);
        let bootstrap = self.schedule.is_bootstrap(n);
        let tau = self.steps.tau;
        let mu_k = self.state.mu.clone();
        let r_k = self.problem.residual(&mu_k, self.state.z.as_deref());
        let model = self.problem.model;
        let v_k = model.preadjoint(&r_k);
        let mut rec = IterationRecord { k: n, epsilon: eps, certified: true, ..IterationRecord::default() };

        let mut gamma = TransportPlan::empty();
        if self.method.is_sliding() && self.config.theta0 > 0.0 && !self.frozen {
            let c = &model.constants;
            let live = (2.0 * c.n_psi as f64).sqrt() * c.l_grad_phi * r_k.iter().map(|x| x * x).sum::<f64>().sqrt();
            let l_f = match self.config.lipschitz {
                LipschitzRule::Live => live,
                LipschitzRule::Fixed { value } => value,
            };
            let l_r = 2.0 * c.sup_grad_sq * mu_k.max_abs_weight();
            let denom = tau * (l_f + l_r);
            let theta = if denom > 0.0 { self.config.theta0 / denom } else { 0.0 };
            gamma = transport_step(&mu_k, |x| v_k.grad(x), theta, tau, &model.domain);
            drop_trivial(&mut gamma);
            rec.curvature_retries = curvature_control(&mut gamma, &v_k, l_f, live);
            rec.remainder_retries = remainder_control(&mut gamma, model, l_r, self.steps.remainder_factor);
            drop_trivial(&mut gamma);
            (rec.theta, rec.l_f, rec.l_r) = (theta, l_f, l_r);
        }

        let (mu_next, z_next) = loop {
            let mu_check = transported(&mu_k, &gamma, diam);
            let (r_check, z_new) = self.dual_residual(&mu_check);
            if self.frozen {
                break (mu_k.clone(), z_new);
            }
            let v_check = model.preadjoint(&r_check);
            let g_mass = gamma.mass();
            let eps_bar = if g_mass > 0.0 { eps.min(self.config.tighten_c * eps * eps / g_mass) } else { eps };
            let start = moved_support(&mu_check, &gamma, diam);
            let ins = self.insert_from(&mu_check, &start, &v_check, self.config.kappa * eps_bar, bootstrap);
            self.notify(n, bootstrap, &ins);
            rec.insert_calls += 1;
            rec.inner_iterations += ins.inner_iterations;
            rec.certified &= ins.certified || ins.capped;
            let mut changed = false;
            if enforce_support(&mut gamma, &ins.mu, diam) {
                rec.support_drops += 1;
                changed = true;
            }
            let reductions = convexity_control(&mut gamma, &ins.mu, &mu_check, self.config.c_con, eps, diam);
            if reductions > 0 {
                rec.convexity_retries += reductions;
                changed = true;
            }
            drop_trivial(&mut gamma);
            if !changed {
                rec.inserted = ins.inserted;
                break (ins.mu, z_new);
            }
            if rec.insert_calls >= MAX_CONTROL_ROUNDS {
                gamma = TransportPlan::empty();
            }
        };

        let z_ref = z_next.clone();
        let (mu_next, merges) = merge_spikes(
            &mu_next.prune(diam),
            self.config.merge,
            |m| self.problem.objective(m, z_ref.as_deref()),
            eps / tau,
        );
        rec.merges = merges;

        if let (Some(bias), Some(z_new), Some(z_old), Some(y)) =
            (&self.problem.bias, &z_next, &self.state.z, &mut self.state.y)
        {
            let sd = self.steps.sigma_d.expect("biased steps resolved");
            let extrap: Vec<f64> = z_new.iter().zip(z_old).map(|(a, b)| 2.0 * a - b).collect();
            let g = bias.grad.apply(&extrap);
            for (yi, gi) in y.iter_mut().zip(&g) {
                *yi += sd * gi;
            }
            bias.project_dual(y);
        }
        if z_next.is_some() {
            self.state.z = z_next;
        }

        let value = self.problem.objective(&mu_next, self.state.z.as_deref());
        rec.gamma_mass = gamma.mass();
        rec.c_check = self.c_check(radon_norm(&mu_k, diam), rec.gamma_mass, radon_norm(&mu_next, diam));
        rec.quasi_slack = self.state.value + rec.c_check * eps - value;
        self.finish_step(rec, mu_next, gamma, value)
    }

    fn finish_step(
        &mut self,
        mut rec: IterationRecord,
        mu: DiscreteMeasure<N>,
        gamma: TransportPlan<N>,
        value: f64,
    ) -> IterationRecord {
        rec.value = value;
        rec.spikes = mu.len();
        self.state.mu = mu;
        self.state.gamma = gamma;
        self.state.value = value;
        rec
    }

    fn measure_pdps_step(&mut self, n: usize) -> IterationRecord {
        let diam = self.problem.diameter();
        let eps = self.schedule.eps(n);
        let bootstrap = self.schedule.is_bootstrap(n);
        let model = self.problem.model;
        let mu_k = self.state.mu.clone();
        let y = self.state.y.clone().expect("dual variable initialised");
        let v_check = model.preadjoint(&y);
        let ins = self.insert(&mu_k, &v_check, self.config.kappa * eps, bootstrap);
        self.notify(n, bootstrap, &ins);
        let mut rec = IterationRecord {
            k: n,
            epsilon: eps,
            insert_calls: 1,
            inserted: ins.inserted,
            inner_iterations: ins.inner_iterations,
            certified: ins.certified || ins.capped,
            ..IterationRecord::default()
        };
        let (mu_next, merges) = merge_spikes(
            &ins.mu.prune(diam),
            self.config.merge,
            |m| self.problem.objective(m, None),
            eps / self.steps.tau,
        );
        rec.merges = merges;
        let sigma = self.steps.sigma.expect("measure PDPS steps resolved");
        let a_new = model.apply_a(&mu_next);
        let a_old = model.apply_a(&mu_k);
        let b = self.problem.b;
        let y_next: Vec<f64> =
            (0..y.len()).map(|i| (y[i] + sigma * (2.0 * a_new[i] - a_old[i]) - sigma * b[i]) / (1.0 + sigma)).collect();
        self.state.y = Some(y_next);
        let value = self.problem.objective(&mu_next, None);
        self.finish_step(rec, mu_next, TransportPlan::empty(), value)
    }

    fn conditional_gradient_step(&mut self, n: usize) -> IterationRecord {
        let p = &self.problem;
        let model = p.model;
        let diam = p.diameter();
        let eps = self.schedule.eps(n);
        let alpha = p.alpha;
        let mu_k = &self.state.mu;
        let v = model.preadjoint(&p.residual(mu_k, None));
        let res = bnb_minimize(&BnbTask::minimize(&v, model.domain, self.config.kappa * eps / 4.0));
        let mut locs: Vec<_> = mu_k.locations().copied().collect();
        let mut warm: Vec<f64> = mu_k.weights().collect();
        let mut inserted = 0;
        if res.value + alpha < -eps && !locs.iter().any(|y| dist(y, &res.point) <= DEDUP_TOLERANCE * diam) {
            locs.push(res.point);
            warm.push(0.0);
            inserted = 1;
        }
        let cols: Vec<Vec<f64>> = locs
            .iter()
            .map(|x| model.apply_a(&DiscreteMeasure::from_spikes([(*x, 1.0)], Sign::Nonnegative).expect("unit spike")))
            .collect();
        let k = locs.len();
        let d = nalgebra::DMatrix::from_fn(k, k, |i, j| cols[i].iter().zip(&cols[j]).map(|(a, b)| a * b).sum());
        let eta = nalgebra::DVector::from_iterator(k, cols.iter().map(|c| -c.iter().zip(p.b).map(|(a, b)| a * b).sum::<f64>()));
        let wp = WeightProblemD { d, eta, reg: alpha, accuracy: self.config.kappa * eps };
        let sol = solve_weights_d(&wp, Some(&warm));
        let mu = DiscreteMeasure::from_spikes(locs.into_iter().zip(sol.beta), Sign::Nonnegative)
            .expect("weights are nonnegative")
            .prune(diam);
        let (mu, merges) = merge_spikes(&mu, self.config.merge, |m| p.objective(m, None), eps);
        let rec = IterationRecord {
            k: n,
            epsilon: eps,
            insert_calls: 1,
            inserted,
            inner_iterations: sol.iterations,
            certified: res.bound + alpha >= -eps || inserted == 1,
            merges,
            ..IterationRecord::default()
        };
        let value = p.objective(&mu, None);
        self.finish_step(rec, mu, TransportPlan::empty(), value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::{generate_experiment, ExperimentKind};

    #[test]
    fn applicability_is_checked() {
        let e = generate_experiment::<1>(ExperimentKind::Fast1d, 1);
        let p = Problem::new(&e.model, &e.observation.b, e.params.alpha);
        assert!(matches!(
            Solver::new(p, Method::Spdps, StepConfig::defaults(Method::Spdps, 1)),
            Err(SolverError::NotApplicable(Method::Spdps))
        ));
    }

    #[test]
    fn bootstrap_inserts_at_most_one_point() {
        let e = generate_experiment::<1>(ExperimentKind::Fast1d, 3);
        for method in [Method::MuFb, Method::Sfb] {
            let p = Problem::new(&e.model, &e.observation.b, e.params.alpha);
            let mut s = Solver::new(p, method, StepConfig::defaults(method, 1)).unwrap();
            for _ in 0..10 {
                let r = s.step();
                assert!(r.inserted <= 1, "{method}: {r:?}");
            }
        }
    }
}
