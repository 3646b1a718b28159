//! Absolute step lengths from relative factors and model constants.

use serde::Serialize;

use super::{Family, Marginal, Method, SolverError, StepConfig};
use crate::forward::ModelConstants;

/// A step-length condition `lhs ≤ rhs` (or `<` when strict), as checked.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Inequality {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub strict: bool,
    pub holds: bool,
}

impl Inequality {
    fn new(name: &'static str, lhs: f64, rhs: f64, strict: bool) -> Self {
        let holds = if strict { lhs < rhs } else { lhs <= rhs };
        Inequality { name, lhs, rhs, strict, holds }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResolvedSteps {
    pub tau: f64,
    /// Relative transport factor; the absolute `θ` is set per iteration.
    pub theta0: f64,
    /// The constant `L` the step is scaled by.
    pub l: f64,
    /// Dual step of μPDPS.
    pub sigma: Option<f64>,
    pub sigma_p: Option<f64>,
    pub sigma_d: Option<f64>,
    /// Young splitting parameter `a` of the biased problem's smoothness estimate.
    pub young_a: Option<f64>,
    pub l_z: Option<f64>,
    pub beta: Option<f64>,
    /// Multiplier of `‖A(π¹_# − π⁰_#)γ‖²` in the remainder control.
    pub remainder_factor: f64,
    pub inequalities: Vec<Inequality>,
}

impl ResolvedSteps {
    pub fn all_hold(&self) -> bool {
        self.inequalities.iter().all(|i| i.holds)
    }
}

/// Resolves `τ = τ₀/L` and the dependent steps of `method`.
///
/// `grad_norm_sq` is a bound on `‖∇_h‖²`, required for biased problems.
pub fn resolve_steps(
    method: Method,
    cfg: &StepConfig,
    constants: &ModelConstants,
    grad_norm_sq: Option<f64>,
) -> Result<ResolvedSteps, SolverError> {
    let l = match method.marginal() {
        Marginal::D => constants.l,
        Marginal::Radon => constants.l_radon,
    };
    if !(l > 0.0) {
        return Err(SolverError::InfeasibleSteps(format!("non-positive operator constant L = {l}")));
    }
    if !(0.0..=1.0).contains(&cfg.theta0) {
        return Err(SolverError::InfeasibleSteps(format!("theta0 = {} outside [0, 1]", cfg.theta0)));
    }
    let mut out = ResolvedSteps {
        tau: cfg.tau0 / l,
        theta0: cfg.theta0,
        l,
        sigma: None,
        sigma_p: None,
        sigma_d: None,
        young_a: None,
        l_z: None,
        beta: None,
        remainder_factor: 1.0,
        inequalities: Vec::new(),
    };
    let ineq = &mut out.inequalities;
    match method.family() {
        Family::ForwardBackward => {
            ineq.push(Inequality::new("tau_l", out.tau * l, 1.0, false));
            ineq.push(Inequality::new("theta_tau_lsum", cfg.theta0, 1.0, false));
        }
        Family::MeasurePdps => {
            let sigma = cfg.sigma0 / (out.tau * l);
            out.sigma = Some(sigma);
            ineq.push(Inequality::new("tau_sigma_l", out.tau * sigma * l, 1.0, true));
        }
        Family::ConditionalGradient => {
            out.tau = 1.0;
        }
        Family::BiasedPdps => {
            let k2 = grad_norm_sq
                .ok_or_else(|| SolverError::InfeasibleSteps("biased problem without a gradient bound".into()))?;
            if !(cfg.tau0 > 0.0 && cfg.tau0 < 1.0) {
                return Err(SolverError::InfeasibleSteps(format!("tau0 = {} must lie in (0, 1)", cfg.tau0)));
            }
            // ½‖AΔμ + Δz‖² ≤ ½(1 + a)‖AΔμ‖² + ½(1 + 1/a)‖Δz‖² with a chosen so that τL₀ is halfway to 1.
            let a = (1.0 / cfg.tau0 - 1.0) / 2.0;
            let l0 = (1.0 + a) * l;
            let l_z = 1.0 + 1.0 / a;
            let sigma_p = cfg.sigma_p0 / (l_z * (1.0 + cfg.sigma_d0));
            let sigma_d = cfg.sigma_d0 * l_z / k2;
            let denom = 1.0 - sigma_p * l_z;
            let beta = sigma_p * sigma_d * k2 / denom;
            out.young_a = Some(a);
            out.l_z = Some(l_z);
            out.sigma_p = Some(sigma_p);
            out.sigma_d = Some(sigma_d);
            out.beta = Some(beta);
            out.remainder_factor = 1.0 + a;
            ineq.push(Inequality::new("sigma_p_l_z", sigma_p * l_z, 1.0, true));
            ineq.push(Inequality::new("beta_positive", 0.0, beta, true));
            ineq.push(Inequality::new("beta_below_one", beta, 1.0, true));
            // K_μ = 0, so the measure-step condition reads 0 < (1 − τL₀)(1 − β).
            ineq.push(Inequality::new("measure_step", 0.0, (1.0 - out.tau * l0) * (1.0 - beta), true));
            ineq.push(Inequality::new("theta_tau_lsum", cfg.theta0, 1.0, false));
            ineq.push(Inequality::new("sigma_p_sigma_d_k", sigma_p * sigma_d * k2, 1.0, false));
            if !(denom > 0.0 && beta > 0.0 && beta < 1.0) {
                return Err(SolverError::InfeasibleSteps(format!("no admissible beta: beta = {beta}")));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constants(l: f64) -> ModelConstants {
        ModelConstants {
            l,
            l_bound: None,
            n_psi: 11,
            l_phi: 1.0,
            l_grad_phi: 1.0,
            m_phi: 1.0,
            theta_f: 1.0,
            theta_f_refined: 1.0,
            l_radon: 0.1,
            sup_grad_sq: 1.0,
        }
    }

    #[test]
    fn tau_scales_inversely_with_l() {
        let cfg = StepConfig::defaults(Method::Sfb, 1);
        let a = resolve_steps(Method::Sfb, &cfg, &constants(0.1), None).unwrap();
        let b = resolve_steps(Method::Sfb, &cfg, &constants(0.2), None).unwrap();
        assert_eq!(a.tau, 2.0 * b.tau);
        assert!(a.all_hold());
    }

    #[test]
    fn biased_steps_satisfy_conditions() {
        let cfg = StepConfig::defaults(Method::Spdps, 1);
        let s = resolve_steps(Method::Spdps, &cfg, &constants(0.1), Some(4.0)).unwrap();
        assert!(s.all_hold(), "{:?}", s.inequalities);
        assert!((s.beta.unwrap() - 0.825).abs() < 1e-3);
        assert!((s.l_z.unwrap() - 199.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_beta_is_reported() {
        let mut cfg = StepConfig::defaults(Method::Spdps, 1);
        cfg.sigma_d0 = 50.0;
        cfg.sigma_p0 = 50.0;
        assert!(matches!(
            resolve_steps(Method::Spdps, &cfg, &constants(0.1), Some(4.0)),
            Err(SolverError::InfeasibleSteps(_))
        ));
    }
}
