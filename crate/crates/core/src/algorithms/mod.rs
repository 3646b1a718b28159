//! Outer solvers: sliding and non-sliding forward-backward, primal-dual and
//! conditional-gradient methods, with their insertion, transport, merging and
//! step-length machinery.

mod bias;
pub mod insertion;
pub mod merge;
mod solver;
pub mod steps;
pub mod transport;

use serde::{Deserialize, Serialize};

pub use bias::{BiasTerm, GradientOperator};
pub use insertion::{insert_and_adjust, insert_and_adjust_warm, insert_and_adjust_radon, Insertion, InsertionConfig, InsertionEvent};
pub use merge::{merge_spikes, MergePolicy};
pub use solver::{IterationRecord, Solver, SolverError, SolverState};
pub use steps::{resolve_steps, Inequality, ResolvedSteps};

use crate::experiment::ExperimentKind;
use crate::forward::ForwardModel;
use crate::measures::{radon_norm, DiscreteMeasure};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "mufb")]
    MuFb,
    #[serde(rename = "mupdps")]
    MuPdps,
    #[serde(rename = "fwf")]
    Fwf,
    #[serde(rename = "sfb")]
    Sfb,
    #[serde(rename = "radon2fb")]
    Radon2Fb,
    #[serde(rename = "radon2sfb")]
    Radon2Sfb,
    #[serde(rename = "spdps")]
    Spdps,
    #[serde(rename = "fpdps")]
    Fpdps,
    #[serde(rename = "radon2spdps")]
    Radon2Spdps,
    #[serde(rename = "radon2fpdps")]
    Radon2Fpdps,
}

/// Marginal energy used by the measure step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Marginal {
    /// `½‖·‖²_𝒟`, weights by Algorithm-1 insertion.
    D,
    /// `½‖·‖²_ℳ`, single-point insertion.
    Radon,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    ForwardBackward,
    MeasurePdps,
    ConditionalGradient,
    BiasedPdps,
}

impl Method {
    pub const ALL: [Method; 10] = [
        Method::MuFb,
        Method::MuPdps,
        Method::Fwf,
        Method::Sfb,
        Method::Radon2Fb,
        Method::Radon2Sfb,
        Method::Spdps,
        Method::Fpdps,
        Method::Radon2Spdps,
        Method::Radon2Fpdps,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::MuFb => "mufb",
            Method::MuPdps => "mupdps",
            Method::Fwf => "fwf",
            Method::Sfb => "sfb",
            Method::Radon2Fb => "radon2fb",
            Method::Radon2Sfb => "radon2sfb",
            Method::Spdps => "spdps",
            Method::Fpdps => "fpdps",
            Method::Radon2Spdps => "radon2spdps",
            Method::Radon2Fpdps => "radon2fpdps",
        }
    }

    pub fn family(self) -> Family {
        match self {
            Method::MuFb | Method::Sfb | Method::Radon2Fb | Method::Radon2Sfb => Family::ForwardBackward,
            Method::MuPdps => Family::MeasurePdps,
            Method::Fwf => Family::ConditionalGradient,
            Method::Spdps | Method::Fpdps | Method::Radon2Spdps | Method::Radon2Fpdps => Family::BiasedPdps,
        }
    }

    pub fn marginal(self) -> Marginal {
        match self {
            Method::Radon2Fb | Method::Radon2Sfb | Method::Radon2Spdps | Method::Radon2Fpdps => Marginal::Radon,
            _ => Marginal::D,
        }
    }

    /// Whether the method takes transport steps.
    pub fn is_sliding(self) -> bool {
        matches!(self, Method::Sfb | Method::Radon2Sfb | Method::Spdps | Method::Radon2Spdps)
    }

    /// Methods without a convergence theory in this setting.
    pub fn is_experimental(self) -> bool {
        matches!(self, Method::Radon2Spdps | Method::Radon2Fpdps)
    }

    pub fn applies_to(self, kind: ExperimentKind) -> bool {
        (self.family() == Family::BiasedPdps) == kind.is_biased()
    }

    /// Methods run on `kind` by default.
    pub fn roster(kind: ExperimentKind) -> Vec<Method> {
        Method::ALL.into_iter().filter(|m| m.applies_to(kind)).collect()
    }
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Method::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Method::ALL.iter().map(|m| m.name()).collect();
            format!("unknown method '{s}' (expected one of {})", names.join(", "))
        })
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// How `ℓ_F` in the curvature bound is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum LipschitzRule {
    /// `√(2N_ψ)·L_∇φ·‖Aμᵏ − b‖` at the current iterate.
    Live,
    Fixed { value: f64 },
}

/// Relative step factors and control parameters of a method.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepConfig {
    pub tau0: f64,
    /// Transport step factor; zero disables sliding.
    pub theta0: f64,
    /// Dual step factor of μPDPS.
    pub sigma0: f64,
    pub sigma_p0: f64,
    pub sigma_d0: f64,
    /// Subproblem fractional tolerance.
    pub kappa: f64,
    /// Convexity-control multiplier.
    pub c_con: f64,
    /// Constant `c` of the tightened tolerance `min{ε, cε²/‖γ‖}`.
    pub tighten_c: f64,
    pub merge: MergePolicy,
    /// Radius of the interpolating clean-up merge after the last step.
    pub cleanup_radius: f64,
    pub lipschitz: LipschitzRule,
}

impl StepConfig {
    /// Defaults for `method` on a `dim`-dimensional problem.
    pub fn defaults(method: Method, dim: usize) -> StepConfig {
        let base = StepConfig {
            tau0: 0.99,
            theta0: 0.0,
            sigma0: 0.0,
            sigma_p0: 0.0,
            sigma_d0: 0.0,
            kappa: 0.5,
            c_con: 0.0,
            tighten_c: 1.0,
            merge: MergePolicy::None,
            cleanup_radius: 0.01,
            lipschitz: LipschitzRule::Live,
        };
        let two_d = dim >= 2;
        match method {
            Method::MuFb => base,
            Method::MuPdps => StepConfig {
                tau0: 5.0,
                sigma0: 0.198,
                merge: MergePolicy::Interpolate { radius: 0.01 },
                ..base
            },
            Method::Fwf => StepConfig { tau0: 1.0, merge: MergePolicy::Interpolate { radius: 0.01 }, ..base },
            Method::Sfb => StepConfig { theta0: 0.9, c_con: 100.0, ..base },
            Method::Radon2Fb => StepConfig { merge: MergePolicy::MoveMass { radius: 0.01 }, ..base },
            Method::Radon2Sfb => StepConfig {
                theta0: 0.9,
                c_con: 1000.0,
                merge: MergePolicy::MoveMass { radius: 0.01 },
                ..base
            },
            Method::Spdps => StepConfig { theta0: 0.9, sigma_p0: 0.99, sigma_d0: 0.05, c_con: 100.0, ..base },
            Method::Fpdps => StepConfig { sigma_p0: 0.99, sigma_d0: 0.05, ..base },
            Method::Radon2Spdps => StepConfig {
                theta0: 0.3,
                sigma_p0: 0.99,
                sigma_d0: if two_d { 0.15 } else { 0.05 },
                c_con: if two_d { 10_000.0 } else { 1000.0 },
                merge: MergePolicy::MoveMass { radius: 0.01 },
                ..base
            },
            Method::Radon2Fpdps => StepConfig {
                sigma_p0: 0.99,
                sigma_d0: if two_d { 0.15 } else { 0.05 },
                merge: MergePolicy::MoveMass { radius: 0.01 },
                ..base
            },
        }
    }
}

/// `εₖ = ½·base/(1 + 0.2k)^{1.4}` for `k = 1, 2, …`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToleranceSchedule {
    /// `τα`.
    pub base: f64,
    /// Number of initial iterations inserting at most one point.
    pub bootstrap: usize,
}

impl ToleranceSchedule {
    pub fn new(base: f64) -> Self {
        ToleranceSchedule { base, bootstrap: 10 }
    }

    pub fn eps(&self, k: usize) -> f64 {
        0.5 * self.base / (1.0 + 0.2 * k as f64).powf(1.4)
    }

    pub fn is_bootstrap(&self, k: usize) -> bool {
        k <= self.bootstrap
    }
}

/// `min_{μ ≥ 0} ½‖Aμ + z − b‖² + α‖μ‖_ℳ [+ λ‖∇_h z‖_{2,1}]`.
#[derive(Clone, Debug)]
pub struct Problem<'a, const N: usize> {
    pub model: &'a ForwardModel<N>,
    pub b: &'a [f64],
    pub alpha: f64,
    pub bias: Option<BiasTerm<N>>,
}

impl<'a, const N: usize> Problem<'a, N> {
    pub fn new(model: &'a ForwardModel<N>, b: &'a [f64], alpha: f64) -> Self {
        assert_eq!(b.len(), model.sensor_count());
        Problem { model, b, alpha, bias: None }
    }

    /// Adds a total-variation regularised bias on the sensor grid.
    pub fn with_bias(mut self, lambda: f64) -> Self {
        let grid = self.model.grid.as_ref().expect("a bias needs a sensor grid");
        self.bias = Some(BiasTerm { lambda, grad: GradientOperator::new(grid.counts) });
        self
    }

    pub fn diameter(&self) -> f64 {
        self.model.domain.diameter()
    }

    /// `Aμ + z − b`.
    pub fn residual(&self, mu: &DiscreteMeasure<N>, z: Option<&[f64]>) -> Vec<f64> {
        let mut r = self.model.residual(mu, self.b);
        if let Some(z) = z {
            for (ri, zi) in r.iter_mut().zip(z) {
                *ri += zi;
            }
        }
        r
    }

    pub fn objective(&self, mu: &DiscreteMeasure<N>, z: Option<&[f64]>) -> f64 {
        let r = self.residual(mu, z);
        let mut v = crate::forward::half_sq_norm(&r) + self.alpha * radon_norm(mu, self.diameter());
        if let (Some(bias), Some(z)) = (&self.bias, z) {
            v += bias.lambda * bias.grad.tv(z);
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("sfbx".parse::<Method>().is_err());
    }

    #[test]
    fn rosters() {
        let fast = Method::roster(ExperimentKind::Fast1d);
        assert_eq!(
            fast,
            vec![Method::MuFb, Method::MuPdps, Method::Fwf, Method::Sfb, Method::Radon2Fb, Method::Radon2Sfb]
        );
        assert_eq!(Method::roster(ExperimentKind::Biased2d).len(), 4);
    }

    #[test]
    fn table_defaults() {
        let s = StepConfig::defaults(Method::Sfb, 1);
        assert_eq!((s.tau0, s.theta0, s.c_con), (0.99, 0.9, 100.0));
        let p = StepConfig::defaults(Method::MuPdps, 2);
        assert_eq!((p.tau0, p.sigma0), (5.0, 0.198));
        assert_eq!(p.merge, MergePolicy::Interpolate { radius: 0.01 });
        let s = StepConfig::defaults(Method::Spdps, 1);
        assert_eq!((s.tau0, s.theta0, s.sigma_p0, s.sigma_d0), (0.99, 0.9, 0.99, 0.05));
        let r = StepConfig::defaults(Method::Radon2Spdps, 2);
        assert_eq!((r.theta0, r.sigma_d0, r.c_con), (0.3, 0.15, 10_000.0));
        assert_eq!(StepConfig::defaults(Method::Radon2Fpdps, 1).sigma_d0, 0.05);
    }

    #[test]
    fn tolerance_schedule() {
        let t = ToleranceSchedule::new(0.6);
        assert!((t.eps(0) - 0.3).abs() < 1e-15);
        let mut prev = f64::INFINITY;
        for k in 1..5000 {
            let e = t.eps(k);
            assert!(e > 0.0 && e < prev);
            prev = e;
        }
        assert!(t.is_bootstrap(10) && !t.is_bootstrap(11));
    }
}
