//! Experiment configuration.

use serde::{Deserialize, Serialize};

use crate::algorithms::{Method, StepConfig};
use crate::experiment::{ExperimentKind, ProblemParams};

use super::HarnessError;

/// Outer iteration cap of the reference protocol.
pub const DEFAULT_ITERATIONS: usize = 4000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodSpec {
    pub method: Method,
    pub config: StepConfig,
}

impl MethodSpec {
    pub fn defaults(method: Method, kind: ExperimentKind) -> Self {
        MethodSpec { method, config: StepConfig::defaults(method, kind.dim()) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub iterations: usize,
    /// Worker threads for branch-and-bound.
    pub threads: usize,
    pub params: ProblemParams,
    pub methods: Vec<MethodSpec>,
}

impl ExperimentSpec {
    /// Default parameters and the full method roster of `kind`.
    pub fn new(kind: ExperimentKind, seed: u64) -> Self {
        ExperimentSpec {
            kind,
            seed,
            iterations: DEFAULT_ITERATIONS,
            threads: 1,
            params: kind.default_params(),
            methods: Method::roster(kind).into_iter().map(|m| MethodSpec::defaults(m, kind)).collect(),
        }
    }

    /// Restricts the roster to one method.
    pub fn with_method(mut self, method: Method) -> Self {
        self.methods = vec![MethodSpec::defaults(method, self.kind)];
        self
    }

    pub fn with_iterations(mut self, iterations: usize) -> Self {
        self.iterations = iterations;
        self
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = threads;
        self
    }

    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let spec: ExperimentSpec = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("spec serialises")
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.methods.is_empty() {
            return Err(HarnessError::Config("empty method roster".into()));
        }
        if self.threads == 0 {
            return Err(HarnessError::Config("threads must be at least 1".into()));
        }
        if !(self.params.alpha > 0.0) || !(self.params.noise_std >= 0.0) {
            return Err(HarnessError::Config("alpha must be positive and noise_std nonnegative".into()));
        }
        if self.kind.is_biased() != self.params.lambda.is_some() {
            return Err(HarnessError::Config(format!("lambda must be given exactly for biased experiments ({})", self.kind)));
        }
        for m in &self.methods {
            if !m.method.applies_to(self.kind) {
                return Err(HarnessError::Config(format!("method {} does not apply to {}", m.method, self.kind)));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        for kind in ExperimentKind::ALL {
            let spec = ExperimentSpec::new(kind, 7);
            let text = spec.to_toml();
            assert_eq!(ExperimentSpec::from_toml(&text).unwrap(), spec);
        }
    }

    #[test]
    fn inapplicable_method_is_rejected() {
        let mut spec = ExperimentSpec::new(ExperimentKind::Fast1d, 1);
        spec.methods.push(MethodSpec::defaults(Method::Spdps, ExperimentKind::Fast1d));
        assert!(matches!(spec.validate(), Err(HarnessError::Config(_))));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = format!("bogus = 1\n{}", ExperimentSpec::new(ExperimentKind::Fast1d, 1).to_toml());
        assert!(ExperimentSpec::from_toml(&text).is_err());
    }
}
