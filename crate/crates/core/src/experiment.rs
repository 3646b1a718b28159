//! Synthetic test problems: ground truth, optional bias image and noisy data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::forward::ForwardModel;
use crate::measures::{dist, DiscreteMeasure, Domain, Sign};
use crate::Loc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Fast1d,
    Fast2d,
    Biased1d,
    Biased2d,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 4] =
        [ExperimentKind::Fast1d, ExperimentKind::Fast2d, ExperimentKind::Biased1d, ExperimentKind::Biased2d];

    pub fn dim(self) -> usize {
        match self {
            ExperimentKind::Fast1d | ExperimentKind::Biased1d => 1,
            ExperimentKind::Fast2d | ExperimentKind::Biased2d => 2,
        }
    }

    pub fn is_biased(self) -> bool {
        matches!(self, ExperimentKind::Biased1d | ExperimentKind::Biased2d)
    }

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Fast1d => "fast1d",
            ExperimentKind::Fast2d => "fast2d",
            ExperimentKind::Biased1d => "biased1d",
            ExperimentKind::Biased2d => "biased2d",
        }
    }

    /// Default noise level and regularisation parameters.
    pub fn default_params(self) -> ProblemParams {
        match self {
            ExperimentKind::Fast1d => ProblemParams { noise_std: 0.2, alpha: 0.06, lambda: None },
            ExperimentKind::Fast2d => ProblemParams { noise_std: 0.15, alpha: 0.12, lambda: None },
            ExperimentKind::Biased1d => ProblemParams { noise_std: 0.1, alpha: 0.2, lambda: Some(0.02) },
            ExperimentKind::Biased2d => ProblemParams { noise_std: 0.15, alpha: 0.06, lambda: Some(0.005) },
        }
    }

    /// Sensors per axis and spread half-width.
    pub fn geometry(self) -> (usize, f64) {
        match self.dim() {
            1 => (100, 0.05),
            _ => (16, 0.15),
        }
    }
}

impl std::str::FromStr for ExperimentKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown experiment '{s}' (expected fast1d, fast2d, biased1d or biased2d)"))
    }
}

impl std::fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemParams {
    pub noise_std: f64,
    pub alpha: f64,
    /// Total-variation weight of the bias term, for biased problems.
    pub lambda: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub b: Vec<f64>,
    pub clean: Vec<f64>,
    pub noise_std: f64,
}

impl Observation {
    /// `10 log₁₀(‖clean‖² / ‖b − clean‖²)`.
    pub fn snr_db(&self) -> f64 {
        let s: f64 = self.clean.iter().map(|v| v * v).sum();
        let n: f64 = self.b.iter().zip(&self.clean).map(|(b, c)| (b - c).powi(2)).sum();
        10.0 * (s / n).log10()
    }
}

#[derive(Clone, Debug)]
pub struct Experiment<const N: usize> {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub model: ForwardModel<N>,
    pub truth: DiscreteMeasure<N>,
    /// Bias image on the sensor grid, for biased problems.
    pub truth_bias: Option<Vec<f64>>,
    pub observation: Observation,
    pub params: ProblemParams,
}

/// Builds the forward model for `kind`.
pub fn model_for<const N: usize>(kind: ExperimentKind) -> ForwardModel<N> {
    assert_eq!(kind.dim(), N, "experiment {kind} is {}-dimensional", kind.dim());
    let (count, w) = kind.geometry();
    ForwardModel::sensor_grid(Domain::unit(), [count; N], w)
}

/// Generates ground truth and data for `kind` with the default parameters.
pub fn generate_experiment<const N: usize>(kind: ExperimentKind, seed: u64) -> Experiment<N> {
    generate_with_model(kind, seed, model_for(kind), kind.default_params())
}

pub fn generate_with_model<const N: usize>(
    kind: ExperimentKind,
    seed: u64,
    model: ForwardModel<N>,
    params: ProblemParams,
) -> Experiment<N> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let spacing = model.grid.as_ref().map(|g| g.spacing[0]).unwrap_or(0.01);
    let truth = ground_truth(&mut rng, &model.domain, 4.0 * spacing);
    let mut clean = model.apply_a(&truth);
    let truth_bias = kind.is_biased().then(|| {
        let z = bias_image(&mut rng, &model);
        for (c, zi) in clean.iter_mut().zip(&z) {
            *c += zi;
        }
        z
    });
    let b = clean.iter().map(|c| c + params.noise_std * gaussian(&mut rng)).collect();
    Experiment {
        kind,
        seed,
        model,
        truth,
        truth_bias,
        observation: Observation { b, clean, noise_std: params.noise_std },
        params,
    }
}

/// Four spikes in the central 80% of the domain with pairwise separation at
/// least `min_sep` and pairwise distinct weights in `[2, 10]`.
fn ground_truth<const N: usize>(rng: &mut ChaCha20Rng, domain: &Domain<N>, min_sep: f64) -> DiscreteMeasure<N> {
    let mut locs: Vec<Loc<N>> = Vec::new();
    while locs.len() < 4 {
        let x: Loc<N> = std::array::from_fn(|a| {
            let t = rng.gen_range(0.1..0.9);
            domain.lower[a] + t * (domain.upper[a] - domain.lower[a])
        });
        if locs.iter().all(|y| dist(&x, y) >= min_sep) {
            locs.push(x);
        }
    }
    let mut weights: Vec<f64> = Vec::new();
    while weights.len() < 4 {
        let w = rng.gen_range(2.0..10.0);
        if weights.iter().all(|v: &f64| (v - w).abs() >= 0.5) {
            weights.push(w);
        }
    }
    DiscreteMeasure::from_spikes(locs.into_iter().zip(weights), Sign::Nonnegative).expect("positive weights")
}

/// Sum of two weighted indicators (intervals in 1D, balls in 2D) sampled at
/// the sensor centres.
fn bias_image<const N: usize>(rng: &mut ChaCha20Rng, model: &ForwardModel<N>) -> Vec<f64> {
    let regions: Vec<(Loc<N>, f64, f64)> = [0.5, -0.3]
        .into_iter()
        .map(|weight| {
            let c: Loc<N> = std::array::from_fn(|_| rng.gen_range(0.25..0.75));
            let radius = rng.gen_range(0.1..0.2);
            (c, radius, weight)
        })
        .collect();
    model
        .centers()
        .iter()
        .map(|x| regions.iter().filter(|(c, r, _)| dist(x, c) <= *r).map(|(_, _, w)| w).sum())
        .collect()
}

/// Standard normal sample by the Box–Muller transform.
fn gaussian(rng: &mut ChaCha20Rng) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_parameters() {
        let p = ExperimentKind::Fast1d.default_params();
        assert_eq!((p.noise_std, p.alpha, p.lambda), (0.2, 0.06, None));
        let p = ExperimentKind::Biased2d.default_params();
        assert_eq!((p.noise_std, p.alpha, p.lambda), (0.15, 0.06, Some(0.005)));
        let p = ExperimentKind::Fast2d.default_params();
        assert_eq!((p.noise_std, p.alpha), (0.15, 0.12));
        let p = ExperimentKind::Biased1d.default_params();
        assert_eq!((p.noise_std, p.alpha, p.lambda), (0.1, 0.2, Some(0.02)));
    }

    #[test]
    fn ground_truth_contract() {
        let e = generate_experiment::<1>(ExperimentKind::Fast1d, 7);
        assert_eq!(e.truth.len(), 4);
        let w: Vec<f64> = e.truth.weights().collect();
        for i in 0..4 {
            assert!((2.0..=10.0).contains(&w[i]));
            for j in 0..i {
                assert_ne!(w[i], w[j]);
                assert!(dist(&e.truth.spikes()[i].loc, &e.truth.spikes()[j].loc) >= 0.04);
            }
        }
        assert!(e.truth_bias.is_none());
    }

    #[test]
    fn seeded_generation_is_reproducible() {
        let a = generate_experiment::<1>(ExperimentKind::Biased1d, 11);
        let b = generate_experiment::<1>(ExperimentKind::Biased1d, 11);
        assert_eq!(a.observation, b.observation);
        assert_eq!(a.truth_bias, b.truth_bias);
        let c = generate_experiment::<1>(ExperimentKind::Biased1d, 12);
        assert_ne!(a.observation.b, c.observation.b);
    }

    #[test]
    fn gaussian_moments() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let xs: Vec<f64> = (0..200_000).map(|_| gaussian(&mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64;
        assert!(mean.abs() < 0.01 && (var - 1.0).abs() < 0.01);
    }
}
