//! Sensor-grid forward operator `[Aμ]ᵢ = ∫ φᵢ dμ` with `φᵢ = θᵢ∗ψ`, its
//! preadjoint and the constants the step-length rules need.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::kernels::{CertificateFunction, Kernel, Profile};
use crate::measures::{d_inner, sub, DiscreteMeasure, Domain, Sign};
use crate::Loc;

/// Uniform tensor grid of sensors on a [`Domain`], centres at cell midpoints.
#[derive(Clone, Debug, PartialEq)]
pub struct SensorGrid<const N: usize> {
    pub counts: [usize; N],
    pub spacing: [f64; N],
    /// Footprint half-width `r`.
    pub r: f64,
    /// Centres, first axis varying fastest.
    pub centers: Vec<Loc<N>>,
}

impl<const N: usize> SensorGrid<N> {
    /// `counts` sensors per axis, footprint half-width `0.4 × spacing`.
    pub fn uniform(domain: &Domain<N>, counts: [usize; N]) -> Self {
        let spacing: [f64; N] = std::array::from_fn(|i| (domain.upper[i] - domain.lower[i]) / counts[i] as f64);
        let total: usize = counts.iter().product();
        let centers = (0..total)
            .map(|flat| {
                let idx = Self::unflatten_with(counts, flat);
                std::array::from_fn(|i| domain.lower[i] + (idx[i] as f64 + 0.5) * spacing[i])
            })
            .collect();
        let r = 0.4 * spacing.iter().cloned().fold(f64::INFINITY, f64::min);
        SensorGrid { counts, spacing, r, centers }
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    fn unflatten_with(counts: [usize; N], mut flat: usize) -> [usize; N] {
        std::array::from_fn(|i| {
            let v = flat % counts[i];
            flat /= counts[i];
            v
        })
    }

    pub fn unflatten(&self, flat: usize) -> [usize; N] {
        Self::unflatten_with(self.counts, flat)
    }

    pub fn flatten(&self, idx: [usize; N]) -> usize {
        let mut flat = 0;
        for i in (0..N).rev() {
            flat = flat * self.counts[i] + idx[i];
        }
        flat
    }
}

/// Constants of the forward model used by step-length and control rules.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelConstants {
    /// Estimated `L` with `A_*A ≼ L𝒟`.
    pub l: f64,
    /// Analytic upper bound for `L`, when the kernels admit one.
    pub l_bound: Option<f64>,
    /// Maximum number of sensor supports containing any one point.
    pub n_psi: usize,
    /// Lipschitz constant of each `φᵢ`.
    pub l_phi: f64,
    /// Lipschitz constant of each `∇φᵢ`.
    pub l_grad_phi: f64,
    /// `sup|φᵢ|`.
    pub m_phi: f64,
    /// `Θ_F = √(2 Σᵢ Lᵢ²)`.
    pub theta_f: f64,
    /// `√(4 N_ψ L_φ²)`.
    pub theta_f_refined: f64,
    /// `sup_x Σᵢ φᵢ(x)²`, the Lipschitz factor of `A_*A` against `‖·‖²_ℳ`.
    pub l_radon: f64,
    /// `sup_x Σᵢ |∇φᵢ(x)|²`.
    pub sup_grad_sq: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum ForwardError {
    #[error("⟨𝒟μ|μ⟩ = {0} ≤ 0 for a nonzero test measure; kernel is not positive definite on the grid")]
    NonPositiveEnergy(f64),
    #[error("grid resolution {0} below the minimum of 64 per axis")]
    ResolutionTooSmall(usize),
}

/// The operator `A`, together with `ψ`, `ρ` and the sensor kernel.
#[derive(Clone, Debug)]
pub struct ForwardModel<const N: usize> {
    pub domain: Domain<N>,
    pub grid: Option<SensorGrid<N>>,
    centers: Vec<Loc<N>>,
    /// Sensor indices sorted by first coordinate.
    order: Vec<usize>,
    pub sensor_kernel: Kernel<N>,
    pub psi: Option<Kernel<N>>,
    pub rho: Kernel<N>,
    pub constants: ModelConstants,
}

impl<const N: usize> ForwardModel<N> {
    /// Standard model: `counts` sensors per axis with box footprints of
    /// half-width `0.4 × spacing`, spread `ψ` of half-width `w`, `ρ = ψ∗ψ`
    /// normalised to unit peak.
    pub fn sensor_grid(domain: Domain<N>, counts: [usize; N], w: f64) -> Self {
        let grid = SensorGrid::uniform(&domain, counts);
        let (psi, rho) = crate::kernels::fast_spread_pair::<N>(w);
        let sensor_kernel = Kernel::new(Profile::BoxCubic { r: grid.r, w }, psi.amplitude());
        // ‖Aμ‖² ≤ Σᵢ‖θᵢ‖²∫_{supp θᵢ}(ψ∗μ)² ≤ (2r)ᴺ ‖ψ‖² ⟨𝒟μ|μ⟩ for disjoint footprints.
        let psi_sq = psi.amplitude().powi(2) * (w * 26.0 / 35.0).powi(N as i32);
        let bound = (2.0 * grid.r).powi(N as i32) * psi_sq;
        let mut model = Self::from_parts(domain, grid.centers.clone(), sensor_kernel, rho, Some(psi));
        model.grid = Some(grid);
        model.constants.l_bound = Some(bound);
        let resolution = if N == 1 { 256 } else { 64 };
        model.constants.l = model.estimate_l(resolution).expect("ρ is positive definite by construction");
        model
    }

    /// Model from explicit sensor centres. `constants.l` is left at 0 until
    /// [`ForwardModel::estimate_l`] is stored into it.
    pub fn from_parts(
        domain: Domain<N>,
        centers: Vec<Loc<N>>,
        sensor_kernel: Kernel<N>,
        rho: Kernel<N>,
        psi: Option<Kernel<N>>,
    ) -> Self {
        let mut order: Vec<usize> = (0..centers.len()).collect();
        order.sort_by(|&a, &b| centers[a][0].total_cmp(&centers[b][0]));
        let mut model = ForwardModel {
            domain,
            grid: None,
            centers,
            order,
            sensor_kernel,
            psi,
            rho,
            constants: ModelConstants {
                l: 0.0,
                l_bound: None,
                n_psi: 0,
                l_phi: 0.0,
                l_grad_phi: 0.0,
                m_phi: 0.0,
                theta_f: 0.0,
                theta_f_refined: 0.0,
                l_radon: 0.0,
                sup_grad_sq: 0.0,
            },
        };
        model.constants = model.derive_constants();
        model
    }

    pub fn sensor_count(&self) -> usize {
        self.centers.len()
    }

    pub fn centers(&self) -> &[Loc<N>] {
        &self.centers
    }

    /// Sensor indices whose footprint may contain `x`, in index order of the
    /// first-coordinate sort.
    fn near(&self, x: &Loc<N>) -> impl Iterator<Item = usize> + '_ {
        let r = self.sensor_kernel.support_radius();
        let lo = self.order.partition_point(|&i| self.centers[i][0] <= x[0] - r);
        let hi = self.order.partition_point(|&i| self.centers[i][0] < x[0] + r);
        let x = *x;
        self.order[lo..hi.max(lo)]
            .iter()
            .copied()
            .filter(move |&i| (1..N).all(|a| (self.centers[i][a] - x[a]).abs() < r))
    }

    /// `φᵢ(x)`.
    pub fn sensor_response(&self, i: usize, x: &Loc<N>) -> f64 {
        self.sensor_kernel.eval(&sub(x, &self.centers[i]))
    }

    pub fn apply_a(&self, mu: &DiscreteMeasure<N>) -> Vec<f64> {
        let mut out = vec![0.0; self.centers.len()];
        for s in mu.spikes() {
            for i in self.near(&s.loc) {
                out[i] += s.weight * self.sensor_kernel.eval(&sub(&s.loc, &self.centers[i]));
            }
        }
        out
    }

    /// `A_*z` as a sum of sensor bumps.
    pub fn preadjoint(&self, z: &[f64]) -> CertificateFunction<N> {
        assert_eq!(z.len(), self.centers.len(), "dual vector length must equal the sensor count");
        CertificateFunction::constant(0.0)
            .with_bumps(self.sensor_kernel, self.centers.iter().copied().zip(z.iter().copied()))
    }

    /// `[A_*z](x)`.
    pub fn preadjoint_apply(&self, z: &[f64], x: &Loc<N>) -> f64 {
        self.near(x).map(|i| z[i] * self.sensor_kernel.eval(&sub(x, &self.centers[i]))).sum()
    }

    /// `∇[A_*z](x)`.
    pub fn preadjoint_grad(&self, z: &[f64], x: &Loc<N>) -> Loc<N> {
        let mut g = [0.0; N];
        for i in self.near(x) {
            let d = self.sensor_kernel.grad(&sub(x, &self.centers[i]));
            for a in 0..N {
                g[a] += z[i] * d[a];
            }
        }
        g
    }

    fn derive_constants(&self) -> ModelConstants {
        let k = &self.sensor_kernel;
        let n_psi = self.count_overlap();
        let l_phi = k.lipschitz_value();
        let m = self.centers.len() as f64;
        // Dense sampling of Σφᵢ² and Σ|∇φᵢ|²; both are smooth, margin 2%.
        let (mut sup_sq, mut sup_grad_sq, mut m_phi) = (0.0f64, 0.0f64, 0.0f64);
        let per_axis: usize = if N == 1 { 20_000 } else { 400 };
        let total = per_axis.pow(N as u32);
        for flat in 0..total {
            let mut rem = flat;
            let x: Loc<N> = std::array::from_fn(|a| {
                let t = (rem % per_axis) as f64 / (per_axis - 1) as f64;
                rem /= per_axis;
                self.domain.lower[a] + t * (self.domain.upper[a] - self.domain.lower[a])
            });
            let (mut s, mut g) = (0.0, 0.0);
            for i in self.near(&x) {
                let (v, d) = k.value_and_grad(&sub(&x, &self.centers[i]));
                s += v * v;
                g += crate::measures::dot(&d, &d);
                m_phi = m_phi.max(v.abs());
            }
            sup_sq = sup_sq.max(s);
            sup_grad_sq = sup_grad_sq.max(g);
        }
        ModelConstants {
            l: self.constants.l,
            l_bound: self.constants.l_bound,
            n_psi,
            l_phi,
            l_grad_phi: k.lipschitz_grad(),
            m_phi: 1.02 * m_phi,
            theta_f: (2.0 * m * l_phi * l_phi).sqrt(),
            theta_f_refined: (4.0 * n_psi as f64 * l_phi * l_phi).sqrt(),
            l_radon: 1.02 * sup_sq,
            sup_grad_sq: 1.02 * sup_grad_sq,
        }
    }

    /// Maximum number of sensor supports meeting at a point: the largest
    /// count of centres inside a half-open box of side `2R` anchored at
    /// centre coordinates.
    fn count_overlap(&self) -> usize {
        let r = self.sensor_kernel.support_radius();
        let mut axes: Vec<Vec<f64>> = (0..N)
            .map(|a| {
                let mut v: Vec<f64> = self.centers.iter().map(|c| c[a]).collect();
                v.sort_by(f64::total_cmp);
                v.dedup();
                v
            })
            .collect();
        for v in &mut axes {
            if v.is_empty() {
                return 0;
            }
        }
        let combos: usize = axes.iter().map(Vec::len).product();
        let mut best = 0;
        for flat in 0..combos {
            let mut rem = flat;
            let anchor: Loc<N> = std::array::from_fn(|a| {
                let v = axes[a][rem % axes[a].len()];
                rem /= axes[a].len();
                v
            });
            // Open supports: a centre at distance exactly 2R cannot share a point.
            let count = self
                .centers
                .iter()
                .filter(|c| (0..N).all(|a| c[a] >= anchor[a] && c[a] - anchor[a] < 2.0 * r))
                .count();
            best = best.max(count);
        }
        best
    }

    /// Randomised estimate of the smallest `L` with `‖Aμ‖² ≤ L‖μ‖²_𝒟` over
    /// grid-supported test measures, times 1.05.
    pub fn estimate_l(&self, grid_resolution: usize) -> Result<f64, ForwardError> {
        if grid_resolution < 64 {
            return Err(ForwardError::ResolutionTooSmall(grid_resolution));
        }
        let res = grid_resolution;
        let point = |idx: [usize; N]| -> Loc<N> {
            std::array::from_fn(|a| {
                let t = (idx[a] as f64 + 0.5) / res as f64;
                self.domain.lower[a] + t * (self.domain.upper[a] - self.domain.lower[a])
            })
        };
        let mut rng = ChaCha20Rng::seed_from_u64(0x5eed_1a7e);
        let mut best = 0.0f64;
        let mut consider = |mu: &DiscreteMeasure<N>| -> Result<(), ForwardError> {
            let e = d_inner(mu, mu, &self.rho);
            if e <= 0.0 {
                return Err(ForwardError::NonPositiveEnergy(e));
            }
            let a: f64 = self.apply_a(mu).iter().map(|v| v * v).sum();
            best = best.max(a / e);
            Ok(())
        };
        let total = res.pow(N as u32);
        for flat in 0..total {
            let idx: [usize; N] = {
                let mut rem = flat;
                std::array::from_fn(|_| {
                    let v = rem % res;
                    rem /= res;
                    v
                })
            };
            consider(&single(point(idx)))?;
        }
        // Local clusters of a few signed atoms at grid points.
        let cluster = (2.0 * self.rho.support_radius() * res as f64).ceil().max(2.0) as usize;
        for trial in 0..4000 {
            let k = 2 + trial % 11;
            let base: [usize; N] = std::array::from_fn(|_| rng.gen_range(0..res));
            let alternating = trial % 3 == 0;
            let mut mu = DiscreteMeasure::signed();
            for j in 0..k {
                let idx: [usize; N] = std::array::from_fn(|a| (base[a] + rng.gen_range(0..cluster)).min(res - 1));
                let w = if alternating { if j % 2 == 0 { 1.0 } else { -1.0 } } else { rng.gen_range(-1.0..1.0) };
                mu.push(point(idx), w).expect("signed");
            }
            let mu = mu.prune(self.domain.diameter());
            if !mu.is_empty() {
                consider(&mu)?;
            }
        }
        // Spread-out positive measures.
        for _ in 0..200 {
            let mut mu = DiscreteMeasure::signed();
            for _ in 0..40 {
                let idx: [usize; N] = std::array::from_fn(|_| rng.gen_range(0..res));
                mu.push(point(idx), rng.gen_range(0.0..1.0)).expect("signed");
            }
            let mu = mu.prune(self.domain.diameter());
            if !mu.is_empty() {
                consider(&mu)?;
            }
        }
        Ok(1.05 * best)
    }

    /// `½‖Aμ + shift − b‖²` with residual vector.
    pub fn residual(&self, mu: &DiscreteMeasure<N>, b: &[f64]) -> Vec<f64> {
        let mut r = self.apply_a(mu);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri -= bi;
        }
        r
    }
}

fn single<const N: usize>(x: Loc<N>) -> DiscreteMeasure<N> {
    DiscreteMeasure::from_spikes([(x, 1.0)], Sign::Signed).expect("signed")
}

/// `½‖v‖²`.
pub fn half_sq_norm(v: &[f64]) -> f64 {
    0.5 * v.iter().map(|x| x * x).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::fast_spread_pair;

    fn model1() -> ForwardModel<1> {
        ForwardModel::sensor_grid(Domain::unit(), [100], 0.05)
    }

    #[test]
    fn grid_layout() {
        let g = SensorGrid::<2>::uniform(&Domain::unit(), [16, 16]);
        assert_eq!(g.len(), 256);
        assert!((g.r - 0.025).abs() < 1e-15);
        assert_eq!(g.flatten(g.unflatten(37)), 37);
        assert_eq!(g.centers[1], [0.09375, 0.03125]);
    }

    #[test]
    fn apply_a_examples() {
        let m = model1();
        assert!(m.apply_a(&DiscreteMeasure::nonnegative()).iter().all(|v| *v == 0.0));
        let z = m.centers()[40];
        let mu = DiscreteMeasure::from_spikes([(z, 2.5)], Sign::Nonnegative).unwrap();
        let y = m.apply_a(&mu);
        assert!((y[40] - 2.5 * m.sensor_kernel.eval(&[0.0])).abs() < 1e-15);
        let reach = m.sensor_kernel.support_radius();
        for (i, c) in m.centers().iter().enumerate() {
            if (c[0] - z[0]).abs() >= reach {
                assert_eq!(y[i], 0.0);
            }
        }
    }

    #[test]
    fn constants_1d() {
        let m = model1();
        let c = &m.constants;
        assert_eq!(c.n_psi, 11);
        let bound = c.l_bound.unwrap();
        assert!(c.l > 0.0 && c.l <= 1.05 * bound, "{} vs {}", c.l, bound);
        assert!(c.theta_f_refined <= c.theta_f);
    }

    #[test]
    fn n_psi_bounds_sampled_overlap() {
        let m = ForwardModel::sensor_grid(Domain::unit(), [16, 16], 0.15);
        let r = m.sensor_kernel.support_radius();
        for i in 0..2000 {
            let x = [(i as f64 * 0.6180339).fract(), (i as f64 * 0.4142135).fract()];
            let count = m.centers().iter().filter(|c| (0..2).all(|a| (c[a] - x[a]).abs() < r)).count();
            assert!(count <= m.constants.n_psi);
        }
    }

    #[test]
    fn zero_operator_has_zero_l() {
        let (psi, rho) = fast_spread_pair::<1>(0.05);
        let centers = vec![[0.5]];
        let m = ForwardModel::from_parts(Domain::unit(), centers, psi.scaled(0.0), rho, None);
        assert_eq!(m.estimate_l(64).unwrap(), 0.0);
    }

    #[test]
    fn estimate_l_is_homogeneous_in_rho() {
        let (_, rho) = fast_spread_pair::<1>(0.05);
        let centers = vec![[0.5]];
        let a = ForwardModel::from_parts(Domain::unit(), centers.clone(), rho, rho, None);
        let b = ForwardModel::from_parts(Domain::unit(), centers, rho, rho.scaled(2.0), None);
        let (la, lb) = (a.estimate_l(128).unwrap(), b.estimate_l(128).unwrap());
        assert!((la / lb - 2.0).abs() < 0.04);
    }
}
