//! Discrete Radon measures, atomic transport plans and the unbalanced
//! transport cost.
//!
//! Everything here is a plain value type. Operations build new values rather
//! than mutating shared ones, so measures can be handed to worker threads
//! freely.

use std::fmt;
use std::io;

use crate::kernels::Kernel;
use crate::Loc;

/// Axis-aligned box `[lower, upper]` in ℝᴺ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Domain<const N: usize> {
    pub lower: Loc<N>,
    pub upper: Loc<N>,
}

impl<const N: usize> Domain<N> {
    pub fn new(lower: Loc<N>, upper: Loc<N>) -> Result<Self, MeasureError> {
        if lower.iter().zip(&upper).any(|(l, u)| !(l < u)) {
            return Err(MeasureError::EmptyDomain);
        }
        Ok(Domain { lower, upper })
    }

    /// The unit cube `[0, 1]ᴺ`.
    pub fn unit() -> Self {
        Domain { lower: [0.0; N], upper: [1.0; N] }
    }

    pub fn diameter(&self) -> f64 {
        dist(&self.lower, &self.upper)
    }

    pub fn contains(&self, x: &Loc<N>) -> bool {
        (0..N).all(|i| x[i] >= self.lower[i] && x[i] <= self.upper[i])
    }

    pub fn clamp(&self, x: &Loc<N>) -> Loc<N> {
        std::array::from_fn(|i| x[i].clamp(self.lower[i], self.upper[i]))
    }

    pub fn center(&self) -> Loc<N> {
        std::array::from_fn(|i| 0.5 * (self.lower[i] + self.upper[i]))
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MeasureError {
    #[error("domain has an empty axis")]
    EmptyDomain,
    #[error("location {0:?} lies outside the domain")]
    OutsideDomain(Vec<f64>),
    #[error("negative weight {0} in a nonnegative measure")]
    NegativeWeight(f64),
    #[error("kernel is not positive semi-definite: quadratic form {value} below -{tolerance}")]
    KernelNotPsd { value: f64, tolerance: f64 },
}

/// Whether a measure may carry negative weights.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Signed,
    Nonnegative,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Spike<const N: usize> {
    pub loc: Loc<N>,
    pub weight: f64,
}

/// A finite sum `Σ wⱼ δ_{xⱼ}`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteMeasure<const N: usize> {
    spikes: Vec<Spike<N>>,
    sign: Sign,
}

/// Locations closer than this (relative to the domain diameter) are one point.
pub const DEDUP_TOLERANCE: f64 = 1e-12;

impl<const N: usize> DiscreteMeasure<N> {
    pub fn zero(sign: Sign) -> Self {
        DiscreteMeasure { spikes: Vec::new(), sign }
    }

    pub fn nonnegative() -> Self {
        Self::zero(Sign::Nonnegative)
    }

    pub fn signed() -> Self {
        Self::zero(Sign::Signed)
    }

    /// Builds a measure, checking weights against `sign`. Not pruned.
    pub fn from_spikes(
        spikes: impl IntoIterator<Item = (Loc<N>, f64)>,
        sign: Sign,
    ) -> Result<Self, MeasureError> {
        let mut m = Self::zero(sign);
        for (loc, weight) in spikes {
            m.push(loc, weight)?;
        }
        Ok(m)
    }

    pub fn push(&mut self, loc: Loc<N>, weight: f64) -> Result<(), MeasureError> {
        if self.sign == Sign::Nonnegative && weight < 0.0 {
            return Err(MeasureError::NegativeWeight(weight));
        }
        self.spikes.push(Spike { loc, weight });
        Ok(())
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    pub fn spikes(&self) -> &[Spike<N>] {
        &self.spikes
    }

    pub fn len(&self) -> usize {
        self.spikes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spikes.is_empty()
    }

    pub fn locations(&self) -> impl Iterator<Item = &Loc<N>> + '_ {
        self.spikes.iter().map(|s| &s.loc)
    }

    pub fn weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.spikes.iter().map(|s| s.weight)
    }

    pub fn check_domain(&self, domain: &Domain<N>) -> Result<(), MeasureError> {
        match self.spikes.iter().find(|s| !domain.contains(&s.loc)) {
            Some(s) => Err(MeasureError::OutsideDomain(s.loc.to_vec())),
            None => Ok(()),
        }
    }

    /// Sums weights of coincident locations and drops zero weights. The
    /// first occurrence of a location fixes its position in the output.
    pub fn prune(&self, diameter: f64) -> Self {
        let tol = DEDUP_TOLERANCE * diameter.max(f64::MIN_POSITIVE);
        let mut out: Vec<Spike<N>> = Vec::with_capacity(self.spikes.len());
        for s in &self.spikes {
            match out.iter_mut().find(|o| dist(&o.loc, &s.loc) <= tol) {
                Some(o) => o.weight += s.weight,
                None => out.push(*s),
            }
        }
        out.retain(|s| s.weight != 0.0);
        DiscreteMeasure { spikes: out, sign: self.sign }
    }

    /// `self + scale·other`, unpruned, signed.
    pub fn add_scaled(&self, scale: f64, other: &Self) -> Self {
        let mut spikes = self.spikes.clone();
        spikes.extend(other.spikes.iter().map(|s| Spike { loc: s.loc, weight: scale * s.weight }));
        DiscreteMeasure { spikes, sign: Sign::Signed }
    }

    /// `self − other`, pruned.
    pub fn sub(&self, other: &Self, diameter: f64) -> Self {
        self.add_scaled(-1.0, other).prune(diameter)
    }

    pub fn scaled(&self, scale: f64) -> Self {
        let sign = if scale >= 0.0 { self.sign } else { Sign::Signed };
        DiscreteMeasure {
            spikes: self.spikes.iter().map(|s| Spike { loc: s.loc, weight: scale * s.weight }).collect(),
            sign,
        }
    }

    /// Reinterprets a signed measure as nonnegative, failing on negative weights.
    pub fn into_nonnegative(self) -> Result<Self, MeasureError> {
        if let Some(s) = self.spikes.iter().find(|s| s.weight < 0.0) {
            return Err(MeasureError::NegativeWeight(s.weight));
        }
        Ok(DiscreteMeasure { spikes: self.spikes, sign: Sign::Nonnegative })
    }

    pub fn into_signed(self) -> Self {
        DiscreteMeasure { spikes: self.spikes, sign: Sign::Signed }
    }

    pub fn max_abs_weight(&self) -> f64 {
        self.spikes.iter().fold(0.0, |m, s| m.max(s.weight.abs()))
    }

    /// One CSV row `x1[,x2],weight` per spike.
    pub fn write_csv<W: io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (1..=N).map(|i| format!("x{i}")).collect();
        header.push("weight".into());
        w.write_record(&header)?;
        for s in &self.spikes {
            let mut row: Vec<String> = s.loc.iter().map(|v| format!("{v:e}")).collect();
            row.push(format!("{:e}", s.weight));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: io::Read>(input: R, sign: Sign) -> Result<Self, Box<dyn std::error::Error>> {
        let mut r = csv::Reader::from_reader(input);
        let mut m = Self::zero(sign);
        for rec in r.records() {
            let rec = rec?;
            if rec.len() != N + 1 {
                return Err(format!("expected {} columns, found {}", N + 1, rec.len()).into());
            }
            let loc: Loc<N> = {
                let mut l = [0.0; N];
                for (i, v) in l.iter_mut().enumerate() {
                    *v = rec[i].parse()?;
                }
                l
            };
            m.push(loc, rec[N].parse()?)?;
        }
        Ok(m)
    }
}

impl<const N: usize> fmt::Display for DiscreteMeasure<N> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.spikes.is_empty() {
            return write!(f, "0");
        }
        for (i, s) in self.spikes.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{:.4}δ{:.4?}", s.weight, s.loc)?;
        }
        Ok(())
    }
}

pub fn radon_norm<const N: usize>(mu: &DiscreteMeasure<N>, diameter: f64) -> f64 {
    mu.prune(diameter).spikes.iter().map(|s| s.weight.abs()).sum()
}

/// `Σ|wⱼ|` without pruning. Equals [`radon_norm`] for measures with distinct
/// locations.
pub fn total_mass<const N: usize>(mu: &DiscreteMeasure<N>) -> f64 {
    mu.spikes.iter().map(|s| s.weight.abs()).sum()
}

/// `⟨𝒟μ|ν⟩ = Σᵢⱼ wᵢ vⱼ ρ(xᵢ − yⱼ)`.
pub fn d_inner<const N: usize>(mu: &DiscreteMeasure<N>, nu: &DiscreteMeasure<N>, rho: &Kernel<N>) -> f64 {
    let mut acc = 0.0;
    for a in &mu.spikes {
        for b in &nu.spikes {
            acc += a.weight * b.weight * rho.eval(&sub(&a.loc, &b.loc));
        }
    }
    acc
}

/// `‖μ‖²_𝒟`. Fails when the value is clearly negative, which means `ρ` is not
/// positive semi-definite.
pub fn d_norm_sq<const N: usize>(mu: &DiscreteMeasure<N>, rho: &Kernel<N>) -> Result<f64, MeasureError> {
    let value = d_inner(mu, mu, rho);
    let tolerance = 1e-9 * total_mass(mu).powi(2);
    if value < -tolerance {
        Err(MeasureError::KernelNotPsd { value, tolerance })
    } else {
        Ok(value)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlanAtom<const N: usize> {
    pub source: Loc<N>,
    pub target: Loc<N>,
    pub mass: f64,
}

/// Atomic two-plan `γ = Σ mⱼ δ_{(xⱼ, yⱼ)}`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TransportPlan<const N: usize> {
    pub atoms: Vec<PlanAtom<N>>,
}

impl<const N: usize> TransportPlan<N> {
    pub fn empty() -> Self {
        TransportPlan { atoms: Vec::new() }
    }

    pub fn push(&mut self, source: Loc<N>, target: Loc<N>, mass: f64) {
        self.atoms.push(PlanAtom { source, target, mass });
    }

    /// `π⁰_#γ`, unpruned.
    pub fn source_marginal(&self) -> DiscreteMeasure<N> {
        DiscreteMeasure {
            spikes: self.atoms.iter().map(|a| Spike { loc: a.source, weight: a.mass }).collect(),
            sign: Sign::Signed,
        }
    }

    /// `π¹_#γ`, unpruned.
    pub fn target_marginal(&self) -> DiscreteMeasure<N> {
        DiscreteMeasure {
            spikes: self.atoms.iter().map(|a| Spike { loc: a.target, weight: a.mass }).collect(),
            sign: Sign::Signed,
        }
    }

    /// `‖γ‖_ℳ`.
    pub fn mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass.abs()).sum()
    }

    /// `|γ|(c₂) = Σ |mⱼ| ½|xⱼ − yⱼ|²`.
    pub fn c2_cost(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass.abs() * c2(&a.source, &a.target)).sum()
    }

    /// `γ + diag_#θ`.
    pub fn with_diagonal(&self, theta: &DiscreteMeasure<N>) -> Self {
        let mut out = self.clone();
        for s in theta.spikes() {
            out.push(s.loc, s.loc, s.weight);
        }
        out
    }

    pub fn scale_masses(&mut self, factor: f64) {
        for a in &mut self.atoms {
            a.mass *= factor;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.atoms.iter().all(|a| a.mass == 0.0)
    }
}

/// `(π¹_# − π⁰_#)γ`, pruned.
pub fn plan_marginal_diff<const N: usize>(gamma: &TransportPlan<N>, diameter: f64) -> DiscreteMeasure<N> {
    gamma.target_marginal().add_scaled(-1.0, &gamma.source_marginal()).prune(diameter)
}

/// Marginal discrepancy energy `E(ν₀, ν₁)`.
#[derive(Clone, Debug)]
pub enum MarginalEnergy<const N: usize> {
    /// `½‖ν₁ − ν₀‖²_ℳ`
    RadonSquared,
    /// `½‖ν₁ − ν₀‖²_𝒟`
    DSquared(Kernel<N>),
}

impl<const N: usize> MarginalEnergy<N> {
    pub fn eval(&self, nu0: &DiscreteMeasure<N>, nu1: &DiscreteMeasure<N>, diameter: f64) -> f64 {
        let diff = nu1.sub(nu0, diameter);
        match self {
            MarginalEnergy::RadonSquared => 0.5 * total_mass(&diff).powi(2),
            // Tiny negative round-off is clipped; E is nonnegative by definition.
            MarginalEnergy::DSquared(rho) => 0.5 * d_inner(&diff, &diff, rho).max(0.0),
        }
    }
}

/// Scaled unbalanced transport cost
/// `c_scale·|γ|(c₂) + e_scale·E(μ₀ − π⁰_#γ, μ₁ − π¹_#γ)`.
pub fn v_cost<const N: usize>(
    mu0: &DiscreteMeasure<N>,
    mu1: &DiscreteMeasure<N>,
    gamma: &TransportPlan<N>,
    energy: &MarginalEnergy<N>,
    c_scale: f64,
    e_scale: f64,
    diameter: f64,
) -> f64 {
    let rest0 = mu0.add_scaled(-1.0, &gamma.source_marginal());
    let rest1 = mu1.add_scaled(-1.0, &gamma.target_marginal());
    c_scale * gamma.c2_cost() + e_scale * energy.eval(&rest0, &rest1, diameter)
}

pub fn sub<const N: usize>(a: &Loc<N>, b: &Loc<N>) -> Loc<N> {
    std::array::from_fn(|i| a[i] - b[i])
}

pub fn dot<const N: usize>(a: &Loc<N>, b: &Loc<N>) -> f64 {
    (0..N).map(|i| a[i] * b[i]).sum()
}

pub fn norm<const N: usize>(a: &Loc<N>) -> f64 {
    dot(a, a).sqrt()
}

pub fn dist<const N: usize>(a: &Loc<N>, b: &Loc<N>) -> f64 {
    norm(&sub(a, b))
}

/// `c₂(x, y) = ½|x − y|²`.
pub fn c2<const N: usize>(x: &Loc<N>, y: &Loc<N>) -> f64 {
    0.5 * dot(&sub(x, y), &sub(x, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::fast_spread_pair;

    fn m1(spikes: &[(f64, f64)]) -> DiscreteMeasure<1> {
        DiscreteMeasure::from_spikes(spikes.iter().map(|&(x, w)| ([x], w)), Sign::Signed).unwrap()
    }

    #[test]
    fn radon_norm_examples() {
        assert_eq!(radon_norm(&m1(&[]), 1.0), 0.0);
        assert_eq!(radon_norm(&m1(&[(0.3, 2.0)]), 1.0), 2.0);
        assert_eq!(radon_norm(&m1(&[(0.2, 3.0), (0.7, -1.0)]), 1.0), 4.0);
        // Coincident atoms cancel before the absolute value is taken.
        assert_eq!(radon_norm(&m1(&[(0.2, 3.0), (0.2, -1.0)]), 1.0), 2.0);
    }

    #[test]
    fn prune_merges_and_drops() {
        let m = m1(&[(0.5, 1.0), (0.1, 2.0), (0.5, -1.0), (0.1 + 1e-14, 1.0)]).prune(1.0);
        assert_eq!(m.len(), 1);
        assert_eq!(m.spikes()[0].weight, 3.0);
    }

    #[test]
    fn nonnegative_mode_rejects_negative() {
        let mut m = DiscreteMeasure::<1>::nonnegative();
        assert_eq!(m.push([0.1], -1.0), Err(MeasureError::NegativeWeight(-1.0)));
        assert!(m.push([0.1], 0.0).is_ok());
    }

    #[test]
    fn d_norm_examples() {
        let (_, rho) = fast_spread_pair::<1>(0.05);
        assert_eq!(d_norm_sq(&m1(&[]), &rho).unwrap(), 0.0);
        assert!((d_norm_sq(&m1(&[(0.4, 1.0)]), &rho).unwrap() - rho.eval(&[0.0])).abs() < 1e-15);
        let ab = d_norm_sq(&m1(&[(0.4, 1.0), (0.43, 2.0)]), &rho).unwrap();
        let ba = d_norm_sq(&m1(&[(0.43, 2.0), (0.4, 1.0)]), &rho).unwrap();
        assert!((ab - ba).abs() < 1e-14);
    }

    #[test]
    fn marginal_diff_examples() {
        let mut g = TransportPlan::<1>::empty();
        assert!(plan_marginal_diff(&g, 1.0).is_empty());
        g.push([0.3], [0.3], 2.0);
        assert!(plan_marginal_diff(&g, 1.0).is_empty());
        let mut g = TransportPlan::<1>::empty();
        g.push([0.2], [0.6], 1.0);
        g.push([0.6], [0.2], 1.0);
        assert!(plan_marginal_diff(&g, 1.0).is_empty());
    }

    #[test]
    fn v_cost_examples() {
        let mu = m1(&[(0.2, 1.0), (0.8, 0.5)]);
        let nu = m1(&[(0.25, 1.5)]);
        let e = MarginalEnergy::RadonSquared;
        let empty = TransportPlan::empty();
        assert_eq!(v_cost(&mu, &mu, &empty, &e, 1.0, 1.0, 1.0), 0.0);
        let direct = 3.0 * e.eval(&mu, &nu, 1.0);
        assert_eq!(v_cost(&mu, &nu, &empty, &e, 7.0, 3.0, 1.0), direct);
    }

    #[test]
    fn csv_round_trip() {
        let mu: DiscreteMeasure<2> =
            DiscreteMeasure::from_spikes([([0.1, 0.2], 1.5), ([0.7, 0.3], 0.25)], Sign::Nonnegative).unwrap();
        let mut buf = Vec::new();
        mu.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x1,x2,weight\n"));
        let back = DiscreteMeasure::<2>::read_csv(&buf[..], Sign::Nonnegative).unwrap();
        assert_eq!(back, mu);
    }
}
