//! Separable compactly supported kernels and sums of kernel bumps.
//!
//! A [`Kernel`] is `x ↦ a·Πᵢ p(xᵢ)` for an even one-dimensional [`Profile`]
//! `p`. The profiles provided cover what the solvers need:
//!
//! - [`Profile::CubicBump`], the C¹ piecewise cubic `1 − 3s² + 2|s|³` on `|s| ≤ 1`.
//!   This is the spread `ψ`.
//! - [`Profile::CubicAutoconv`], the autoconvolution of the cubic bump, normalised to unit peak.
//!   Being an autoconvolution, it is positive semi-definite, so it serves as `ρ` with `𝒟μ = ρ∗μ`.
//! - [`Profile::BoxCubic`], a box indicator convolved with the cubic bump.
//!   This is a sensor response `θᵢ∗ψ`.
//! - [`Profile::Triangle`] and [`Profile::Box`], reference shapes for [`check_psd`].
//!
//! Derivatives at the joints of piecewise definitions are one-sided limits.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::Loc;

/// Even one-dimensional factor of a separable kernel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Profile {
    /// `1 − 3s² + 2|s|³` with `s = x/w`, zero for `|s| > 1`.
    CubicBump { w: f64 },
    /// Cubic bump of half-width `w` convolved with itself, scaled to unit peak.
    /// Support `[−2w, 2w]`.
    CubicAutoconv { w: f64 },
    /// Indicator of `[−r, r]` convolved with the unit-peak cubic bump of
    /// half-width `w`.
    BoxCubic { r: f64, w: f64 },
    /// `1 − |x|/w` on `[−w, w]`.
    Triangle { w: f64 },
    /// Indicator of `[−w, w]`.
    Box { w: f64 },
}

/// `(g∗g)(0) = ∫g²` for the unit-width cubic bump `g`.
const AUTOCONV_PEAK: f64 = 26.0 / 35.0;

fn bump(s: f64) -> f64 {
    let a = s.abs();
    if a >= 1.0 {
        0.0
    } else {
        1.0 - a * a * (3.0 - 2.0 * a)
    }
}

fn bump_d(s: f64) -> f64 {
    let a = s.abs();
    if a >= 1.0 {
        0.0
    } else {
        s.signum() * 6.0 * a * (a - 1.0)
    }
}

fn bump_dd(s: f64) -> f64 {
    let a = s.abs();
    if a >= 1.0 {
        0.0
    } else {
        12.0 * a - 6.0
    }
}

/// `∫_{−1}^{s}` of the cubic bump.
fn bump_cumulative(s: f64) -> f64 {
    let a = s.abs().min(1.0);
    0.5 + s.signum() * (a - a * a * a + 0.5 * a * a * a * a)
}

/// `(g∗g)(u)` with derivatives, for `u ≥ 0`.
fn autoconv(u: f64) -> (f64, f64, f64) {
    if u >= 2.0 {
        (0.0, 0.0, 0.0)
    } else if u <= 1.0 {
        let u2 = u * u;
        let v = 26.0 / 35.0
            + u2 * (-6.0 / 5.0 + u2 * (1.0 + u * (-3.0 / 10.0 + u * (-1.0 / 5.0 + u * 3.0 / 35.0))));
        let d = u * (-12.0 / 5.0 + u2 * (4.0 + u * (-3.0 / 2.0 + u * (-6.0 / 5.0 + u * 3.0 / 5.0))));
        let dd = -12.0 / 5.0 + u2 * (12.0 + u * (-6.0 + u * (-6.0 + u * 18.0 / 5.0)));
        (v, d, dd)
    } else {
        let v = 2.0 - u;
        let v4 = v * v * v * v;
        let val = v4 * v * (3.0 / 10.0 + v * (-1.0 / 5.0 + v / 35.0));
        let d = -v4 * (3.0 / 2.0 + v * (-6.0 / 5.0 + v / 5.0));
        let dd = v * v * v * (6.0 + v * (-6.0 + v * 6.0 / 5.0));
        (val, d, dd)
    }
}

impl Profile {
    /// Support half-width.
    pub fn support(&self) -> f64 {
        match *self {
            Profile::CubicBump { w } | Profile::Triangle { w } | Profile::Box { w } => w,
            Profile::CubicAutoconv { w } => 2.0 * w,
            Profile::BoxCubic { r, w } => r + w,
        }
    }

    /// `(p(x), p′(x), p″(x))`.
    pub fn eval3(&self, x: f64) -> (f64, f64, f64) {
        match *self {
            Profile::CubicBump { w } => {
                let s = x / w;
                (bump(s), bump_d(s) / w, bump_dd(s) / (w * w))
            }
            Profile::CubicAutoconv { w } => {
                let (v, d, dd) = autoconv(x.abs() / w);
                let k = 1.0 / AUTOCONV_PEAK;
                (k * v, k * x.signum() * d / w, k * dd / (w * w))
            }
            Profile::BoxCubic { r, w } => {
                let (a, b) = ((x + r) / w, (x - r) / w);
                (
                    w * (bump_cumulative(a) - bump_cumulative(b)),
                    bump(a) - bump(b),
                    (bump_d(a) - bump_d(b)) / w,
                )
            }
            Profile::Triangle { w } => {
                if x.abs() >= w {
                    (0.0, 0.0, 0.0)
                } else {
                    let d = if x >= 0.0 { -1.0 / w } else { 1.0 / w };
                    (1.0 - x.abs() / w, d, 0.0)
                }
            }
            Profile::Box { w } => (if x.abs() <= w { 1.0 } else { 0.0 }, 0.0, 0.0),
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        match *self {
            Profile::CubicBump { w } => bump(x / w),
            _ => self.eval3(x).0,
        }
    }

    fn is_c1(&self) -> bool {
        !matches!(self, Profile::Triangle { .. } | Profile::Box { .. })
    }

    fn is_continuous(&self) -> bool {
        !matches!(self, Profile::Box { .. })
    }

    /// Upper bounds on `sup|p|`, `sup|p′|`, `sup|p″|`. Dense sampling of the
    /// exact derivatives, with a 1% margin.
    fn sup_bounds(&self) -> [f64; 3] {
        const SAMPLES: usize = 20_000;
        let s = self.support();
        let mut sup = [0.0f64; 3];
        for k in 0..=SAMPLES {
            let x = s * k as f64 / SAMPLES as f64;
            let (v, d, dd) = self.eval3(x);
            sup[0] = sup[0].max(v.abs());
            sup[1] = sup[1].max(d.abs());
            sup[2] = sup[2].max(dd.abs());
        }
        let mut out = sup.map(|v| 1.01 * v);
        if !self.is_continuous() {
            out[1] = f64::INFINITY;
        }
        if !self.is_c1() {
            out[2] = f64::INFINITY;
        }
        out
    }
}

/// `x ↦ amplitude·Πᵢ p(xᵢ)` with precomputed Lipschitz metadata.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Kernel<const N: usize> {
    profile: Profile,
    amplitude: f64,
    lip_value: f64,
    lip_grad: f64,
}

impl<const N: usize> Kernel<N> {
    pub fn new(profile: Profile, amplitude: f64) -> Self {
        let [p0, p1, p2] = profile.sup_bounds();
        let n = N as f64;
        let a = amplitude.abs();
        let pow = |v: f64, e: usize| if e == 0 { 1.0 } else { v.powi(e as i32) };
        let lip_value = a * n.sqrt() * p1 * pow(p0, N - 1);
        let diag = p2 * pow(p0, N - 1);
        let off = if N > 1 { p1 * p1 * pow(p0, N - 2) } else { 0.0 };
        let lip_grad = a * (n * diag * diag + n * (n - 1.0) * off * off).sqrt();
        Kernel { profile, amplitude, lip_value, lip_grad }
    }

    pub fn profile(&self) -> Profile {
        self.profile
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Kernel {
            amplitude: self.amplitude * factor,
            lip_value: self.lip_value * factor.abs(),
            lip_grad: self.lip_grad * factor.abs(),
            ..*self
        }
    }

    /// Half-width of the support box, the same on every axis.
    pub fn support_radius(&self) -> f64 {
        self.profile.support()
    }

    pub fn is_symmetric(&self) -> bool {
        true
    }

    /// Declared Lipschitz constant of the kernel value.
    pub fn lipschitz_value(&self) -> f64 {
        self.lip_value
    }

    /// Declared Lipschitz constant of the gradient.
    pub fn lipschitz_grad(&self) -> f64 {
        self.lip_grad
    }

    pub fn eval(&self, x: &Loc<N>) -> f64 {
        let mut v = self.amplitude;
        for &xi in x {
            if v == 0.0 {
                break;
            }
            v *= self.profile.value(xi);
        }
        v
    }

    pub fn grad(&self, x: &Loc<N>) -> Loc<N> {
        self.value_and_grad(x).1
    }

    pub fn value_and_grad(&self, x: &Loc<N>) -> (f64, Loc<N>) {
        let s = self.profile.support();
        if x.iter().any(|xi| xi.abs() >= s) {
            return (0.0, [0.0; N]);
        }
        let mut p = [0.0; N];
        let mut dp = [0.0; N];
        for i in 0..N {
            let (v, d, _) = self.profile.eval3(x[i]);
            p[i] = v;
            dp[i] = d;
        }
        let value = self.amplitude * p.iter().product::<f64>();
        let grad = std::array::from_fn(|i| {
            let mut g = self.amplitude * dp[i];
            for (j, pj) in p.iter().enumerate() {
                if j != i {
                    g *= pj;
                }
            }
            g
        });
        (value, grad)
    }

    /// Hessian as a row-major `N×N` array.
    pub fn hessian(&self, x: &Loc<N>) -> [[f64; N]; N] {
        let mut h = [[0.0; N]; N];
        let d: Vec<(f64, f64, f64)> = x.iter().map(|&xi| self.profile.eval3(xi)).collect();
        for i in 0..N {
            for j in 0..N {
                let mut v = self.amplitude;
                for (k, &(p, dp, ddp)) in d.iter().enumerate() {
                    v *= match (k == i, k == j) {
                        (true, true) => ddp,
                        (true, false) | (false, true) => dp,
                        (false, false) => p,
                    };
                }
                h[i][j] = v;
            }
        }
        h
    }

    /// `∫ kernel` over ℝᴺ, exact for the profiles with a closed form.
    pub fn integral(&self) -> f64 {
        let one_d = match self.profile {
            Profile::CubicBump { w } => w,
            Profile::CubicAutoconv { w } => w / AUTOCONV_PEAK,
            Profile::BoxCubic { r, w } => 2.0 * r * w,
            Profile::Triangle { w } => w,
            Profile::Box { w } => 2.0 * w,
        };
        self.amplitude * one_d.powi(N as i32)
    }
}

/// The spread `ψ` and its paired proximal kernel `ρ` for half-width `w`.
///
/// `ψ` is the cubic bump scaled to unit integral. `ρ` is the autoconvolution
/// of the same bump normalised to unit peak, hence positive semi-definite.
pub fn fast_spread_pair<const N: usize>(w: f64) -> (Kernel<N>, Kernel<N>) {
    (fast_spread(w).scaled(w.powi(-(N as i32))), Kernel::new(Profile::CubicAutoconv { w }, 1.0))
}

/// Unit-peak C¹ cubic bump supported on `[−w, w]ᴺ`.
pub fn fast_spread<const N: usize>(w: f64) -> Kernel<N> {
    assert!(w > 0.0, "spread width must be positive");
    Kernel::new(Profile::CubicBump { w }, 1.0)
}

/// `[Σ wⱼ ρ(· − xⱼ)](x)`.
pub fn apply_d<const N: usize>(mu: &crate::measures::DiscreteMeasure<N>, rho: &Kernel<N>, x: &Loc<N>) -> f64 {
    mu.spikes().iter().map(|s| s.weight * rho.eval(&crate::measures::sub(x, &s.loc))).sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct PsdReport {
    pub min_real: f64,
    pub max_real: f64,
    pub threshold: f64,
}

impl PsdReport {
    pub fn passes(&self) -> bool {
        self.min_real >= self.threshold
    }
}

#[derive(Debug, thiserror::Error)]
pub enum KernelError {
    #[error("grid size {0} below the minimum of 16")]
    GridTooSmall(usize),
    #[error("kernel is not positive semi-definite: min spectrum {} < {}", .0.min_real, .0.threshold)]
    PsdViolation(PsdReport),
}

/// Samples `ρ` on a periodic grid twice its support and checks the sign of
/// the discrete Fourier transform.
pub fn check_psd<const N: usize>(rho: &Kernel<N>, grid_size: usize) -> Result<PsdReport, KernelError> {
    if grid_size < 16 {
        return Err(KernelError::GridTooSmall(grid_size));
    }
    let n = grid_size;
    let period = 4.0 * rho.support_radius();
    let h = period / n as f64;
    // Index k ↦ coordinate, wrapped so the sample set is symmetric about 0.
    let coord = |k: usize| {
        let k = k as f64;
        if k < n as f64 / 2.0 {
            k * h
        } else {
            (k - n as f64) * h
        }
    };
    let total = n.pow(N as u32);
    let mut data: Vec<Complex<f64>> = (0..total)
        .map(|flat| {
            let mut x = [0.0; N];
            let mut rem = flat;
            for xi in x.iter_mut() {
                *xi = coord(rem % n);
                rem /= n;
            }
            Complex::new(rho.eval(&x), 0.0)
        })
        .collect();
    let fft = FftPlanner::new().plan_fft_forward(n);
    let mut line = vec![Complex::new(0.0, 0.0); n];
    for axis in 0..N {
        let stride = n.pow(axis as u32);
        for start in 0..total {
            if (start / stride) % n != 0 {
                continue;
            }
            for (k, l) in line.iter_mut().enumerate() {
                *l = data[start + k * stride];
            }
            fft.process(&mut line);
            for (k, l) in line.iter().enumerate() {
                data[start + k * stride] = *l;
            }
        }
    }
    let min_real = data.iter().map(|c| c.re).fold(f64::INFINITY, f64::min);
    let max_real = data.iter().map(|c| c.re).fold(f64::NEG_INFINITY, f64::max);
    let report = PsdReport { min_real, max_real, threshold: -1e-6 * max_real.abs() };
    if report.passes() {
        Ok(report)
    } else {
        Err(KernelError::PsdViolation(report))
    }
}

/// Kernel bumps sharing one kernel, sorted by first coordinate.
#[derive(Clone, Debug)]
struct BumpGroup<const N: usize> {
    kernel: Kernel<N>,
    centers: Vec<Loc<N>>,
    weights: Vec<f64>,
}

impl<const N: usize> BumpGroup<N> {
    /// Index range of bumps whose first-axis support meets `[lo, hi]`.
    fn candidates(&self, lo: f64, hi: f64) -> std::ops::Range<usize> {
        let r = self.kernel.support_radius();
        let start = self.centers.partition_point(|c| c[0] < lo - r);
        let end = self.centers.partition_point(|c| c[0] <= hi + r);
        start..end.max(start)
    }
}

/// `x ↦ Σ wⱼ kⱼ(x − cⱼ) + offset`.
#[derive(Clone, Debug, Default)]
pub struct CertificateFunction<const N: usize> {
    groups: Vec<BumpGroup<N>>,
    pub offset: f64,
}

impl<const N: usize> CertificateFunction<N> {
    pub fn constant(offset: f64) -> Self {
        CertificateFunction { groups: Vec::new(), offset }
    }

    /// Adds bumps `weight·kernel(· − center)`. Zero weights are skipped.
    pub fn add_bumps(&mut self, kernel: Kernel<N>, bumps: impl IntoIterator<Item = (Loc<N>, f64)>) {
        let mut pairs: Vec<(Loc<N>, f64)> = bumps.into_iter().filter(|(_, w)| *w != 0.0).collect();
        if pairs.is_empty() {
            return;
        }
        pairs.sort_by(|a, b| a.0[0].total_cmp(&b.0[0]));
        let (centers, weights) = pairs.into_iter().unzip();
        self.groups.push(BumpGroup { kernel, centers, weights });
    }

    pub fn with_bumps(mut self, kernel: Kernel<N>, bumps: impl IntoIterator<Item = (Loc<N>, f64)>) -> Self {
        self.add_bumps(kernel, bumps);
        self
    }

    /// Multiplies every weight and the offset by `factor`.
    pub fn scaled(mut self, factor: f64) -> Self {
        for g in &mut self.groups {
            for w in &mut g.weights {
                *w *= factor;
            }
        }
        self.offset *= factor;
        self
    }

    pub fn bump_count(&self) -> usize {
        self.groups.iter().map(|g| g.weights.len()).sum()
    }

    pub fn eval(&self, x: &Loc<N>) -> f64 {
        let mut acc = self.offset;
        for g in &self.groups {
            for j in g.candidates(x[0], x[0]) {
                acc += g.weights[j] * g.kernel.eval(&crate::measures::sub(x, &g.centers[j]));
            }
        }
        acc
    }

    pub fn grad(&self, x: &Loc<N>) -> Loc<N> {
        self.value_and_grad(x).1
    }

    pub fn value_and_grad(&self, x: &Loc<N>) -> (f64, Loc<N>) {
        let mut acc = self.offset;
        let mut grad = [0.0; N];
        for g in &self.groups {
            for j in g.candidates(x[0], x[0]) {
                let (v, d) = g.kernel.value_and_grad(&crate::measures::sub(x, &g.centers[j]));
                acc += g.weights[j] * v;
                for i in 0..N {
                    grad[i] += g.weights[j] * d[i];
                }
            }
        }
        (acc, grad)
    }

    pub fn hessian(&self, x: &Loc<N>) -> [[f64; N]; N] {
        let mut h = [[0.0; N]; N];
        for g in &self.groups {
            for j in g.candidates(x[0], x[0]) {
                let hk = g.kernel.hessian(&crate::measures::sub(x, &g.centers[j]));
                for a in 0..N {
                    for b in 0..N {
                        h[a][b] += g.weights[j] * hk[a][b];
                    }
                }
            }
        }
        h
    }

    /// Lipschitz constants of the value and of the gradient on the box
    /// `center ± half`, from the bumps whose support meets the box.
    pub fn box_lipschitz(&self, center: &Loc<N>, half: &Loc<N>) -> (f64, f64) {
        let (mut l1, mut l2) = (0.0, 0.0);
        for g in &self.groups {
            let r = g.kernel.support_radius();
            for j in g.candidates(center[0] - half[0], center[0] + half[0]) {
                let c = &g.centers[j];
                if (1..N).all(|i| (c[i] - center[i]).abs() < half[i] + r) {
                    l1 += g.weights[j].abs() * g.kernel.lipschitz_value();
                    l2 += g.weights[j].abs() * g.kernel.lipschitz_grad();
                }
            }
        }
        (l1, l2)
    }

    /// Global Lipschitz constants, summed over all bumps.
    pub fn global_lipschitz(&self) -> (f64, f64) {
        let mut l1 = 0.0;
        let mut l2 = 0.0;
        for g in &self.groups {
            for w in &g.weights {
                l1 += w.abs() * g.kernel.lipschitz_value();
                l2 += w.abs() * g.kernel.lipschitz_grad();
            }
        }
        (l1, l2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profiles() -> Vec<Profile> {
        vec![
            Profile::CubicBump { w: 0.05 },
            Profile::CubicAutoconv { w: 0.05 },
            Profile::BoxCubic { r: 0.004, w: 0.05 },
            Profile::BoxCubic { r: 0.025, w: 0.15 },
        ]
    }

    #[test]
    fn fast_spread_shape() {
        let k = fast_spread::<1>(0.1);
        let peak = k.eval(&[0.0]);
        for i in -1000..=1000 {
            assert!(k.eval(&[i as f64 * 1e-4]) <= peak);
        }
        assert_eq!(k.eval(&[0.1]), 0.0);
        assert_eq!(k.grad(&[0.1]), [0.0]);
        assert!(k.grad(&[0.1 - 1e-9])[0].abs() < 1e-6);
    }

    #[test]
    fn fast_spread_integral_refines() {
        // Midpoint rule with Richardson extrapolation.
        let k = fast_spread::<1>(0.1);
        let quad = |n: usize| {
            let h = 0.2 / n as f64;
            (0..n).map(|i| k.eval(&[-0.1 + (i as f64 + 0.5) * h]) * h).sum::<f64>()
        };
        let (a, b) = (quad(1000), quad(2000));
        let rich = (4.0 * b - a) / 3.0;
        assert!(rich > 0.0 && rich.is_finite());
        assert!((rich - b).abs() < 1e-4);
        assert!((rich - k.integral()).abs() < 1e-9);
    }

    #[test]
    fn autoconvolution_matches_quadrature() {
        let w = 0.05;
        let rho = Kernel::<1>::new(Profile::CubicAutoconv { w }, 1.0);
        let g = Profile::CubicBump { w };
        // Simpson on the overlap; the integrand is piecewise polynomial.
        for &x in &[0.0, 0.013, 0.05, 0.071, 0.099] {
            let n = 20_000;
            let h = 2.0 * w / n as f64;
            let f = |t: f64| g.value(t) * g.value(x - t);
            let mut s = f(-w) + f(w);
            for i in 1..n {
                s += f(-w + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            let exact = s * h / 3.0 / (AUTOCONV_PEAK * w);
            assert!((rho.eval(&[x]) - exact).abs() < 1e-9, "x={x}");
        }
    }

    #[test]
    fn box_cubic_matches_quadrature() {
        let p = Profile::BoxCubic { r: 0.004, w: 0.05 };
        let g = Profile::CubicBump { w: 0.05 };
        for &x in &[0.0, 0.002, 0.03, 0.0535] {
            let n = 4000;
            let h = 0.008 / n as f64;
            let q: f64 = (0..n).map(|i| g.value(x - (-0.004 + (i as f64 + 0.5) * h)) * h).sum();
            assert!((p.value(x) - q).abs() < 1e-9);
        }
        assert!((p.support() - 0.054).abs() < 1e-15);
        assert_eq!(p.value(p.support()), 0.0);
    }

    #[test]
    fn gradients_match_finite_differences() {
        for p in profiles() {
            let k2 = Kernel::<2>::new(p, 1.7);
            let s = p.support();
            let h = 1e-6;
            for i in 0..50 {
                let x = [s * ((i as f64 * 0.37).sin() * 0.93), s * ((i as f64 * 0.71).cos() * 0.87)];
                let g = k2.grad(&x);
                for a in 0..2 {
                    let mut xp = x;
                    let mut xm = x;
                    xp[a] += h;
                    xm[a] -= h;
                    let fd = (k2.eval(&xp) - k2.eval(&xm)) / (2.0 * h);
                    let scale = k2.lipschitz_value().max(1e-12);
                    assert!((fd - g[a]).abs() <= 1e-5 * scale, "{p:?} {x:?}");
                }
            }
        }
    }

    #[test]
    fn lipschitz_metadata_bounds_quotients() {
        for p in profiles() {
            let k = Kernel::<2>::new(p, 2.0);
            let s = p.support();
            let mut worst_v: f64 = 0.0;
            let mut worst_g: f64 = 0.0;
            for i in 0..4000 {
                let t = i as f64;
                let x = [s * (t * 0.123).sin() * 1.1, s * (t * 0.377).cos() * 1.1];
                let y = [x[0] + 1e-3 * s * (t * 1.7).sin(), x[1] + 1e-3 * s * (t * 2.3).cos()];
                let d = crate::measures::dist(&x, &y);
                let gv = crate::measures::dist(&k.grad(&x), &k.grad(&y));
                worst_v = worst_v.max((k.eval(&x) - k.eval(&y)).abs() / d);
                worst_g = worst_g.max(gv / d);
            }
            assert!(worst_v <= 1.01 * k.lipschitz_value());
            assert!(worst_g <= 1.01 * k.lipschitz_grad());
        }
    }

    #[test]
    fn psd_checks() {
        assert!(check_psd(&Kernel::<1>::new(Profile::Triangle { w: 0.1 }, 1.0), 256).is_ok());
        assert!(matches!(
            check_psd(&Kernel::<1>::new(Profile::Box { w: 0.1 }, 1.0), 256),
            Err(KernelError::PsdViolation(_))
        ));
        let (_, rho1) = fast_spread_pair::<1>(0.05);
        assert!(check_psd(&rho1, 512).is_ok());
        let (_, rho2) = fast_spread_pair::<2>(0.15);
        assert!(check_psd(&rho2, 64).is_ok());
        assert!(matches!(check_psd(&rho1, 8), Err(KernelError::GridTooSmall(8))));
    }

    #[test]
    fn certificate_basics() {
        let c = CertificateFunction::<1>::constant(0.7);
        assert_eq!(c.eval(&[0.3]), 0.7);
        let k = fast_spread::<1>(0.1);
        let c = CertificateFunction::constant(0.2).with_bumps(k, [([0.4], 1.0)]);
        assert!((c.eval(&[0.45]) - (k.eval(&[0.05]) + 0.2)).abs() < 1e-14);
    }
}
