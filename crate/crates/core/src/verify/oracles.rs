//! Slow reference solvers used to cross-check the production routines.

use nalgebra::{DMatrix, DVector};

use crate::kernels::CertificateFunction;
use crate::Loc;

/// Projected gradient for `min ½⟨β, Dβ⟩ + ⟨η, β⟩ + reg·Σβ` over `β ≥ 0`
/// with step `1/λ_max(D)`.
pub fn projected_gradient(d: &DMatrix<f64>, eta: &DVector<f64>, reg: f64, iterations: usize) -> Vec<f64> {
    let lmax = d.clone().symmetric_eigenvalues().max().max(f64::MIN_POSITIVE);
    let step = 1.0 / lmax;
    let q = eta.add_scalar(reg);
    let mut b = DVector::zeros(eta.len());
    for _ in 0..iterations {
        let g = d * &b + &q;
        for i in 0..b.len() {
            b[i] = (b[i] - step * g[i]).max(0.0);
        }
    }
    b.as_slice().to_vec()
}

/// Convex minimisation over `[0, hi]ⁿ` by repeated grid search, shrinking the
/// box around the best grid point.
pub fn nested_grid(f: impl Fn(&[f64]) -> f64, n: usize, hi: f64, levels: usize) -> (Vec<f64>, f64) {
    const PER_AXIS: usize = 9;
    let mut lo = vec![0.0; n];
    let mut up = vec![hi; n];
    let mut best = vec![0.0; n];
    let mut best_f = f(&best);
    let mut x = vec![0.0; n];
    for _ in 0..levels {
        let total = PER_AXIS.pow(n as u32);
        for idx in 0..total {
            let mut r = idx;
            for i in 0..n {
                let t = (r % PER_AXIS) as f64 / (PER_AXIS - 1) as f64;
                r /= PER_AXIS;
                x[i] = lo[i] + t * (up[i] - lo[i]);
            }
            let v = f(&x);
            if v < best_f {
                best_f = v;
                best.copy_from_slice(&x);
            }
        }
        for i in 0..n {
            let cell = (up[i] - lo[i]) / (PER_AXIS - 1) as f64;
            lo[i] = (best[i] - 2.0 * cell).max(0.0);
            up[i] = best[i] + 2.0 * cell;
        }
    }
    (best, best_f)
}

/// Minimum of a 1D certificate over `points` equispaced samples of `[0, 1]`.
pub fn grid_min_1d(f: &CertificateFunction<1>, points: usize) -> (Loc<1>, f64) {
    (0..points)
        .map(|i| {
            let x = [i as f64 / (points - 1) as f64];
            (x, f.eval(&x))
        })
        .fold(([0.0], f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a })
}

/// Exact 1D total-variation denoising,
/// `argmin_x ½‖x − y‖² + λ Σ|x_{i+1} − x_i|`, by the taut-string style
/// direct algorithm of Condat.
pub fn tv_denoise_1d(y: &[f64], lambda: f64) -> Vec<f64> {
    let n = y.len();
    let mut x = vec![0.0; n];
    if n == 0 {
        return x;
    }
    if lambda <= 0.0 {
        return y.to_vec();
    }
    let (mut k, mut k0, mut kplus, mut kminus) = (0usize, 0usize, 0usize, 0usize);
    let mut vmin = y[0] - lambda;
    let mut vmax = y[0] + lambda;
    let mut umin = lambda;
    let mut umax = -lambda;
    loop {
        while k == n - 1 {
            if umin < 0.0 {
                loop {
                    x[k0] = vmin;
                    k0 += 1;
                    if k0 > kminus {
                        break;
                    }
                }
                k = k0;
                kminus = k0;
                vmin = y[k];
                umin = lambda;
                umax = vmin + umin - vmax;
            } else if umax > 0.0 {
                loop {
                    x[k0] = vmax;
                    k0 += 1;
                    if k0 > kplus {
                        break;
                    }
                }
                k = k0;
                kplus = k0;
                vmax = y[k];
                umax = -lambda;
                umin = vmax + umax - vmin;
            } else {
                vmin += umin / (k - k0 + 1) as f64;
                while k0 <= k {
                    x[k0] = vmin;
                    k0 += 1;
                }
                return x;
            }
        }
        umin += y[k + 1] - vmin;
        if umin < -lambda {
            loop {
                x[k0] = vmin;
                k0 += 1;
                if k0 > kminus {
                    break;
                }
            }
            k = k0;
            kminus = k0;
            kplus = k0;
            vmin = y[k];
            vmax = vmin + 2.0 * lambda;
            umin = lambda;
            umax = -lambda;
        } else {
            umax += y[k + 1] - vmax;
            if umax > lambda {
                loop {
                    x[k0] = vmax;
                    k0 += 1;
                    if k0 > kplus {
                        break;
                    }
                }
                k = k0;
                kminus = k0;
                kplus = k0;
                vmax = y[k];
                vmin = vmax - 2.0 * lambda;
                umin = lambda;
                umax = -lambda;
            } else {
                k += 1;
                if umin >= lambda {
                    kminus = k;
                    vmin += (umin - lambda) / (k - k0 + 1) as f64;
                    umin = lambda;
                }
                if umax <= -lambda {
                    kplus = k;
                    vmax += (umax + lambda) / (k - k0 + 1) as f64;
                    umax = -lambda;
                }
            }
        }
    }
}

/// Largest violation of the optimality conditions of 1D TV denoising at `x`:
/// the dual `p_i = Σ_{j≤i}(y_j − x_j)` must satisfy `|p_i| ≤ λ`,
/// `p_i = −λ·sign(x_{i+1} − x_i)` on jumps and `p_{n−1} = 0`.
pub fn tv_optimality_gap(y: &[f64], x: &[f64], lambda: f64) -> f64 {
    let n = y.len();
    let mut p = 0.0;
    let mut gap: f64 = 0.0;
    for i in 0..n {
        p += y[i] - x[i];
        if i + 1 < n {
            let jump = x[i + 1] - x[i];
            gap = gap.max(p.abs() - lambda);
            if jump.abs() > 1e-12 {
                gap = gap.max((p + lambda * jump.signum()).abs());
            }
        } else {
            gap = gap.max(p.abs());
        }
    }
    gap
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn tv_denoise_is_optimal() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [1, 2, 3, 10, 100] {
            for _ in 0..20 {
                let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let lambda = rng.gen_range(0.01..0.5);
                let x = tv_denoise_1d(&y, lambda);
                assert!(tv_optimality_gap(&y, &x, lambda) < 1e-9, "n {n}");
            }
        }
    }

    #[test]
    fn tv_denoise_large_lambda_gives_mean() {
        let y = [1.0, 2.0, 6.0];
        let x = tv_denoise_1d(&y, 100.0);
        for v in x {
            assert!((v - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn nested_grid_finds_quadratic_minimum() {
        let (x, f) = nested_grid(|x| (x[0] - 0.3).powi(2) + (x[1] - 1.7).powi(2), 2, 4.0, 40);
        assert!((x[0] - 0.3).abs() < 1e-8 && (x[1] - 1.7).abs() < 1e-8 && f < 1e-15);
    }

    #[test]
    fn projected_gradient_on_diagonal() {
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0]));
        let b = projected_gradient(&d, &DVector::from_vec(vec![-1.0, 1.0]), 0.5, 1000);
        assert!((b[0] - 0.5).abs() < 1e-12 && b[1] == 0.0);
    }
}
