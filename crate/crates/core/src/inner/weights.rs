//! `min ½⟨β, Dβ⟩ + ⟨η, β⟩ + reg·‖β‖₁` over `β ≥ 0`.
//!
//! How it works:
//! - Primal active-set Newton iteration: on the current free set take Newton
//!   steps from the current point (Cholesky, with truncated SVD for
//!   near-duplicate atoms), cut back at the boundary when a free weight would
//!   turn negative, and free the coordinate with the most negative gradient
//!   once the face is optimal. A repeated free set ends the iteration.
//! - Directions dropped by the truncated SVD are nearly flat; along them the
//!   face gradient is followed to the line minimum or the boundary.
//! - If the final residual misses the target, continue with projected
//!   forward-backward steps of length `1/λ_max(D)` from the Newton iterate.

use nalgebra::{DMatrix, DVector};

#[derive(Clone, Debug)]
pub struct WeightProblemD {
    pub d: DMatrix<f64>,
    pub eta: DVector<f64>,
    /// Weight of the `ℓ¹` term, `τα`.
    pub reg: f64,
    /// Target accuracy `κε`; the residual must reach `κε/(1 + ‖β‖₁)`.
    pub accuracy: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeightSolution {
    pub beta: Vec<f64>,
    /// `inf_{g ∈ ∂f(β)} ‖g‖_∞`.
    pub residual: f64,
    pub iterations: usize,
    /// The active-set iteration missed the target and forward-backward took over.
    pub fallback: bool,
    /// The residual reached `accuracy/(1 + ‖β‖₁)`.
    pub converged: bool,
}

const MAX_NEWTON: usize = 200;
/// Relative singular-value cutoff of the reduced Newton systems.
const SINGULAR_CUTOFF: f64 = 1e-15;
const MAX_FB: usize = 500_000;

impl WeightProblemD {
    pub fn dim(&self) -> usize {
        self.eta.len()
    }

    pub fn objective(&self, beta: &[f64]) -> f64 {
        let b = DVector::from_column_slice(beta);
        0.5 * b.dot(&(&self.d * &b)) + self.eta.dot(&b) + self.reg * b.sum()
    }

    /// Minimal max-norm subgradient, coordinatewise.
    pub fn residual(&self, beta: &[f64]) -> f64 {
        let b = DVector::from_column_slice(beta);
        let g = &self.d * &b + &self.eta;
        residual_from_gradient(beta, g.as_slice(), self.reg)
    }

    pub fn target(&self, beta: &[f64]) -> f64 {
        self.accuracy / (1.0 + beta.iter().map(|b| b.abs()).sum::<f64>())
    }
}

/// Residual for `g + reg + N_{≥0}` given the smooth gradient `g`.
pub(crate) fn residual_from_gradient(beta: &[f64], grad: &[f64], reg: f64) -> f64 {
    beta.iter()
        .zip(grad)
        .map(|(&b, &g)| if b > 0.0 { (g + reg).abs() } else { (-(g + reg)).max(0.0) })
        .fold(0.0, f64::max)
}

/// Solves a [`WeightProblemD`] starting from `warm` (clamped to `β ≥ 0`).
pub fn solve_weights_d(p: &WeightProblemD, warm: Option<&[f64]>) -> WeightSolution {
    let n = p.dim();
    if n == 0 {
        return WeightSolution { beta: vec![], residual: 0.0, iterations: 0, fallback: false, converged: true };
    }
    let mut beta: Vec<f64> = match warm {
        Some(w) => w.iter().map(|v| v.max(0.0)).collect(),
        None => vec![0.0; n],
    };
    let q = p.eta.add_scalar(p.reg);
    let mut residual = p.residual(&beta);
    if warm.is_some() && residual <= p.target(&beta) {
        return WeightSolution { beta, residual, iterations: 0, fallback: false, converged: true };
    }
    let (b, _, mut iterations) = active_set(p, beta, &q);
    beta = b;
    residual = p.residual(&beta);
    let mut fallback = false;
    if residual > p.target(&beta) {
        fallback = true;
        let (b, r, its) = forward_backward(p, beta, &q);
        beta = b;
        residual = r;
        iterations += its;
    }
    let converged = residual <= p.target(&beta);
    WeightSolution { beta, residual, iterations, fallback, converged }
}

/// Newton direction `−D_FF⁺ g_F` on the coordinates in `free`, zero elsewhere.
/// Also reports whether the reduced system was singular.
fn newton_direction(p: &WeightProblemD, g: &DVector<f64>, free: &[usize]) -> (Vec<f64>, bool) {
    let m = free.len();
    let dff = DMatrix::from_fn(m, m, |a, b| p.d[(free[a], free[b])]);
    let rhs = DVector::from_iterator(m, free.iter().map(|&i| -g[i]));
    let (sol, singular) = match dff.clone().cholesky() {
        Some(ch) => (ch.solve(&rhs), false),
        None => {
            let svd = dff.svd(true, true);
            let cut = SINGULAR_CUTOFF * svd.singular_values.max().max(f64::MIN_POSITIVE);
            (svd.solve(&rhs, cut).expect("both SVD factors computed"), true)
        }
    };
    let mut d = vec![0.0; p.dim()];
    for (k, &i) in free.iter().enumerate() {
        d[i] = sol[k];
    }
    (d, singular)
}

/// Moves `beta` by `t·dir` with `t ≤ t_max` chosen so that no free weight
/// turns negative. A weight that reaches zero leaves `free`.
fn bounded_step(beta: &mut [f64], dir: &[f64], t_max: f64, free: &mut Vec<usize>) {
    let (block, t_bound) = free
        .iter()
        .filter(|&&i| dir[i] < 0.0)
        .map(|&i| (Some(i), -beta[i] / dir[i]))
        .fold((None, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    let t = t_max.min(t_bound);
    for (b, d) in beta.iter_mut().zip(dir) {
        *b = (*b + t * d).max(0.0);
    }
    if t_bound <= t_max {
        if let Some(i) = block {
            beta[i] = 0.0;
        }
    }
    free.retain(|&i| beta[i] > 0.0);
    for (i, b) in beta.iter_mut().enumerate() {
        if !free.contains(&i) {
            *b = 0.0;
        }
    }
}

fn gradient(p: &WeightProblemD, beta: &[f64], q: &DVector<f64>) -> DVector<f64> {
    &p.d * DVector::from_column_slice(beta) + q
}

fn active_set(p: &WeightProblemD, mut beta: Vec<f64>, q: &DVector<f64>) -> (Vec<f64>, bool, usize) {
    let n = p.dim();
    let mut free: Vec<usize> = (0..n).filter(|&i| beta[i] > 0.0).collect();
    let mut singular = false;
    let mut iterations = 0;
    let mut seen = std::collections::HashSet::new();
    while iterations < MAX_NEWTON {
        // Minimise over the current face from the current point.
        let mut stalled = 0;
        let mut best_face = f64::INFINITY;
        while !free.is_empty() && iterations < MAX_NEWTON {
            let g = gradient(p, &beta, q);
            let face = free.iter().map(|&i| g[i].abs()).fold(0.0, f64::max);
            if face <= 0.5 * p.target(&beta) {
                break;
            }
            if face < best_face {
                best_face = face;
                stalled = 0;
            } else {
                stalled += 1;
                if stalled > 3 {
                    break;
                }
            }
            iterations += 1;
            let (dir, sing) = newton_direction(p, &g, &free);
            singular |= sing;
            let before = free.len();
            bounded_step(&mut beta, &dir, 1.0, &mut free);
            if !sing || free.len() < before {
                continue;
            }
            // Nearly flat directions are left out of the solve; follow the
            // face gradient along them to the line minimum or a bound.
            let g = gradient(p, &beta, q);
            let dir: Vec<f64> = (0..n).map(|i| if free.contains(&i) { -g[i] } else { 0.0 }).collect();
            let dd = DVector::from_column_slice(&dir);
            let curv = dd.dot(&(&p.d * &dd));
            let t = if curv > 0.0 { dd.dot(&dd) / curv } else { f64::INFINITY };
            bounded_step(&mut beta, &dir, t, &mut free);
        }
        if p.residual(&beta) <= p.target(&beta) {
            break;
        }
        // In floating point the face sequence may cycle.
        if !seen.insert(free.clone()) {
            break;
        }
        let g = gradient(p, &beta, q);
        match (0..n).filter(|i| !free.contains(i)).min_by(|&a, &b| g[a].total_cmp(&g[b])) {
            Some(j) if g[j] < 0.0 => {
                free.push(j);
                free.sort_unstable();
            }
            _ => break,
        }
    }
    (beta, singular, iterations)
}

fn forward_backward(p: &WeightProblemD, mut beta: Vec<f64>, q: &DVector<f64>) -> (Vec<f64>, f64, usize) {
    let lmax = p.d.clone().symmetric_eigenvalues().max().max(f64::MIN_POSITIVE);
    let step = 1.0 / lmax;
    let n = beta.len();
    let mut b = DVector::from_vec(beta.clone());
    for it in 1..=MAX_FB {
        let g = &p.d * &b + q;
        for i in 0..n {
            b[i] = (b[i] - step * g[i]).max(0.0);
        }
        beta.copy_from_slice(b.as_slice());
        if it % 8 == 0 || it == MAX_FB {
            let r = p.residual(&beta);
            if r <= p.target(&beta) {
                return (beta, r, it);
            }
        }
    }
    let r = p.residual(&beta);
    (beta, r, MAX_FB)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn problem(d: DMatrix<f64>, eta: Vec<f64>, reg: f64) -> WeightProblemD {
        WeightProblemD { d, eta: DVector::from_vec(eta), reg, accuracy: 1e-12 }
    }

    #[test]
    fn nonnegative_eta_gives_zero() {
        let d = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let s = solve_weights_d(&problem(d, vec![0.3, 0.0], 0.1), None);
        assert_eq!(s.beta, vec![0.0, 0.0]);
        assert!(s.converged);
    }

    #[test]
    fn identity_closed_form() {
        let eta = vec![-1.0, 0.5, -0.05, -3.0];
        let s = solve_weights_d(&problem(DMatrix::identity(4, 4), eta.clone(), 0.1), None);
        for (b, e) in s.beta.iter().zip(&eta) {
            assert!((b - (-e - 0.1f64).max(0.0)).abs() < 1e-12);
        }
        assert!(!s.fallback);
    }

    #[test]
    fn rank_one_system() {
        // Two identical atoms: D is rank one.
        let d = DMatrix::from_element(2, 2, 1.0);
        let s = solve_weights_d(&problem(d, vec![-1.0, -1.0], 0.0), None);
        assert!(s.converged, "{s:?}");
        assert!((s.beta[0] + s.beta[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn near_duplicate_cluster_converges_without_fallback() {
        let (_, rho) = crate::kernels::fast_spread_pair::<1>(0.05);
        let xs = [0.3, 0.3 + 1e-7, 0.3 + 3e-7, 0.31, 0.5, 0.5 + 1e-9];
        let d = DMatrix::from_fn(xs.len(), xs.len(), |i, j| rho.eval(&[xs[i] - xs[j]]));
        let p = WeightProblemD { accuracy: 1e-9, ..problem(d, vec![-4.0, -4.0, -3.9, -2.5, -1.0, -1.0], 0.05) };
        let s = solve_weights_d(&p, None);
        assert!(s.converged && !s.fallback, "{s:?}");
        assert!(s.beta.iter().all(|&b| b >= 0.0));
    }
}
