//! Weight subproblem with a squared `ℓ¹` proximal term,
//! `min ½‖β − α‖₁² + ⟨η, β⟩ + reg·‖β‖₁` over `β ≥ 0`.

/// Proximal map of `β ↦ (s/2)‖β − α‖₁² + c‖β‖₁ + δ_{≥0}(β)` at `point`.
///
/// How it works:
/// - With `λ = s‖β − α‖₁` fixed, each coordinate is a scalar problem with
///   solution `βᵢ(λ) = max(0, αᵢ + soft(pᵢ − c − αᵢ, λ))`.
/// - `T(λ) = Σ|βᵢ(λ) − αᵢ|` is piecewise linear and non-increasing. Sorting its breakpoints
///   locates the segment containing the root of `λ = s·T(λ)`, which is then solved linearly.
pub fn prox_l1sq_l1_pos(alpha: &[f64], point: &[f64], s: f64, c: f64) -> Vec<f64> {
    assert_eq!(alpha.len(), point.len());
    let d: Vec<f64> = point.iter().zip(alpha).map(|(p, a)| p - c - a).collect();
    let lambda = if s > 0.0 { solve_multiplier(alpha, &d, s) } else { 0.0 };
    alpha.iter().zip(&d).map(|(&a, &di)| (a + soft(di, lambda)).max(0.0)).collect()
}

fn soft(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// `T(λ)` for the coordinatewise solution.
fn distance_sum(alpha: &[f64], d: &[f64], lambda: f64) -> f64 {
    alpha
        .iter()
        .zip(d)
        .map(|(&a, &di)| if di > 0.0 { (di - lambda).max(0.0) } else { a.min((-di - lambda).max(0.0)) })
        .sum()
}

fn solve_multiplier(alpha: &[f64], d: &[f64], s: f64) -> f64 {
    let mut breaks: Vec<f64> = Vec::with_capacity(2 * d.len() + 1);
    breaks.push(0.0);
    for (&a, &di) in alpha.iter().zip(d) {
        if di > 0.0 {
            breaks.push(di);
        } else if di < 0.0 {
            breaks.push(-di);
            if -di - a > 0.0 {
                breaks.push(-di - a);
            }
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let mut prev = 0.0;
    let mut t_prev = distance_sum(alpha, d, 0.0);
    if t_prev == 0.0 {
        return 0.0;
    }
    for &bk in &breaks[1..] {
        let t_bk = distance_sum(alpha, d, bk);
        if bk >= s * t_bk {
            let slope = (t_bk - t_prev) / (bk - prev);
            return s * (t_prev - slope * prev) / (1.0 - s * slope);
        }
        prev = bk;
        t_prev = t_bk;
    }
    // T vanishes past the last breakpoint, so the loop always returns; this
    // covers rounding at the final segment.
    prev
}

#[derive(Clone, Debug)]
pub struct WeightProblemRadon {
    pub alpha: Vec<f64>,
    pub eta: Vec<f64>,
    pub reg: f64,
    pub accuracy: f64,
}

impl WeightProblemRadon {
    pub fn objective(&self, beta: &[f64]) -> f64 {
        let t: f64 = beta.iter().zip(&self.alpha).map(|(b, a)| (b - a).abs()).sum();
        0.5 * t * t + beta.iter().zip(&self.eta).map(|(b, e)| (e + self.reg) * b).sum::<f64>()
    }

    /// `inf_{g ∈ ∂f(β)} ‖g‖_∞`. `∂(½‖·‖₁²)(u) = ‖u‖₁·∂‖·‖₁(u)` is a product of intervals.
    pub fn residual(&self, beta: &[f64]) -> f64 {
        let t: f64 = beta.iter().zip(&self.alpha).map(|(b, a)| (b - a).abs()).sum();
        let mut worst: f64 = 0.0;
        for i in 0..beta.len() {
            let base = self.eta[i] + self.reg;
            let u = beta[i] - self.alpha[i];
            let (lo, hi) = if u > 0.0 {
                (base + t, base + t)
            } else if u < 0.0 {
                (base - t, base - t)
            } else {
                (base - t, base + t)
            };
            let lo = if beta[i] == 0.0 { f64::NEG_INFINITY } else { lo };
            worst = worst.max(interval_distance(lo, hi));
        }
        worst
    }

    pub fn target(&self, beta: &[f64]) -> f64 {
        self.accuracy / (1.0 + beta.iter().map(|b| b.abs()).sum::<f64>())
    }
}

/// Distance from 0 to `[lo, hi]`.
pub(crate) fn interval_distance(lo: f64, hi: f64) -> f64 {
    if lo > 0.0 {
        lo
    } else if hi < 0.0 {
        -hi
    } else {
        0.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RadonSolution {
    pub beta: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

const MAX_ITER: usize = 10_000;

/// Proximal iteration `β ← prox_{s(½‖·−α‖₁² + reg‖·‖₁)}(β − sη)`: the primal-dual
/// proximal splitting iteration with a trivial linear operator. The step grows
/// geometrically, which makes the exact proximal point steps converge fast.
pub fn solve_weights_radon(p: &WeightProblemRadon) -> RadonSolution {
    let n = p.alpha.len();
    if n == 0 {
        return RadonSolution { beta: vec![], residual: 0.0, iterations: 0, converged: true };
    }
    let scale = 1.0 + p.eta.iter().fold(0.0f64, |m, e| m.max(e.abs())) + p.alpha.iter().sum::<f64>();
    let mut s = 1.0 / scale;
    let mut beta: Vec<f64> = p.alpha.iter().map(|a| a.max(0.0)).collect();
    let mut best = beta.clone();
    let mut best_res = p.residual(&beta);
    let mut iterations = 0;
    while iterations < MAX_ITER && best_res > p.target(&best) {
        iterations += 1;
        let shifted: Vec<f64> = beta.iter().zip(&p.eta).map(|(b, e)| b - s * e).collect();
        beta = prox_l1sq_l1_pos(&p.alpha, &shifted, s, s * p.reg);
        let r = p.residual(&beta);
        if r < best_res {
            best_res = r;
            best.clone_from(&beta);
        }
        s = (s * 4.0).min(1e12 / scale);
    }
    let converged = best_res <= p.target(&best);
    RadonSolution { beta: best, residual: best_res, iterations, converged }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Optimality residual of the prox problem, treating `|u| ≤ tol` as a kink.
    fn prox_residual(alpha: &[f64], p: &[f64], s: f64, c: f64, beta: &[f64]) -> f64 {
        let t: f64 = beta.iter().zip(alpha).map(|(b, a)| (b - a).abs()).sum();
        let mut worst: f64 = 0.0;
        for i in 0..beta.len() {
            let base = c + beta[i] - p[i];
            let u = beta[i] - alpha[i];
            let (lo, hi) = if u.abs() <= 1e-13 {
                (base - s * t, base + s * t)
            } else {
                (base + s * t * u.signum(), base + s * t * u.signum())
            };
            let lo = if beta[i] <= 1e-13 { f64::NEG_INFINITY } else { lo };
            worst = worst.max(interval_distance(lo, hi));
        }
        worst
    }

    #[test]
    fn fixed_point_without_penalty() {
        let a = [0.3, 1.2, 0.0];
        assert_eq!(prox_l1sq_l1_pos(&a, &a, 2.0, 0.0), a.to_vec());
    }

    #[test]
    fn far_below_zero_gives_zero() {
        let out = prox_l1sq_l1_pos(&[0.5, 0.1], &[-50.0, -80.0], 0.7, 0.2);
        assert_eq!(out, vec![0.0, 0.0]);
    }

    #[test]
    fn prox_optimality_on_examples() {
        let cases: [(&[f64], &[f64], f64, f64); 4] = [
            (&[1.0, 0.0, 2.0], &[3.0, -1.0, 0.5], 0.5, 0.1),
            (&[0.0], &[2.0], 10.0, 0.0),
            (&[1.0, 1.0], &[1.5, 0.2], 1.0, 0.3),
            (&[0.2, 0.7, 0.1, 3.0], &[-0.4, 2.5, 0.1, 2.0], 3.0, 0.05),
        ];
        for (a, p, s, c) in cases {
            let b = prox_l1sq_l1_pos(a, p, s, c);
            assert!(prox_residual(a, p, s, c, &b) < 1e-12, "{a:?} {p:?} -> {b:?}");
        }
    }

    #[test]
    fn radon_examples() {
        let p = WeightProblemRadon { alpha: vec![0.5, 2.0], eta: vec![0.0, 0.0], reg: 0.0, accuracy: 1e-10 };
        assert_eq!(solve_weights_radon(&p).beta, vec![0.5, 2.0]);
        let p = WeightProblemRadon { alpha: vec![0.0, 0.0], eta: vec![0.1, 0.0], reg: 0.05, accuracy: 1e-10 };
        assert_eq!(solve_weights_radon(&p).beta, vec![0.0, 0.0]);
    }

    #[test]
    fn radon_single_well() {
        // f(b) = ½b² + (η + reg) b on b ≥ 0 with α = 0: b = −(η + reg).
        let p = WeightProblemRadon { alpha: vec![0.0], eta: vec![-1.5], reg: 0.25, accuracy: 1e-12 };
        let s = solve_weights_radon(&p);
        assert!(s.converged);
        assert!((s.beta[0] - 1.25).abs() < 1e-10);
    }
}
