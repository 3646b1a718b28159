// Finite-dimensional weight subproblems: the 𝒟-weighted nonnegative lasso
// and the Radon-squared proximal problem.
//
// ```bash
// cargo run --release --example weight_subproblem
// ```

use nalgebra::{DMatrix, DVector};
use spikeslide::inner::{prox_l1sq_l1_pos, solve_weights_d, WeightProblemD};
use spikeslide::kernels::fast_spread_pair;
use spikeslide::verify::oracles::projected_gradient;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let (_, rho) = fast_spread_pair::<1>(0.05);
    let xs = [0.1, 0.13, 0.4, 0.42, 0.8];
    let d = DMatrix::from_fn(xs.len(), xs.len(), |i, j| rho.eval(&[xs[i] - xs[j]]));
    let eta = DVector::from_vec(vec![-1.0, -0.8, 0.3, -0.6, -0.2]);
    let p = WeightProblemD { d: d.clone(), eta: eta.clone(), reg: 0.1, accuracy: 1e-10 };

    let sol = solve_weights_d(&p, None);
    println!("β = {:.6?}", sol.beta);
    println!("residual {:.2e}, {} iterations, converged {}", sol.residual, sol.iterations, sol.converged);

    let reference = projected_gradient(&d, &eta, 0.1, 200_000);
    let gap = p.objective(&sol.beta) - p.objective(&reference);
    println!("objective gap to projected gradient: {gap:.2e}");
    assert!(gap <= 1e-8);

    // prox of β ↦ (s/2)‖β − α‖₁² + c‖β‖₁ over β ≥ 0, here with α = 0
    let prox = prox_l1sq_l1_pos(&[0.0; 3], &[1.0, 0.5, -0.2], 2.0, 0.1);
    println!("radon prox: {prox:.6?}");
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
