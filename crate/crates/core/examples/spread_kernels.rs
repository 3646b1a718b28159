// The cubic spread, its autoconvolution kernel and certificate functions.
//
// ```bash
// cargo run --release --example spread_kernels
// ```

use spikeslide::kernels::{check_psd, fast_spread_pair, CertificateFunction};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let (psi, rho) = fast_spread_pair::<1>(0.05);
    println!("ψ: ∫ψ = {:.6}, support radius {}, Lipschitz {:.2}", psi.integral(), psi.support_radius(), psi.lipschitz_value());
    println!("ρ: ρ(0) = {:.6}, ∇ρ Lipschitz {:.2}", rho.eval(&[0.0]), rho.lipschitz_grad());

    let report = check_psd(&rho, 1024)?;
    println!("ρ spectrum on a 1024 grid: min {:.3e}, max {:.3e}", report.min_real, report.max_real);
    assert!(report.passes());

    let (_, rho2) = fast_spread_pair::<2>(0.15);
    assert!(check_psd(&rho2, 64)?.passes());

    // offset plus a positive and a negative bump
    let f = CertificateFunction::constant(0.1).with_bumps(rho, [([0.3], 1.0), ([0.6], -0.5)]);
    for x in [0.0, 0.29, 0.45, 0.62] {
        let (v, g) = f.value_and_grad(&[x]);
        println!("f({x:.2}) = {v:+.4}, f' = {:+.3}", g[0]);
    }
    println!("global Lipschitz bounds (value, gradient): {:?}", f.global_lipschitz());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
