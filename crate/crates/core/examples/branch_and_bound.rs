// Certified global minimisation of a certificate function by branch and bound.
//
// ```bash
// cargo run --release --example branch_and_bound
// ```

use spikeslide::inner::{bnb_minimize, BnbTask};
use spikeslide::kernels::{fast_spread_pair, CertificateFunction};
use spikeslide::measures::Domain;
use spikeslide::verify::oracles::grid_min_1d;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let (_, rho) = fast_spread_pair::<1>(0.05);
    let f = CertificateFunction::constant(0.02).with_bumps(rho, [([0.2], -0.3), ([0.27], -0.4), ([0.6], -0.5), ([0.63], 0.2)]);

    let res = bnb_minimize(&BnbTask::minimize(&f, Domain::unit(), 1e-9));
    println!("min at {:.6} value {:.9}, certified bound {:.9}, {} boxes", res.point[0], res.value, res.bound, res.boxes);

    let (x, v) = grid_min_1d(&f, 100_001);
    println!("grid minimum at {:.6} value {v:.9}", x[0]);
    assert!(res.bound <= v + 1e-12);

    let (_, rho2) = fast_spread_pair::<2>(0.15);
    let g = CertificateFunction::constant(0.0).with_bumps(rho2, [([0.3, 0.4], -1.0), ([0.7, 0.6], -0.8)]);
    let res2 = bnb_minimize(&BnbTask::minimize(&g, Domain::unit(), 1e-8));
    println!("2D min at ({:.4}, {:.4}) value {:.6}, gap {:.1e}", res2.point[0], res2.point[1], res2.value, res2.gap);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
