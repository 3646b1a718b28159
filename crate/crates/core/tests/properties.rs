use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use spikeslide::algorithms::transport::transported;
use spikeslide::algorithms::GradientOperator;
use spikeslide::inner::{bnb_minimize, prox_l1sq_l1_pos, solve_weights_d, BnbTask, WeightProblemD};
use spikeslide::kernels::{fast_spread_pair, CertificateFunction};
use spikeslide::measures::{total_mass, DiscreteMeasure, Domain, Sign, TransportPlan};
use spikeslide::verify::checks::prox_optimality_violation;
use spikeslide::verify::oracles::grid_min_1d;

fn spikes(max: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0.0..1.0f64, 0.01..5.0f64), 1..max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn prune_keeps_mass_and_merges_duplicates(sp in spikes(8), dup in 0usize..8) {
        let mut list: Vec<([f64; 1], f64)> = sp.iter().map(|&(x, w)| ([x], w)).collect();
        let first = list[0];
        for _ in 0..dup {
            list.push(first);
        }
        let mu = DiscreteMeasure::from_spikes(list, Sign::Nonnegative).unwrap();
        let pruned = mu.prune(1.0);
        prop_assert!((total_mass(&mu) - total_mass(&pruned)).abs() < 1e-12);
        prop_assert!(pruned.len() <= sp.len());
    }

    #[test]
    fn weight_solution_satisfies_kkt(sp in spikes(7), shift in -2.0..0.5f64, reg in 0.01..0.5f64) {
        let (_, rho) = fast_spread_pair::<1>(0.05);
        let xs: Vec<f64> = sp.iter().map(|s| s.0).collect();
        let n = xs.len();
        let d = DMatrix::from_fn(n, n, |i, j| rho.eval(&[xs[i] - xs[j]]));
        let eta = DVector::from_iterator(n, sp.iter().map(|s| shift * s.1 / 5.0));
        let p = WeightProblemD { d: d.clone(), eta: eta.clone(), reg, accuracy: 1e-9 };
        let sol = solve_weights_d(&p, None);
        prop_assert!(sol.beta.iter().all(|&b| b >= 0.0));
        let g = &d * DVector::from_column_slice(&sol.beta) + &eta;
        for i in 0..n {
            let gi = g[i] + reg;
            if sol.beta[i] > 0.0 {
                prop_assert!(gi.abs() <= 1e-8, "coordinate {i}: {gi:e}");
            } else {
                prop_assert!(gi >= -1e-8, "coordinate {i}: {gi:e}");
            }
        }
    }

    #[test]
    fn radon_prox_is_optimal(
        pts in prop::collection::vec((-1.0..2.0f64, 0.0..1.0f64), 1..10),
        s in 0.01..10.0f64,
        c in 0.0..1.0f64,
    ) {
        let point: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let alpha: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let beta = prox_l1sq_l1_pos(&alpha, &point, s, c);
        prop_assert!(beta.iter().all(|&b| b >= 0.0));
        prop_assert!(prox_optimality_violation(&alpha, &point, s, c, &beta) <= 1e-10);
    }

    #[test]
    fn bnb_bound_is_below_grid_minimum(bumps in prop::collection::vec((0.0..1.0f64, -1.0..1.0f64), 1..6), offset in -0.1..0.1f64) {
        let (_, rho) = fast_spread_pair::<1>(0.05);
        let f = CertificateFunction::constant(offset).with_bumps(rho, bumps.iter().map(|&(x, w)| ([x], w)));
        let res = bnb_minimize(&BnbTask::minimize(&f, Domain::unit(), 1e-8));
        let (_, grid) = grid_min_1d(&f, 20_001);
        prop_assert!(res.bound <= grid + 1e-12);
        prop_assert!(res.value <= grid + 1e-8);
        prop_assert!(res.value >= res.bound - 1e-12);
    }

    #[test]
    fn transport_preserves_mass(sp in spikes(6), moves in prop::collection::vec((-0.1..0.1f64, 0.0..1.0f64), 6)) {
        let mu = DiscreteMeasure::from_spikes(sp.iter().map(|&(x, w)| ([x], w)), Sign::Nonnegative).unwrap().prune(1.0);
        let mut gamma = TransportPlan::empty();
        for (s, &(dx, frac)) in mu.spikes().iter().zip(&moves) {
            gamma.push(s.loc, [(s.loc[0] + dx).clamp(0.0, 1.0)], frac * s.weight);
        }
        let moved = transported(&mu, &gamma, 1.0);
        prop_assert!((total_mass(&moved) - total_mass(&mu)).abs() < 1e-10);
        prop_assert!(moved.weights().all(|w| w >= 0.0));
    }

    #[test]
    fn gradient_adjoint_pairs(z in prop::collection::vec(-1.0..1.0f64, 12), p in prop::collection::vec(-1.0..1.0f64, 24)) {
        let g = GradientOperator::new([4, 3]);
        let lhs: f64 = g.apply(&z).iter().zip(&p).map(|(a, b)| a * b).sum();
        let rhs: f64 = z.iter().zip(g.adjoint(&p)).map(|(a, b)| a * b).sum();
        prop_assert!((lhs - rhs).abs() < 1e-12);
        prop_assert!(g.tv(&z) >= 0.0);
    }
}
