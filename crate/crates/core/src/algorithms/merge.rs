//! Objective-gated merging of nearby spikes.

use serde::{Deserialize, Serialize};

use crate::measures::{dist, DiscreteMeasure, Spike};
use crate::Loc;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum MergePolicy {
    None,
    /// Replace a pair within `radius` by one spike at the mass-weighted centroid.
    Interpolate { radius: f64 },
    /// Move the mass of the lighter spike of a pair within `radius` onto the heavier.
    MoveMass { radius: f64 },
}

fn combine<const N: usize>(a: &Spike<N>, b: &Spike<N>, policy: MergePolicy) -> Loc<N> {
    match policy {
        MergePolicy::Interpolate { .. } => {
            let (wa, wb) = (a.weight.abs(), b.weight.abs());
            let t = if wa + wb > 0.0 { wb / (wa + wb) } else { 0.5 };
            std::array::from_fn(|i| a.loc[i] + t * (b.loc[i] - a.loc[i]))
        }
        _ => {
            if b.weight.abs() > a.weight.abs() {
                b.loc
            } else {
                a.loc
            }
        }
    }
}

/// Greedily merges pairs closer than the policy radius, scanning pairs in
/// index order. A merge is kept when the objective stays within `slack` of
/// its value before the pass. Returns the merged measure and the number of
/// merges. Total mass is preserved exactly.
pub fn merge_spikes<const N: usize>(
    mu: &DiscreteMeasure<N>,
    policy: MergePolicy,
    objective: impl Fn(&DiscreteMeasure<N>) -> f64,
    slack: f64,
) -> (DiscreteMeasure<N>, usize) {
    let radius = match policy {
        MergePolicy::None => return (mu.clone(), 0),
        MergePolicy::Interpolate { radius } | MergePolicy::MoveMass { radius } => radius,
    };
    let limit = objective(mu) + slack;
    let mut spikes: Vec<Spike<N>> = mu.spikes().to_vec();
    let mut merges = 0;
    'outer: loop {
        for i in 0..spikes.len() {
            for j in i + 1..spikes.len() {
                if dist(&spikes[i].loc, &spikes[j].loc) >= radius {
                    continue;
                }
                let mut cand = spikes.clone();
                let loc = combine(&spikes[i], &spikes[j], policy);
                cand[i] = Spike { loc, weight: spikes[i].weight + spikes[j].weight };
                cand.remove(j);
                let m = DiscreteMeasure::from_spikes(cand.iter().map(|s| (s.loc, s.weight)), mu.sign())
                    .expect("merged weights keep their sign");
                if objective(&m) <= limit {
                    spikes = cand;
                    merges += 1;
                    continue 'outer;
                }
            }
        }
        break;
    }
    let out = DiscreteMeasure::from_spikes(spikes.into_iter().map(|s| (s.loc, s.weight)), mu.sign())
        .expect("merged weights keep their sign");
    (out, merges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{total_mass, Sign};

    fn pair() -> DiscreteMeasure<1> {
        DiscreteMeasure::from_spikes([([0.4], 1.0), ([0.405], 1.0), ([0.8], 2.0)], Sign::Nonnegative).unwrap()
    }

    #[test]
    fn none_is_identity() {
        let (m, n) = merge_spikes(&pair(), MergePolicy::None, |_| 0.0, 0.0);
        assert_eq!((m, n), (pair(), 0));
    }

    #[test]
    fn equal_pair_merges_to_midpoint() {
        let (m, n) = merge_spikes(&pair(), MergePolicy::Interpolate { radius: 0.01 }, |_| 0.0, 0.0);
        assert_eq!(n, 1);
        assert_eq!(m.len(), 2);
        assert!((m.spikes()[0].loc[0] - 0.4025).abs() < 1e-15);
        assert_eq!(m.spikes()[0].weight, 2.0);
        assert_eq!(total_mass(&m), total_mass(&pair()));
    }

    #[test]
    fn move_mass_keeps_heavier_location() {
        let mu = DiscreteMeasure::from_spikes([([0.4], 0.5), ([0.405], 1.5)], Sign::Nonnegative).unwrap();
        let (m, _) = merge_spikes(&mu, MergePolicy::MoveMass { radius: 0.01 }, |_| 0.0, 0.0);
        assert_eq!(m.spikes(), &[Spike { loc: [0.405], weight: 2.0 }]);
    }

    #[test]
    fn gate_rejects_increase() {
        let obj = |m: &DiscreteMeasure<1>| -(m.len() as f64);
        let (m, n) = merge_spikes(&pair(), MergePolicy::Interpolate { radius: 0.01 }, obj, 0.5);
        assert_eq!((m, n), (pair(), 0));
    }
}
