//! Certified global minimisation over a box by Lipschitz branch-and-bound.
//!
//! How it works:
//! - Each box is bounded below by `max(f(c) − L₁‖h‖, f(c) − Σ|∂ᵢf(c)|hᵢ − ½L₂‖h‖²)`, where `c` is the
//!   centre, `h` the half-widths and `L₁`, `L₂` local Lipschitz constants of `f` and `∇f`.
//! - Boxes are processed best-first in fixed batches. The children of a batch are evaluated in
//!   parallel and merged in a fixed order, so the result does not depend on the number of worker
//!   threads.
//! - The search stops when no open box can improve on the incumbent by more than the tolerance.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::kernels::CertificateFunction;
use crate::measures::Domain;
use crate::Loc;

/// Objective with box-local Lipschitz information.
pub trait BoxObjective<const N: usize>: Sync {
    fn value_and_grad(&self, x: &Loc<N>) -> (f64, Loc<N>);
    /// Lipschitz constants of the value and the gradient on `center ± half`.
    fn box_lipschitz(&self, center: &Loc<N>, half: &Loc<N>) -> (f64, f64);
}

impl<const N: usize> BoxObjective<N> for CertificateFunction<N> {
    fn value_and_grad(&self, x: &Loc<N>) -> (f64, Loc<N>) {
        CertificateFunction::value_and_grad(self, x)
    }

    fn box_lipschitz(&self, center: &Loc<N>, half: &Loc<N>) -> (f64, f64) {
        CertificateFunction::box_lipschitz(self, center, half)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Min,
    Max,
}

pub struct BnbTask<'a, O, const N: usize> {
    pub objective: &'a O,
    pub domain: Domain<N>,
    pub tolerance: f64,
    pub mode: Mode,
    /// Budget on evaluated boxes.
    pub max_boxes: usize,
}

impl<'a, O: BoxObjective<N>, const N: usize> BnbTask<'a, O, N> {
    pub fn minimize(objective: &'a O, domain: Domain<N>, tolerance: f64) -> Self {
        BnbTask { objective, domain, tolerance, mode: Mode::Min, max_boxes: 2_000_000 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BnbResult<const N: usize> {
    pub point: Loc<N>,
    /// Objective value at `point`.
    pub value: f64,
    /// Certified bound on the optimum: a lower bound in min mode, an upper
    /// bound in max mode.
    pub bound: f64,
    /// `|value − bound|`.
    pub gap: f64,
    pub boxes: usize,
    pub budget_exhausted: bool,
}

#[derive(Clone, Copy, Debug)]
struct Node<const N: usize> {
    center: Loc<N>,
    half: Loc<N>,
    value: f64,
    lower: f64,
}

fn lex_cmp<const N: usize>(a: &Loc<N>, b: &Loc<N>) -> Ordering {
    for i in 0..N {
        match a[i].total_cmp(&b[i]) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

impl<const N: usize> PartialEq for Node<N> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<const N: usize> Eq for Node<N> {}
impl<const N: usize> PartialOrd for Node<N> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<const N: usize> Ord for Node<N> {
    /// Reversed, so that the max-heap pops the smallest lower bound first,
    /// then the lexicographically smallest centre.
    fn cmp(&self, other: &Self) -> Ordering {
        other.lower.total_cmp(&self.lower).then_with(|| lex_cmp(&other.center, &self.center))
    }
}

const BATCH: usize = 16;

fn evaluate<O: BoxObjective<N>, const N: usize>(obj: &O, sign: f64, center: Loc<N>, half: Loc<N>) -> Node<N> {
    let (v, g) = obj.value_and_grad(&center);
    let (l1, l2) = obj.box_lipschitz(&center, &half);
    let (v, hn2) = (sign * v, half.iter().map(|h| h * h).sum::<f64>());
    let first = v - l1 * hn2.sqrt();
    let second = v - (0..N).map(|i| g[i].abs() * half[i]).sum::<f64>() - 0.5 * l2 * hn2;
    let lower = match (first.is_nan(), second.is_nan()) {
        (false, false) => first.max(second),
        (true, false) => second,
        (false, true) => first,
        (true, true) => f64::NEG_INFINITY,
    };
    Node { center, half, value: v, lower: lower.min(v) }
}

fn split<const N: usize>(n: &Node<N>) -> [(Loc<N>, Loc<N>); 2] {
    let axis = (0..N).fold(0, |best, i| if n.half[i] > n.half[best] { i } else { best });
    let mut half = n.half;
    half[axis] *= 0.5;
    let mut lo = n.center;
    let mut hi = n.center;
    lo[axis] -= half[axis];
    hi[axis] += half[axis];
    [(lo, half), (hi, half)]
}

/// Runs the search. Thread parallelism comes from the ambient rayon pool.
pub fn bnb_minimize<O: BoxObjective<N>, const N: usize>(task: &BnbTask<'_, O, N>) -> BnbResult<N> {
    let sign = if task.mode == Mode::Min { 1.0 } else { -1.0 };
    let obj = task.objective;
    let d = &task.domain;
    let center = d.center();
    let half: Loc<N> = std::array::from_fn(|i| 0.5 * (d.upper[i] - d.lower[i]));
    let min_half = 1e-14 * d.diameter();

    let root = evaluate(obj, sign, center, half);
    let mut best = (root.value, root.center);
    let mut heap = BinaryHeap::new();
    let mut closed_lower = f64::INFINITY;
    let mut boxes = 1;
    let mut budget_exhausted = false;
    if root.lower < best.0 - task.tolerance {
        heap.push(root);
    } else {
        closed_lower = root.lower;
    }

    loop {
        let mut batch = Vec::with_capacity(BATCH);
        while batch.len() < BATCH {
            match heap.peek() {
                Some(n) if n.lower < best.0 - task.tolerance => {
                    let n = heap.pop().expect("peeked");
                    if n.half.iter().all(|&h| h <= min_half) {
                        closed_lower = closed_lower.min(n.value);
                    } else {
                        batch.push(n);
                    }
                }
                _ => break,
            }
        }
        if batch.is_empty() {
            break;
        }
        if boxes >= task.max_boxes {
            budget_exhausted = true;
            for n in batch {
                heap.push(n);
            }
            break;
        }
        let children: Vec<(Loc<N>, Loc<N>)> = batch.iter().flat_map(split).collect();
        let evaluated: Vec<Node<N>> = children.par_iter().map(|&(c, h)| evaluate(obj, sign, c, h)).collect();
        boxes += evaluated.len();
        for n in &evaluated {
            if n.value < best.0 || (n.value == best.0 && lex_cmp(&n.center, &best.1) == Ordering::Less) {
                best = (n.value, n.center);
            }
        }
        for n in evaluated {
            if n.lower < best.0 - task.tolerance {
                heap.push(n);
            } else {
                closed_lower = closed_lower.min(n.lower);
            }
        }
    }
    let open_lower = heap.peek().map_or(f64::INFINITY, |n| n.lower);
    let lower = closed_lower.min(open_lower).min(best.0);
    BnbResult {
        point: best.1,
        value: sign * best.0,
        bound: sign * lower,
        gap: best.0 - lower,
        boxes,
        budget_exhausted,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{fast_spread, fast_spread_pair};

    #[test]
    fn constant_objective() {
        let f = CertificateFunction::<1>::constant(2.5);
        let r = bnb_minimize(&BnbTask::minimize(&f, Domain::unit(), 1e-8));
        assert_eq!(r.value, 2.5);
        assert_eq!(r.gap, 0.0);
        assert_eq!(r.boxes, 1);
    }

    #[test]
    fn single_negative_bump() {
        let (_, rho) = fast_spread_pair::<1>(0.05);
        let f = CertificateFunction::constant(0.0).with_bumps(rho, [([0.3137], -1.0)]);
        let r = bnb_minimize(&BnbTask::minimize(&f, Domain::unit(), 1e-9));
        assert!((r.point[0] - 0.3137).abs() < 1e-3);
        assert!(r.value <= -1.0 + 1e-9);
        assert!(r.gap <= 1e-9 && !r.budget_exhausted);
    }

    #[test]
    fn maximisation_2d() {
        let k = fast_spread::<2>(0.2);
        let f = CertificateFunction::constant(0.1).with_bumps(k, [([0.6, 0.25], 2.0), ([0.2, 0.7], 1.0)]);
        let mut t = BnbTask::minimize(&f, Domain::unit(), 1e-8);
        t.mode = Mode::Max;
        let r = bnb_minimize(&t);
        assert!((r.value - 2.1).abs() < 1e-8);
        assert!(r.bound >= r.value && r.bound <= r.value + 1e-8);
    }
}
