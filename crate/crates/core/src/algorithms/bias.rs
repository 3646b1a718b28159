//! Discrete gradient on the sensor grid and the total-variation bias term.

/// Forward differences with Neumann boundary on a tensor grid, first axis
/// fastest. Output layout: `N` components per cell, `p[cell·N + axis]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GradientOperator<const N: usize> {
    pub counts: [usize; N],
}

impl<const N: usize> GradientOperator<N> {
    pub fn new(counts: [usize; N]) -> Self {
        GradientOperator { counts }
    }

    pub fn cells(&self) -> usize {
        self.counts.iter().product()
    }

    fn stride(&self, axis: usize) -> usize {
        self.counts[..axis].iter().product()
    }

    fn coord(&self, cell: usize, axis: usize) -> usize {
        (cell / self.stride(axis)) % self.counts[axis]
    }

    pub fn apply(&self, z: &[f64]) -> Vec<f64> {
        let m = self.cells();
        assert_eq!(z.len(), m);
        let mut p = vec![0.0; m * N];
        for cell in 0..m {
            for a in 0..N {
                if self.coord(cell, a) + 1 < self.counts[a] {
                    p[cell * N + a] = z[cell + self.stride(a)] - z[cell];
                }
            }
        }
        p
    }

    /// `∇ᵀp`.
    pub fn adjoint(&self, p: &[f64]) -> Vec<f64> {
        let m = self.cells();
        assert_eq!(p.len(), m * N);
        let mut z = vec![0.0; m];
        for cell in 0..m {
            for a in 0..N {
                if self.coord(cell, a) + 1 < self.counts[a] {
                    let v = p[cell * N + a];
                    z[cell + self.stride(a)] += v;
                    z[cell] -= v;
                }
            }
        }
        z
    }

    /// Upper bound `4N` for `‖∇‖²`.
    pub fn norm_sq_bound(&self) -> f64 {
        4.0 * N as f64
    }

    /// `‖∇z‖_{2,1}`: sum over cells of the Euclidean norm of the gradient.
    pub fn tv(&self, z: &[f64]) -> f64 {
        self.apply(z).chunks(N).map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt()).sum()
    }
}

/// `λ‖∇_h z‖_{2,1}` on the sensor grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BiasTerm<const N: usize> {
    pub lambda: f64,
    pub grad: GradientOperator<N>,
}

impl<const N: usize> BiasTerm<N> {
    /// Proximal map of `σH*`: cellwise projection onto the `λ`-ball.
    pub fn project_dual(&self, y: &mut [f64]) {
        for c in y.chunks_mut(N) {
            let n = c.iter().map(|v| v * v).sum::<f64>().sqrt();
            if n > self.lambda {
                let s = self.lambda / n;
                for v in c {
                    *v *= s;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_1d() {
        let g = GradientOperator::new([4]);
        assert_eq!(g.apply(&[1.0, 3.0, 2.0, 2.0]), vec![2.0, -1.0, 0.0, 0.0]);
        assert_eq!(g.tv(&[1.0, 3.0, 2.0, 2.0]), 3.0);
    }

    #[test]
    fn adjointness_2d() {
        let g = GradientOperator::new([3, 4]);
        let z: Vec<f64> = (0..12).map(|i| ((i * 7) % 5) as f64 - 1.5).collect();
        let p: Vec<f64> = (0..24).map(|i| ((i * 3) % 7) as f64 * 0.25 - 0.6).collect();
        let lhs: f64 = g.apply(&z).iter().zip(&p).map(|(a, b)| a * b).sum();
        let rhs: f64 = z.iter().zip(g.adjoint(&p)).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn projection_inside_ball_is_identity() {
        let b = BiasTerm { lambda: 1e6, grad: GradientOperator::new([2, 2]) };
        let mut y = vec![0.3, -0.4, 1.0, 2.0, 0.0, 0.0, 5.0, 5.0];
        let orig = y.clone();
        b.project_dual(&mut y);
        assert_eq!(y, orig);
        let b = BiasTerm { lambda: 0.5, ..b };
        b.project_dual(&mut y);
        assert!((y[0] * y[0] + y[1] * y[1]).sqrt() <= 0.5 + 1e-15);
        assert!(((y[6] * y[6] + y[7] * y[7]).sqrt() - 0.5).abs() < 1e-15);
    }
}
