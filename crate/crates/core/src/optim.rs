//! Adam and gradient clipping over parameter lists stored as matrices.

use ndarray::{Array2, Zip};

use crate::Scalar;

#[derive(Debug, Clone)]
pub struct Adam<F: Scalar> {
    pub lr: F,
    pub beta1: F,
    pub beta2: F,
    pub eps: F,
    t: i32,
    m: Vec<Array2<F>>,
    v: Vec<Array2<F>>,
}

impl<F: Scalar> Adam<F> {
    pub fn new(params: &[Array2<F>], lr: f64) -> Self {
        let zeros = || params.iter().map(|p| Array2::zeros(p.raw_dim())).collect();
        Adam { lr: F::of(lr), beta1: F::of(0.9), beta2: F::of(0.999), eps: F::of(1e-8), t: 0, m: zeros(), v: zeros() }
    }

    pub fn step(&mut self, params: &mut [Array2<F>], grads: &[Array2<F>]) {
        self.t += 1;
        let one = F::one();
        let c1 = one - self.beta1.powi(self.t);
        let c2 = one - self.beta2.powi(self.t);
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.lr, self.eps);
        for ((p, g), (m, v)) in params.iter_mut().zip(grads).zip(self.m.iter_mut().zip(self.v.iter_mut())) {
            Zip::from(p).and(g).and(m).and(v).for_each(|p, &g, m, v| {
                *m = b1 * *m + (one - b1) * g;
                *v = b2 * *v + (one - b2) * g * g;
                *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
            });
        }
    }
}

/// Rescales `grads` so their joint L2 norm is at most `max_norm`; returns the original norm.
pub fn clip_global_norm<F: Scalar>(grads: &mut [Array2<F>], max_norm: f64) -> f64 {
    let norm = grads.iter().map(|g| g.iter().map(|x| x.as_f64() * x.as_f64()).sum::<f64>()).sum::<f64>().sqrt();
    if norm > max_norm {
        let s = F::of(max_norm / norm);
        for g in grads.iter_mut() {
            g.mapv_inplace(|x| x * s);
        }
    }
    norm
}

/// Relative error between analytic and numeric derivatives with a small floor on the scale.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn adam_moves_against_gradient() {
        let mut p = vec![array![[1.0f64, -1.0]]];
        let g = vec![array![[2.0, -3.0]]];
        let mut opt = Adam::new(&p, 0.1);
        opt.step(&mut p, &g);
        assert!((p[0][[0, 0]] - 0.9).abs() < 1e-9);
        assert!((p[0][[0, 1]] + 0.9).abs() < 1e-9);
    }

    #[test]
    fn clipping_bounds_norm() {
        let mut g = vec![array![[3.0f32, 4.0]]];
        assert_eq!(clip_global_norm(&mut g, 1.0), 5.0);
        assert!((g[0][[0, 0]] - 0.6).abs() < 1e-6);
    }
}
