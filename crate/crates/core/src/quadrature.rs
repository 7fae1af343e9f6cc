//! Gauss–Legendre rules and adaptive bisection built on them.

use num_complex::Complex;
use std::ops::{Add, Mul};

use crate::scalar::{lit, Real};

/// Values that can be integrated: real scalars and complex numbers.
pub trait QuadValue<T>: Copy + Add<Output = Self> + Mul<T, Output = Self> {
    fn zero_value() -> Self;
    fn magnitude(&self) -> T;
}

impl QuadValue<f64> for f64 {
    fn zero_value() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue<f32> for f32 {
    fn zero_value() -> Self {
        0.0
    }
    fn magnitude(&self) -> f32 {
        self.abs()
    }
}

impl<T: Real> QuadValue<T> for Complex<T> {
    fn zero_value() -> Self {
        Complex::new(T::zero(), T::zero())
    }
    fn magnitude(&self) -> T {
        self.norm()
    }
}

/// Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre<T> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Real> GaussLegendre<T> {
    /// Nodes by Newton iteration on the Legendre recurrence, computed in f64.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "rule needs at least one node");
        let mut nodes = vec![0.0f64; n];
        let mut weights = vec![0.0f64; n];
        let nf = n as f64;
        for i in 0..(n + 1) / 2 {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0f64, x);
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                if n == 1 {
                    p1 = x;
                    p0 = 1.0;
                }
                dp = nf * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            if n == 1 {
                x = 0.0;
                dp = 1.0;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n == 1 {
            weights[0] = 2.0;
        }
        Self {
            nodes: nodes.into_iter().map(lit).collect(),
            weights: weights.into_iter().map(lit).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to [a, b].
    pub fn mapped(&self, a: T, b: T) -> impl Iterator<Item = (T, T)> + '_ {
        let half = (b - a) * lit(0.5);
        let mid = (a + b) * lit(0.5);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, w * half))
    }

    pub fn integrate<V: QuadValue<T>>(&self, a: T, b: T, mut f: impl FnMut(T) -> V) -> V {
        let mut acc = V::zero_value();
        for (x, w) in self.mapped(a, b) {
            acc = acc + f(x) * w;
        }
        acc
    }

    /// Bisects until the rule on an interval agrees with the sum over its
    /// halves to `tol` (absolute), or `max_depth` is reached.
    pub fn integrate_adaptive<V: QuadValue<T>>(
        &self,
        a: T,
        b: T,
        tol: T,
        max_depth: usize,
        f: &mut impl FnMut(T) -> V,
    ) -> V {
        let whole = self.integrate(a, b, &mut *f);
        self.refine(a, b, whole, tol, max_depth, f)
    }

    fn refine<V: QuadValue<T>>(
        &self,
        a: T,
        b: T,
        whole: V,
        tol: T,
        depth: usize,
        f: &mut impl FnMut(T) -> V,
    ) -> V {
        let m = (a + b) * lit(0.5);
        let left = self.integrate(a, m, &mut *f);
        let right = self.integrate(m, b, &mut *f);
        let split = left + right;
        let diff = (split + whole * (-T::one())).magnitude();
        if depth == 0 || diff <= tol {
            return split;
        }
        let half_tol = tol * lit(0.5);
        self.refine(a, m, left, half_tol, depth - 1, f)
            + self.refine(m, b, right, half_tol, depth - 1, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_is_exact_for_polynomials() {
        for n in 1..12 {
            let g = GaussLegendre::<f64>::new(n);
            assert!((g.weights.iter().sum::<f64>() - 2.0).abs() < 1e-14);
            for k in 0..(2 * n) {
                let exact = if k % 2 == 0 { 2.0 / (k as f64 + 1.0) } else { 0.0 };
                let v = g.integrate(-1.0, 1.0, |x| x.powi(k as i32));
                assert!((v - exact).abs() < 1e-13, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let g = GaussLegendre::<f64>::new(8);
        let v = g.integrate_adaptive(0.0, 1.0, 1e-12, 40, &mut |x: f64| x.sqrt());
        assert!((v - 2.0 / 3.0).abs() < 1e-11);
        let c = g.integrate_adaptive(0.0, std::f64::consts::PI, 1e-12, 30, &mut |t: f64| {
            Complex::new(0.0, t).exp()
        });
        assert!((c - Complex::new(0.0, 2.0)).norm() < 1e-12);
    }

    #[test]
    fn single_precision_rule() {
        let g = GaussLegendre::<f32>::new(5);
        let v = g.integrate(0.0f32, 1.0, |x| x * x * x * x);
        assert!((v - 0.2).abs() < 1e-6);
    }
}
