//! Sparse polynomials in one, two and three variables with closed-form derivatives.

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

/// Dense univariate polynomial `Σ c_k s^k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Poly1<T> {
    pub coeffs: Vec<T>,
}

impl<T: Real> Poly1<T> {
    pub fn new(coeffs: Vec<T>) -> Self {
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    /// Value and first two derivatives, by Horner's scheme.
    pub fn eval2(&self, s: T) -> (T, T, T) {
        let (mut p, mut dp, mut ddp) = (T::zero(), T::zero(), T::zero());
        for &c in self.coeffs.iter().rev() {
            ddp = ddp * s + dp + dp;
            dp = dp * s + p;
            p = p * s + c;
        }
        (p, dp, ddp)
    }

    pub fn eval(&self, s: T) -> T {
        self.eval2(s).0
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn cast<U: Real>(&self) -> Poly1<U> {
        Poly1 {
            coeffs: self.coeffs.iter().map(|c| U::lit(c.to_f64_lossy())).collect(),
        }
    }
}

/// Bivariate polynomial as a list of terms `c · p1^i p2^j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Poly2<T> {
    pub terms: Vec<(u32, u32, T)>,
}

/// Value, gradient and Hessian of a bivariate function at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet2<T> {
    pub value: T,
    pub grad: [T; 2],
    pub hess: [[T; 2]; 2],
}

fn powi_u<T: Real>(x: T, n: u32) -> T {
    if n == 0 {
        T::one()
    } else {
        x.powi(n as i32)
    }
}

/// `d^k/dx^k x^n` evaluated at `x`.
fn dpow<T: Real>(x: T, n: u32, k: u32) -> T {
    if k > n {
        return T::zero();
    }
    let mut c = T::one();
    for m in 0..k {
        c *= T::from_u32(n - m).unwrap();
    }
    c * powi_u(x, n - k)
}

impl<T: Real> Poly2<T> {
    pub fn new(terms: Vec<(u32, u32, T)>) -> Self {
        Self { terms }
    }

    pub fn zero() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn jet(&self, p1: T, p2: T) -> Jet2<T> {
        let mut j = Jet2 {
            value: T::zero(),
            grad: [T::zero(); 2],
            hess: [[T::zero(); 2]; 2],
        };
        for &(a, b, c) in &self.terms {
            let (x0, x1, x2) = (dpow(p1, a, 0), dpow(p1, a, 1), dpow(p1, a, 2));
            let (y0, y1, y2) = (dpow(p2, b, 0), dpow(p2, b, 1), dpow(p2, b, 2));
            j.value += c * x0 * y0;
            j.grad[0] += c * x1 * y0;
            j.grad[1] += c * x0 * y1;
            j.hess[0][0] += c * x2 * y0;
            j.hess[0][1] += c * x1 * y1;
            j.hess[1][1] += c * x0 * y2;
        }
        j.hess[1][0] = j.hess[0][1];
        j
    }

    pub fn eval(&self, p1: T, p2: T) -> T {
        self.terms
            .iter()
            .map(|&(a, b, c)| c * powi_u(p1, a) * powi_u(p2, b))
            .sum()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.2.is_zero())
    }

    pub fn cast<U: Real>(&self) -> Poly2<U> {
        Poly2 {
            terms: self
                .terms
                .iter()
                .map(|&(a, b, c)| (a, b, U::lit(c.to_f64_lossy())))
                .collect(),
        }
    }
}

/// Trivariate polynomial as a list of terms `c · p1^i p2^j p3^k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Poly3<T> {
    pub terms: Vec<(u32, u32, u32, T)>,
}

impl<T: Real> Poly3<T> {
    pub fn new(terms: Vec<(u32, u32, u32, T)>) -> Self {
        Self { terms }
    }

    pub fn zero() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn constant(c: T) -> Self {
        Self {
            terms: vec![(0, 0, 0, c)],
        }
    }

    pub fn eval(&self, p: &[T; 3]) -> T {
        self.terms
            .iter()
            .map(|&(a, b, d, c)| c * powi_u(p[0], a) * powi_u(p[1], b) * powi_u(p[2], d))
            .sum()
    }

    pub fn grad(&self, p: &[T; 3]) -> [T; 3] {
        let mut g = [T::zero(); 3];
        for &(a, b, d, c) in &self.terms {
            let (x0, y0, z0) = (powi_u(p[0], a), powi_u(p[1], b), powi_u(p[2], d));
            g[0] += c * dpow(p[0], a, 1) * y0 * z0;
            g[1] += c * x0 * dpow(p[1], b, 1) * z0;
            g[2] += c * x0 * y0 * dpow(p[2], d, 1);
        }
        g
    }

    /// Symbolic partial derivative with respect to variable `axis`.
    pub fn derivative(&self, axis: usize) -> Poly3<T> {
        let terms = self
            .terms
            .iter()
            .filter_map(|&(a, b, d, c)| {
                let e = [a, b, d][axis];
                if e == 0 || c.is_zero() {
                    return None;
                }
                let mut ex = [a, b, d];
                ex[axis] -= 1;
                Some((ex[0], ex[1], ex[2], c * T::from_u32(e).unwrap()))
            })
            .collect();
        Poly3 { terms }
    }

    pub fn add(&self, other: &Poly3<T>) -> Poly3<T> {
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&other.terms);
        Poly3 { terms }
    }

    pub fn scaled(&self, s: T) -> Poly3<T> {
        Poly3 {
            terms: self.terms.iter().map(|&(a, b, d, c)| (a, b, d, c * s)).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.3.is_zero())
    }

    pub fn cast<U: Real>(&self) -> Poly3<U> {
        Poly3 {
            terms: self
                .terms
                .iter()
                .map(|&(a, b, d, c)| (a, b, d, U::lit(c.to_f64_lossy())))
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn univariate_derivatives() {
        let p = Poly1::new(vec![1.0, -2.0, 0.5, 3.0]);
        let (v, d, dd) = p.eval2(0.7);
        let s = 0.7f64;
        assert!((v - (1.0 - 2.0 * s + 0.5 * s * s + 3.0 * s.powi(3))).abs() < 1e-14);
        assert!((d - (-2.0 + s + 9.0 * s * s)).abs() < 1e-14);
        assert!((dd - (1.0 + 18.0 * s)).abs() < 1e-14);
    }

    #[test]
    fn trivariate_derivative_matches_grad() {
        let q = Poly3::<f64>::new(vec![(2, 1, 0, 1.5), (0, 0, 3, -0.25), (1, 1, 1, 2.0)]);
        let p = [0.3, -0.4, 0.8];
        let g = q.grad(&p);
        for axis in 0..3 {
            assert!((q.derivative(axis).eval(&p) - g[axis]).abs() < 1e-14);
        }
    }
}
