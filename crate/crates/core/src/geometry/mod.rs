//! Localized support surface, the vector field `Q`, and derived scalars.
//!
//! Near the edge point the support surface is the graph `p3 = psi(p1, p2)`
//! over the disc of radius `r`, and its edge is the curve `p2 = gamma(p1)`
//! on that graph.

mod normalize;

pub use normalize::{normalize_chart, RawSupport, RigidMotion};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{Jet2, Poly1, Poly2, Poly3};
use crate::scalar::{lit, Real, Vec3};

/// Normalization tolerance for `gamma(0), gamma'(0), psi(0), grad psi(0)`.
pub const NORMALIZATION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportChart<T> {
    psi: Poly2<T>,
    gamma: Poly1<T>,
    radius: T,
    holder_grade: Option<T>,
}

impl<T: Real> SupportChart<T> {
    /// Builds a chart and checks the normalization at the origin.
    pub fn new(psi: Poly2<T>, gamma: Poly1<T>, radius: T) -> Result<Self> {
        let chart = Self::new_unchecked(psi, gamma, radius)?;
        chart.check_normalization()?;
        Ok(chart)
    }

    /// Builds a chart without the normalization check; only `radius > 0` is enforced.
    pub fn new_unchecked(psi: Poly2<T>, gamma: Poly1<T>, radius: T) -> Result<Self> {
        if !(radius > T::zero()) {
            return Err(Error::InvalidInput(format!(
                "chart radius must be positive, got {radius}"
            )));
        }
        Ok(Self {
            psi,
            gamma,
            radius,
            holder_grade: None,
        })
    }

    pub fn flat(radius: T) -> Self {
        Self::new(Poly2::zero(), Poly1::zero(), radius).expect("flat chart is normalized")
    }

    pub fn with_holder_grade(mut self, beta: T) -> Result<Self> {
        if !(beta > T::zero() && beta < T::one()) {
            return Err(Error::InvalidInput(format!("holder grade {beta} not in (0,1)")));
        }
        self.holder_grade = Some(beta);
        Ok(self)
    }

    pub fn check_normalization(&self) -> Result<()> {
        let tol = lit::<T>(NORMALIZATION_TOL);
        let (g0, dg0, _) = self.gamma.eval2(T::zero());
        let j = self.psi.jet(T::zero(), T::zero());
        let checks = [
            ("gamma(0)", g0),
            ("gamma'(0)", dg0),
            ("psi(0)", j.value),
            ("psi_p1(0)", j.grad[0]),
            ("psi_p2(0)", j.grad[1]),
        ];
        for (name, v) in checks {
            if v.abs() > tol {
                return Err(Error::Normalization(format!("{name} = {v}, expected 0")));
            }
        }
        Ok(())
    }

    pub fn psi(&self) -> &Poly2<T> {
        &self.psi
    }

    pub fn gamma(&self) -> &Poly1<T> {
        &self.gamma
    }

    pub fn radius(&self) -> T {
        self.radius
    }

    pub fn holder_grade(&self) -> Option<T> {
        self.holder_grade
    }

    pub fn contains(&self, p1: T, p2: T) -> bool {
        let r = self.radius * (T::one() + lit(1e-12));
        p1 * p1 + p2 * p2 <= r * r
    }

    fn ensure_inside(&self, p1: T, p2: T) -> Result<()> {
        if self.contains(p1, p2) && p1.is_finite() && p2.is_finite() {
            Ok(())
        } else {
            Err(Error::OutOfChart {
                p1: p1.to_f64_lossy(),
                p2: p2.to_f64_lossy(),
                radius: self.radius.to_f64_lossy(),
            })
        }
    }

    /// Value, gradient and Hessian of `psi`.
    pub fn eval_chart(&self, p1: T, p2: T) -> Result<Jet2<T>> {
        self.ensure_inside(p1, p2)?;
        Ok(self.psi.jet(p1, p2))
    }

    /// `gamma(s)`, `gamma'(s)`, `gamma''(s)`.
    pub fn eval_gamma(&self, s: T) -> Result<(T, T, T)> {
        if !(s.abs() <= self.radius * (T::one() + lit(1e-12))) {
            return Err(Error::OutOfChart {
                p1: s.to_f64_lossy(),
                p2: 0.0,
                radius: self.radius.to_f64_lossy(),
            });
        }
        Ok(self.gamma.eval2(s))
    }

    /// Upward unit normal `(-psi_p1, -psi_p2, 1) / sqrt(1 + |grad psi|^2)`.
    pub fn unit_normal(&self, p1: T, p2: T) -> Result<Vec3<T>> {
        let j = self.eval_chart(p1, p2)?;
        Ok(graph_normal(j.grad))
    }
}

pub(crate) fn graph_normal<T: Real>(grad: [T; 2]) -> Vec3<T> {
    let n = (T::one() + grad[0] * grad[0] + grad[1] * grad[1]).sqrt();
    [-grad[0] / n, -grad[1] / n, T::one() / n]
}

/// The field `Q` with symbolic divergence; `H = div Q / 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldQ<T> {
    components: [Poly3<T>; 3],
    div: Poly3<T>,
    holder_grade: Option<T>,
}

impl<T: Real> FieldQ<T> {
    pub fn new(q1: Poly3<T>, q2: Poly3<T>, q3: Poly3<T>) -> Self {
        let div = q1
            .derivative(0)
            .add(&q2.derivative(1))
            .add(&q3.derivative(2));
        Self {
            components: [q1, q2, q3],
            div,
            holder_grade: None,
        }
    }

    pub fn zero() -> Self {
        Self::new(Poly3::zero(), Poly3::zero(), Poly3::zero())
    }

    pub fn constant(q: Vec3<T>) -> Self {
        Self::new(
            Poly3::constant(q[0]),
            Poly3::constant(q[1]),
            Poly3::constant(q[2]),
        )
    }

    pub fn with_holder_grade(mut self, beta: T) -> Self {
        self.holder_grade = Some(beta);
        self
    }

    pub fn components(&self) -> &[Poly3<T>; 3] {
        &self.components
    }

    pub fn holder_grade(&self) -> Option<T> {
        self.holder_grade
    }

    pub fn eval(&self, p: &Vec3<T>) -> Vec3<T> {
        [
            self.components[0].eval(p),
            self.components[1].eval(p),
            self.components[2].eval(p),
        ]
    }

    /// Jacobian rows `dQ^i/dp^j`.
    pub fn jacobian(&self, p: &Vec3<T>) -> [[T; 3]; 3] {
        [
            self.components[0].grad(p),
            self.components[1].grad(p),
            self.components[2].grad(p),
        ]
    }

    pub fn div(&self, p: &Vec3<T>) -> T {
        self.div.eval(p)
    }

    /// Prescribed mean curvature `H = div Q / 2`.
    pub fn mean_curvature(&self, p: &Vec3<T>) -> T {
        self.div(p) * lit(0.5)
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(Poly3::is_zero)
    }
}

/// `q(p) = Q^3 - psi_p1 Q^1 - psi_p2 Q^2`.
pub fn eval_q<T: Real>(chart: &SupportChart<T>, field: &FieldQ<T>, p: &Vec3<T>) -> Result<T> {
    let j = chart.eval_chart(p[0], p[1])?;
    let q = field.eval(p);
    Ok(q[2] - j.grad[0] * q[0] - j.grad[1] * q[1])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransversalityReport<T> {
    pub q0: T,
    pub sample_count: usize,
    pub admissible: bool,
}

pub const DEFAULT_TRANSVERSALITY_SAMPLES: usize = 4096;

fn radical_inverse(mut n: usize, base: usize) -> f64 {
    let mut inv = 1.0 / base as f64;
    let mut x = 0.0;
    while n > 0 {
        x += (n % base) as f64 * inv;
        n /= base;
        inv /= base as f64;
    }
    x
}

/// Deterministic Halton points in the closed ball of radius `radius`,
/// starting with the center. Points are drawn from the enclosing cube and
/// rejected outside the ball.
pub fn ball_samples<T: Real>(radius: T, count: usize) -> Vec<Vec3<T>> {
    let mut out = Vec::with_capacity(count);
    if count == 0 {
        return out;
    }
    out.push([T::zero(); 3]);
    let mut n = 1usize;
    while out.len() < count {
        let c = [
            2.0 * radical_inverse(n, 2) - 1.0,
            2.0 * radical_inverse(n, 3) - 1.0,
            2.0 * radical_inverse(n, 5) - 1.0,
        ];
        n += 1;
        if c[0] * c[0] + c[1] * c[1] + c[2] * c[2] <= 1.0 {
            out.push([
                radius * lit(c[0]),
                radius * lit(c[1]),
                radius * lit(c[2]),
            ]);
        }
    }
    out
}

/// Estimates `q0 = sup |q|` over the chart ball by low-discrepancy sampling.
pub fn validate_transversality<T: Real>(
    chart: &SupportChart<T>,
    field: &FieldQ<T>,
    samples: usize,
) -> Result<TransversalityReport<T>> {
    if samples == 0 {
        return Err(Error::InvalidInput("need at least one sample".into()));
    }
    let mut q0 = T::zero();
    for p in ball_samples(chart.radius(), samples) {
        q0 = q0.max(eval_q(chart, field, &p)?.abs());
    }
    Ok(TransversalityReport {
        q0,
        sample_count: samples,
        admissible: q0 < T::one(),
    })
}
