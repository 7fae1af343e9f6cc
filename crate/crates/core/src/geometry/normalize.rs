//! Rigid normalization of a raw support surface around an edge point.
//!
//! After the motion, the base point sits at the origin, the surface normal
//! there is `e3` and the edge tangent is `e1`. The normalized `psi` and
//! `gamma` are the Taylor polynomials of the implicitly defined graph and
//! edge functions, computed exactly to the requested degree by fixed-point
//! iteration in truncated power-series arithmetic.

use serde::{Deserialize, Serialize};

use super::SupportChart;
use crate::error::{Error, Result};
use crate::poly::{Poly1, Poly2};
use crate::scalar::{cross3, dot3, lit, norm3, Real, Vec3};

/// Support surface in raw coordinates: graph `p3 = surface(p1, p2)`, edge
/// `p2 = edge(p1)`, surface side `p2 > edge(p1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawSupport<T> {
    pub surface: Poly2<T>,
    pub edge: Poly1<T>,
    /// Radius of the normalized chart.
    pub radius: T,
    /// Degree of the Taylor polynomials produced for `psi` and `gamma`.
    pub degree: usize,
}

/// `chart = rotation · (raw - translation)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidMotion<T> {
    pub rotation: [[T; 3]; 3],
    pub translation: Vec3<T>,
}

impl<T: Real> RigidMotion<T> {
    pub fn identity() -> Self {
        let (o, z) = (T::one(), T::zero());
        Self {
            rotation: [[o, z, z], [z, o, z], [z, z, o]],
            translation: [z; 3],
        }
    }

    pub fn apply(&self, raw: &Vec3<T>) -> Vec3<T> {
        let d = [
            raw[0] - self.translation[0],
            raw[1] - self.translation[1],
            raw[2] - self.translation[2],
        ];
        [
            dot3(&self.rotation[0], &d),
            dot3(&self.rotation[1], &d),
            dot3(&self.rotation[2], &d),
        ]
    }

    pub fn apply_inverse(&self, chart: &Vec3<T>) -> Vec3<T> {
        let mut out = self.translation;
        for (row, &c) in self.rotation.iter().zip(chart) {
            for k in 0..3 {
                out[k] += row[k] * c;
            }
        }
        out
    }
}

/// Truncated univariate power series.
#[derive(Debug, Clone)]
struct Series1<T> {
    c: Vec<T>,
}

impl<T: Real> Series1<T> {
    fn constant(deg: usize, v: T) -> Self {
        let mut c = vec![T::zero(); deg + 1];
        c[0] = v;
        Self { c }
    }
    fn var(deg: usize, v0: T) -> Self {
        let mut s = Self::constant(deg, v0);
        if deg >= 1 {
            s.c[1] = T::one();
        }
        s
    }
    fn deg(&self) -> usize {
        self.c.len() - 1
    }
    fn add(&self, o: &Self) -> Self {
        Self {
            c: self.c.iter().zip(&o.c).map(|(&a, &b)| a + b).collect(),
        }
    }
    fn scale(&self, s: T) -> Self {
        Self {
            c: self.c.iter().map(|&a| a * s).collect(),
        }
    }
    fn mul(&self, o: &Self) -> Self {
        let d = self.deg();
        let mut c = vec![T::zero(); d + 1];
        for i in 0..=d {
            if self.c[i].is_zero() {
                continue;
            }
            for j in 0..=(d - i) {
                c[i + j] += self.c[i] * o.c[j];
            }
        }
        Self { c }
    }
    /// `self(inner)` where `inner` has zero constant term.
    fn compose(&self, inner: &Self) -> Self {
        let d = self.deg();
        let mut acc = Self::constant(d, T::zero());
        for &a in self.c.iter().rev() {
            acc = acc.mul(inner);
            acc.c[0] += a;
        }
        acc
    }
}

/// Truncated bivariate power series, `c[i][j]` for `i + j <= deg`.
#[derive(Debug, Clone)]
struct Series2<T> {
    deg: usize,
    c: Vec<Vec<T>>,
}

impl<T: Real> Series2<T> {
    fn constant(deg: usize, v: T) -> Self {
        let mut c = vec![vec![T::zero(); deg + 1]; deg + 1];
        c[0][0] = v;
        Self { deg, c }
    }
    fn linear(deg: usize, c0: T, ca: T, cb: T) -> Self {
        let mut s = Self::constant(deg, c0);
        if deg >= 1 {
            s.c[1][0] = ca;
            s.c[0][1] = cb;
        }
        s
    }
    fn add(&self, o: &Self) -> Self {
        let mut r = self.clone();
        for i in 0..=self.deg {
            for j in 0..=(self.deg - i) {
                r.c[i][j] += o.c[i][j];
            }
        }
        r
    }
    fn scale(&self, s: T) -> Self {
        let mut r = self.clone();
        for row in &mut r.c {
            for v in row {
                *v *= s;
            }
        }
        r
    }
    fn mul(&self, o: &Self) -> Self {
        let d = self.deg;
        let mut r = Self::constant(d, T::zero());
        for i in 0..=d {
            for j in 0..=(d - i) {
                let a = self.c[i][j];
                if a.is_zero() {
                    continue;
                }
                for k in 0..=(d - i - j) {
                    for l in 0..=(d - i - j - k) {
                        r.c[i + k][j + l] += a * o.c[k][l];
                    }
                }
            }
        }
        r
    }
    fn pow(&self, n: u32) -> Self {
        let mut r = Self::constant(self.deg, T::one());
        for _ in 0..n {
            r = r.mul(self);
        }
        r
    }
}

fn eval_poly2_series<T: Real>(p: &Poly2<T>, x: &Series2<T>, y: &Series2<T>) -> Series2<T> {
    let mut acc = Series2::constant(x.deg, T::zero());
    for &(a, b, c) in &p.terms {
        acc = acc.add(&x.pow(a).mul(&y.pow(b)).scale(c));
    }
    acc
}

fn eval_poly2_series1<T: Real>(p: &Poly2<T>, x: &Series1<T>, y: &Series1<T>) -> Series1<T> {
    let d = x.deg();
    let mut acc = Series1::constant(d, T::zero());
    for &(a, b, c) in &p.terms {
        let mut term = Series1::constant(d, c);
        for _ in 0..a {
            term = term.mul(x);
        }
        for _ in 0..b {
            term = term.mul(y);
        }
        acc = acc.add(&term);
    }
    acc
}

fn eval_poly1_series<T: Real>(p: &Poly1<T>, x: &Series1<T>) -> Series1<T> {
    let d = x.deg();
    let mut acc = Series1::constant(d, T::zero());
    for &a in p.coeffs.iter().rev() {
        acc = acc.mul(x);
        acc.c[0] += a;
    }
    acc
}

/// Translates and rotates `raw` so that `basepoint` (on the raw edge) becomes
/// the origin of a normalized chart.
pub fn normalize_chart<T: Real>(
    raw: &RawSupport<T>,
    basepoint: &Vec3<T>,
) -> Result<(SupportChart<T>, RigidMotion<T>)> {
    let tol = lit::<T>(1e-10);
    let deg = raw.degree.max(2);
    let [b1, b2, b3] = *basepoint;
    let (g, gp, _) = raw.edge.eval2(b1);
    let fj = raw.surface.jet(b1, b2);
    if (b2 - g).abs() > tol || (b3 - fj.value).abs() > tol {
        return Err(Error::Normalization(format!(
            "base point ({b1}, {b2}, {b3}) does not lie on the raw edge"
        )));
    }
    let [fx, fy] = fj.grad;

    let nn = (T::one() + fx * fx + fy * fy).sqrt();
    let mut e3 = [-fx / nn, -fy / nn, T::one() / nn];
    let tau = [T::one(), gp, fx + fy * gp];
    let tn = norm3(&tau);
    let e1 = [tau[0] / tn, tau[1] / tn, tau[2] / tn];
    let mut e2 = cross3(&e3, &e1);
    if !tn.is_finite() || !nn.is_finite() || (norm3(&e2) - T::one()).abs() > lit(1e-8) {
        return Err(Error::Normalization(
            "degenerate tangent data at the base point".into(),
        ));
    }
    // e2 must point into the surface side p2 > edge(p1).
    if e2[1] - gp * e2[0] < T::zero() {
        e2 = [-e2[0], -e2[1], -e2[2]];
        e3 = [-e3[0], -e3[1], -e3[2]];
    }
    let motion = RigidMotion {
        rotation: [e1, e2, e3],
        translation: *basepoint,
    };

    // psi: solve raw3 - f(raw1, raw2) = 0 for t as a series in (a1, a2).
    let raw_coord = |k: usize, t: &Series2<T>| {
        Series2::linear(deg, basepoint[k], e1[k], e2[k]).add(&t.scale(e3[k]))
    };
    let dfdt = e3[2] - fx * e3[0] - fy * e3[1];
    if dfdt.abs() < lit(1e-12) {
        return Err(Error::Normalization("surface is vertical in the rotated frame".into()));
    }
    let mut t = Series2::constant(deg, T::zero());
    for _ in 0..(deg + 2) {
        let r1 = raw_coord(0, &t);
        let r2 = raw_coord(1, &t);
        let r3 = raw_coord(2, &t);
        let resid = r3.add(&eval_poly2_series(&raw.surface, &r1, &r2).scale(-T::one()));
        t = t.add(&resid.scale(-T::one() / dfdt));
    }
    let mut psi_terms = Vec::new();
    for i in 0..=deg {
        for j in 0..=(deg - i) {
            let c = t.c[i][j];
            if c != T::zero() {
                psi_terms.push((i as u32, j as u32, c));
            }
        }
    }

    // gamma: the raw edge parametrized by sigma = p1 - b1, rotated, then
    // reparametrized by its first chart coordinate.
    let sigma = Series1::var(deg, T::zero());
    let x1 = Series1::var(deg, b1);
    let x2 = eval_poly1_series(&raw.edge, &x1);
    let x3 = eval_poly2_series1(&raw.surface, &x1, &x2);
    let d = [
        x1.add(&Series1::constant(deg, -b1)),
        x2.add(&Series1::constant(deg, -b2)),
        x3.add(&Series1::constant(deg, -b3)),
    ];
    let chart_coord = |row: &Vec3<T>| d[0].scale(row[0]).add(&d[1].scale(row[1])).add(&d[2].scale(row[2]));
    let a1 = chart_coord(&e1);
    let a2 = chart_coord(&e2);
    let lead = a1.c[1];
    if lead.abs() < lit(1e-12) {
        return Err(Error::Normalization("edge tangent degenerates in the chart".into()));
    }
    let mut nonlinear = a1.clone();
    nonlinear.c[1] = T::zero();
    let mut inv = Series1::constant(deg, T::zero());
    for _ in 0..(deg + 2) {
        inv = sigma.add(&nonlinear.compose(&inv).scale(-T::one())).scale(T::one() / lead);
    }
    let gamma_series = a2.compose(&inv);

    let chart = SupportChart::new(
        Poly2::new(psi_terms),
        Poly1::new(gamma_series.c),
        raw.radius,
    )?;
    Ok((chart, motion))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(a: &Vec3<f64>, b: &Vec3<f64>, tol: f64) -> bool {
        (0..3).all(|k| (a[k] - b[k]).abs() <= tol)
    }

    #[test]
    fn normalized_flat_gives_identity() {
        let raw = RawSupport {
            surface: Poly2::zero(),
            edge: Poly1::zero(),
            radius: 1.0,
            degree: 6,
        };
        let (chart, m) = normalize_chart(&raw, &[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(m, RigidMotion::identity());
        assert!(chart.psi().is_zero());
        assert!(chart.gamma().is_zero());
    }

    #[test]
    fn inclined_plane_rotates_to_flat() {
        let raw = RawSupport {
            surface: Poly2::new(vec![(1, 0, 1.0)]),
            edge: Poly1::zero(),
            radius: 1.0,
            degree: 6,
        };
        let (chart, m) = normalize_chart(&raw, &[0.0, 0.0, 0.0]).unwrap();
        let s = 0.5f64.sqrt();
        assert!(close(&m.rotation[0], &[s, 0.0, s], 1e-15));
        assert!(close(&m.rotation[1], &[0.0, 1.0, 0.0], 1e-15));
        assert!(close(&m.rotation[2], &[-s, 0.0, s], 1e-15));
        for &(_, _, c) in &chart.psi().terms {
            assert!(c.abs() < 1e-14);
        }
        assert!(chart.gamma().coeffs.iter().all(|c| c.abs() < 1e-14));
        // Round trip of raw plane points.
        for &(p1, p2) in &[(0.3, 0.2), (-0.4, 0.1), (0.0, 0.5)] {
            let raw_p = [p1, p2, p1];
            let c = m.apply(&raw_p);
            assert!(c[2].abs() < 1e-14);
            assert!(close(&m.apply_inverse(&c), &raw_p, 1e-14));
        }
    }

    #[test]
    fn base_point_off_edge_is_rejected() {
        let raw = RawSupport {
            surface: Poly2::zero(),
            edge: Poly1::zero(),
            radius: 1.0,
            degree: 6,
        };
        assert!(matches!(
            normalize_chart(&raw, &[0.0, 0.3, 0.0]),
            Err(Error::Normalization(_))
        ));
    }

    #[test]
    fn random_quadratic_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let mut u = || rng.gen_range(-0.5..0.5);
            let surface = Poly2::new(vec![
                (0, 0, u()),
                (1, 0, u()),
                (0, 1, u()),
                (2, 0, u()),
                (1, 1, u()),
                (0, 2, u()),
            ]);
            let edge = Poly1::new(vec![u(), u(), u()]);
            let b1 = u();
            let b2 = edge.eval(b1);
            let b3 = surface.eval(b1, b2);
            let raw = RawSupport {
                surface: surface.clone(),
                edge: edge.clone(),
                radius: 0.15,
                degree: 16,
            };
            let (chart, m) = normalize_chart(&raw, &[b1, b2, b3]).unwrap();
            chart.check_normalization().unwrap();
            let r = chart.radius();
            for k in 0..100 {
                let ang = k as f64 * 0.7;
                let rad = r * ((k % 10) as f64 + 0.5) / 10.0;
                let (a1, a2) = (rad * ang.cos(), rad * ang.sin());
                let p = [a1, a2, chart.psi().eval(a1, a2)];
                let q = m.apply_inverse(&p);
                assert!((q[2] - surface.eval(q[0], q[1])).abs() < 1e-10);
                // The chart edge maps onto the raw edge.
                let s = rad * if k % 2 == 0 { 1.0 } else { -1.0 };
                let g = chart.gamma().eval(s);
                let e = m.apply_inverse(&[s, g, chart.psi().eval(s, g)]);
                assert!((e[1] - edge.eval(e[0])).abs() < 1e-10);
                assert!((e[2] - surface.eval(e[0], e[1])).abs() < 1e-10);
            }
            // The chart side maps into the raw surface side.
            let inside = m.apply_inverse(&[0.0, 0.05, chart.psi().eval(0.0, 0.05)]);
            assert!(inside[1] > edge.eval(inside[0]));
        }
    }
}
