//! Complex transform pipeline: the auxiliary functions `z^1, z^2, z^3`, the
//! matrices `A, b, B, C`, reflection across `I`, and the algebraic
//! identities relating them.

mod reflect;

pub use reflect::{node_z_field, reflect, wirtinger_bar_residual, ReflectedField, WbarReport};

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{eval_q, FieldQ, SupportChart};
use crate::linalg::inverse3;
use crate::scalar::{cross3, dot3, lit, Real, Vec3};
use crate::solver::{element_gradients, wirtinger_derivative, DiscreteMap, Where};

type C<T> = Complex<T>;

fn re<T: Real>(x: T) -> C<T> {
    Complex::new(x, T::zero())
}

fn im<T: Real>(x: T) -> C<T> {
    Complex::new(T::zero(), x)
}

/// Chart quantities entering the matrices at a point `p` of the chart.
#[derive(Debug, Clone, Copy)]
struct Local<T> {
    p1d: T,
    p2d: T,
    dg: T,
    q: T,
}

fn local<T: Real>(chart: &SupportChart<T>, field: &FieldQ<T>, p: &Vec3<T>) -> Result<Local<T>> {
    let j = chart.eval_chart(p[0], p[1])?;
    let (_, dg, _) = chart.eval_gamma(p[0])?;
    Ok(Local {
        p1d: j.grad[0],
        p2d: j.grad[1],
        dg,
        q: eval_q(chart, field, p)?,
    })
}

/// Per-point complex data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexFrame<T> {
    pub x_w: [C<T>; 3],
    /// `(z^1, z^2, z^3)` from the componentwise definitions.
    pub zeta: [C<T>; 3],
    /// `B x_w`, the matrix route to the same vector.
    pub zeta_matrix: [C<T>; 3],
    pub a: [[C<T>; 2]; 2],
    pub b: [C<T>; 2],
    pub bmat: [[C<T>; 3]; 3],
    /// Closed-form `C`.
    pub c: [[T; 3]; 3],
    pub det_a: C<T>,
    pub det_b: C<T>,
}

/// `A = [[-i psi_1, i], [1 - i q g', psi_1 + psi_2 g']]`,
/// `b = [-i psi_2, g' + i q]`.
pub fn assemble_a_b<T: Real>(
    chart: &SupportChart<T>,
    field: &FieldQ<T>,
    p: &Vec3<T>,
) -> Result<([[C<T>; 2]; 2], [C<T>; 2])> {
    let l = local(chart, field, p)?;
    let a = [
        [im(-l.p1d), im(T::one())],
        [Complex::new(T::one(), -l.q * l.dg), re(l.p1d + l.p2d * l.dg)],
    ];
    let b = [im(-l.p2d), Complex::new(l.dg, l.q)];
    Ok((a, b))
}

pub fn det2<T: Real>(a: &[[C<T>; 2]; 2]) -> C<T> {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

/// Determinant by cofactor expansion along the first row.
pub fn det3<T: Real>(m: &[[C<T>; 3]; 3]) -> C<T> {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BAssembly<T> {
    pub b: [[C<T>; 3]; 3],
    pub det_direct: C<T>,
    /// `i (1 + g'^2)(1 - q^2 + |grad psi|^2)`.
    pub det_closed: C<T>,
}

fn b_matrix<T: Real>(l: &Local<T>) -> [[C<T>; 3]; 3] {
    let one = T::one();
    [
        [im(-l.p1d), im(-l.p2d), im(one)],
        [Complex::new(one, -l.q * l.dg), Complex::new(l.dg, l.q), re(l.p1d + l.p2d * l.dg)],
        [Complex::new(-l.dg, -l.q), Complex::new(one, -l.q * l.dg), re(l.p2d - l.p1d * l.dg)],
    ]
}

fn det_b_closed<T: Real>(l: &Local<T>) -> C<T> {
    let g = T::one() + l.dg * l.dg;
    let d = T::one() - l.q * l.q + l.p1d * l.p1d + l.p2d * l.p2d;
    im(g * d)
}

/// The matrix with `zeta = B x_w`, its determinant by cofactors, and the
/// closed form of the determinant.
pub fn assemble_b<T: Real>(chart: &SupportChart<T>, field: &FieldQ<T>, p: &Vec3<T>) -> Result<BAssembly<T>> {
    let l = local(chart, field, p)?;
    if l.q.abs() >= T::one() {
        return Err(Error::Transversality { q0: l.q.abs().to_f64_lossy() });
    }
    let b = b_matrix(&l);
    Ok(BAssembly {
        b,
        det_direct: det3(&b),
        det_closed: det_b_closed(&l),
    })
}

fn c_closed<T: Real>(l: &Local<T>) -> [[T; 3]; 3] {
    let one = T::one();
    let g = one + l.dg * l.dg;
    let d = one - l.q * l.q + l.p1d * l.p1d + l.p2d * l.p2d;
    let s = l.p2d - l.p1d * l.dg;
    let e = l.p1d + l.p2d * l.dg;
    let c11 = -(one - l.q * l.q) / d;
    let c12 = l.q * s / (g * d);
    let c13 = -l.q * e / (g * d);
    let c22 = (g + s * s) / (g * g * d);
    let c23 = -e * s / (g * g * d);
    let c33 = (g + e * e) / (g * g * d);
    [[c11, c12, c13], [c12, c22, c23], [c13, c23, c33]]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CAssembly<T> {
    pub closed: [[T; 3]; 3],
    /// `B^{-T} B^{-1}` from a numerical inverse.
    pub direct: [[C<T>; 3]; 3],
}

pub fn assemble_c<T: Real>(chart: &SupportChart<T>, field: &FieldQ<T>, p: &Vec3<T>) -> Result<CAssembly<T>> {
    let l = local(chart, field, p)?;
    let inv = inverse3(&b_matrix(&l))?;
    let zero = re(T::zero());
    let mut direct = [[zero; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                direct[i][j] = direct[i][j] + inv[k][i] * inv[k][j];
            }
        }
    }
    Ok(CAssembly {
        closed: c_closed(&l),
        direct,
    })
}

fn zeta_components<T: Real>(l: &Local<T>, xw: &[C<T>; 3]) -> [C<T>; 3] {
    let one = T::one();
    let z1 = im(-l.p1d) * xw[0] + im(-l.p2d) * xw[1] + im(one) * xw[2];
    let z2 = Complex::new(one, -l.q * l.dg) * xw[0]
        + Complex::new(l.dg, l.q) * xw[1]
        + re(l.p1d + l.p2d * l.dg) * xw[2];
    let z3 = -Complex::new(l.dg, l.q) * xw[0]
        + Complex::new(one, -l.q * l.dg) * xw[1]
        + re(l.p2d - l.p1d * l.dg) * xw[2];
    [z1, z2, z3]
}

/// Complex frame at a chart point `p` for a given `x_w`.
pub fn frame_at<T: Real>(
    chart: &SupportChart<T>,
    field: &FieldQ<T>,
    p: &Vec3<T>,
    x_w: [C<T>; 3],
) -> Result<ComplexFrame<T>> {
    let l = local(chart, field, p)?;
    let (a, b) = assemble_a_b(chart, field, p)?;
    let bmat = b_matrix(&l);
    let zero = re(T::zero());
    let mut zm = [zero; 3];
    for i in 0..3 {
        for k in 0..3 {
            zm[i] = zm[i] + bmat[i][k] * x_w[k];
        }
    }
    Ok(ComplexFrame {
        x_w,
        zeta: zeta_components(&l, &x_w),
        zeta_matrix: zm,
        a,
        b,
        bmat,
        c: c_closed(&l),
        det_a: det2(&a),
        det_b: det3(&bmat),
    })
}

/// Map value (interpolated if needed) at an evaluation site.
pub(crate) fn value_at<T: Real>(map: &DiscreteMap<T>, at: Where<T>) -> Result<Vec3<T>> {
    let m = &map.mesh.mesh;
    Ok(match at {
        Where::Node(n) => *map
            .values
            .get(n)
            .ok_or_else(|| Error::InvalidInput(format!("no node {n}")))?,
        Where::Element(t) => {
            let tri = m
                .triangles
                .get(t)
                .ok_or_else(|| Error::InvalidInput(format!("no triangle {t}")))?;
            let third = lit::<T>(1.0 / 3.0);
            [0, 1, 2].map(|k| (map.values[tri[0]][k] + map.values[tri[1]][k] + map.values[tri[2]][k]) * third)
        }
        Where::Point(p) => {
            let (t, b) = m.locate_nearest(p).ok_or(Error::OutsideDomain {
                u: p[0].to_f64_lossy(),
                v: p[1].to_f64_lossy(),
            })?;
            let tri = m.triangles[t];
            [0, 1, 2].map(|k| b[0] * map.values[tri[0]][k] + b[1] * map.values[tri[1]][k] + b[2] * map.values[tri[2]][k])
        }
    })
}

/// Complex frame of a discrete map at an evaluation site.
pub fn compute_zeta<T: Real>(
    map: &DiscreteMap<T>,
    chart: &SupportChart<T>,
    field: &FieldQ<T>,
    at: Where<T>,
) -> Result<ComplexFrame<T>> {
    let xw = wirtinger_derivative(map, at)?;
    let x = value_at(map, at)?;
    frame_at(chart, field, &x, xw)
}

/// `|2 Im z^2 + flux - (Q^2 - g' Q^1)(x^3_u - psi_1 x^1_u - psi_2 x^2_u)|`
/// where `flux = <t, x_v + Q x x_u>` and `t = (1, g', psi_1 + psi_2 g')`.
pub fn flux_identity_residual<T: Real>(
    chart: &SupportChart<T>,
    field: &FieldQ<T>,
    p: &Vec3<T>,
    x_u: &Vec3<T>,
    x_v: &Vec3<T>,
) -> Result<T> {
    let l = local(chart, field, p)?;
    let half = lit::<T>(0.5);
    let xw = [0, 1, 2].map(|k| Complex::new(x_u[k] * half, -x_v[k] * half));
    let z2 = zeta_components(&l, &xw)[1];
    let q = field.eval(p);
    let t = [T::one(), l.dg, l.p1d + l.p2d * l.dg];
    let qxu = cross3(&q, x_u);
    let flux = dot3(&t, &[0, 1, 2].map(|k| x_v[k] + qxu[k]));
    let corr = (q[1] - l.dg * q[0]) * (x_u[2] - l.p1d * x_u[0] - l.p2d * x_u[1]);
    Ok((z2.im + z2.im + flux - corr).abs())
}

/// Flux identity residual of a discrete map on a triangle.
pub fn verify_flux_identity<T: Real>(
    map: &DiscreteMap<T>,
    chart: &SupportChart<T>,
    field: &FieldQ<T>,
    triangle: usize,
) -> Result<T> {
    let grads = element_gradients(map);
    let (xu, xv) = grads
        .get(triangle)
        .ok_or_else(|| Error::InvalidInput(format!("no triangle {triangle}")))?;
    let x = value_at(map, Where::Element(triangle))?;
    flux_identity_residual(chart, field, &x, xu, xv)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticFormCheck<T> {
    /// `<zeta, C zeta>` (bilinear, no conjugation).
    pub form: C<T>,
    /// `<x_w, x_w>`.
    pub xw_form: C<T>,
    /// Left minus right side of the completed-square identity.
    pub sides_difference: C<T>,
    /// `sides_difference - form / c33`, zero for arbitrary `zeta`.
    pub rearranged_residual: C<T>,
}

pub fn quadratic_form_check<T: Real>(frame: &ComplexFrame<T>) -> QuadraticFormCheck<T> {
    quadratic_form_parts(&frame.c, &frame.zeta, &frame.x_w)
}

/// Same as [`quadratic_form_check`] for arbitrary `C`, `zeta` and `x_w`.
pub fn quadratic_form_parts<T: Real>(c: &[[T; 3]; 3], z: &[C<T>; 3], xw: &[C<T>; 3]) -> QuadraticFormCheck<T> {
    let zero = re(T::zero());
    let mut form = zero;
    for j in 0..3 {
        for k in 0..3 {
            form = form + z[j] * z[k] * c[j][k];
        }
    }
    let xw_form = xw[0] * xw[0] + xw[1] * xw[1] + xw[2] * xw[2];
    let c33 = c[2][2];
    let lin = z[0] * (c[0][2] / c33) + z[1] * (c[1][2] / c33);
    let lhs = (z[2] + lin) * (z[2] + lin);
    let mut quad = zero;
    for j in 0..2 {
        for k in 0..2 {
            quad = quad + z[j] * z[k] * (c[j][k] / c33);
        }
    }
    let rhs = lin * lin - quad;
    let diff = lhs - rhs;
    QuadraticFormCheck {
        form,
        xw_form,
        sides_difference: diff,
        rearranged_residual: diff - form / c33,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientEquivalence<T> {
    /// Per-triangle `|(z^1, z^2)| / |grad x|`; `None` at branch candidates.
    pub ratios: Vec<Option<T>>,
    pub min_ratio: T,
    pub max_ratio: T,
    /// Smallest `c` with all ratios in `[1/c, c]`.
    pub constant: T,
    /// Triangles with `|grad x|` below `1e-8` of the maximum.
    pub branch_candidates: Vec<usize>,
}

/// Ratio `|(z^1, z^2)| / |grad x|` at one site, `None` if the gradient
/// vanishes.
pub fn gradient_ratio<T: Real>(
    map: &DiscreteMap<T>,
    chart: &SupportChart<T>,
    field: &FieldQ<T>,
    at: Where<T>,
) -> Result<Option<T>> {
    let f = compute_zeta(map, chart, field, at)?;
    let grad = f.x_w.iter().map(|c| c.norm_sqr()).sum::<T>() * lit(4.0);
    if grad.is_zero() {
        return Ok(None);
    }
    let z = (f.zeta[0].norm_sqr() + f.zeta[1].norm_sqr()).sqrt();
    Ok(Some(z / grad.sqrt()))
}

/// Ratio statistics over all triangles.
pub fn gradient_equivalence<T: Real>(
    map: &DiscreteMap<T>,
    chart: &SupportChart<T>,
    field: &FieldQ<T>,
) -> Result<GradientEquivalence<T>> {
    let grads = element_gradients(map);
    let norms: Vec<T> = grads
        .iter()
        .map(|(u, v)| (dot3(u, u) + dot3(v, v)).sqrt())
        .collect();
    let gmax = norms.iter().fold(T::zero(), |m, &v| m.max(v));
    let floor = gmax * lit(1e-8);
    let mut ratios = Vec::with_capacity(norms.len());
    let mut branch = Vec::new();
    let (mut lo, mut hi) = (T::infinity(), T::zero());
    let half = lit::<T>(0.5);
    for (t, (&g, (xu, xv))) in norms.iter().zip(&grads).enumerate() {
        if g <= floor || g.is_zero() {
            branch.push(t);
            ratios.push(None);
            continue;
        }
        let x = value_at(map, Where::Element(t))?;
        let l = local(chart, field, &x)?;
        let xw = [0, 1, 2].map(|k| Complex::new(xu[k] * half, -xv[k] * half));
        let z = zeta_components(&l, &xw);
        let r = (z[0].norm_sqr() + z[1].norm_sqr()).sqrt() / g;
        lo = lo.min(r);
        hi = hi.max(r);
        ratios.push(Some(r));
    }
    let constant = if hi > T::zero() { hi.max(T::one() / lo) } else { T::infinity() };
    Ok(GradientEquivalence {
        ratios,
        min_ratio: lo,
        max_ratio: hi,
        constant,
        branch_candidates: branch,
    })
}

#[cfg(test)]
mod tests;
