use num_complex::Complex;
use rayon::prelude::*;

use super::DiscreteMap;
use crate::error::{Error, Result};
use crate::geometry::{FieldQ, SupportChart};
use crate::mesh::NodeTag;
use crate::scalar::{cross3, dot3, lit, Real, Vec3};

/// Evaluation site for derivatives of a discrete map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Where<T> {
    Node(usize),
    Element(usize),
    Point([T; 2]),
}

pub(crate) fn element_du_dv<T: Real>(
    grads: &[[T; 2]; 3],
    xs: &[Vec3<T>; 3],
) -> (Vec3<T>, Vec3<T>) {
    // Differences against node 0 keep constant maps exactly stationary.
    let mut xu = [T::zero(); 3];
    let mut xv = [T::zero(); 3];
    for a in 1..3 {
        for k in 0..3 {
            let d = xs[a][k] - xs[0][k];
            xu[k] += d * grads[a][0];
            xv[k] += d * grads[a][1];
        }
    }
    (xu, xv)
}

fn element_values<T: Real>(map: &DiscreteMap<T>, t: usize) -> [Vec3<T>; 3] {
    map.mesh.mesh.triangles[t].map(|n| map.values[n])
}

/// Per-triangle `(x_u, x_v)`.
pub fn element_gradients<T: Real>(map: &DiscreteMap<T>) -> Vec<(Vec3<T>, Vec3<T>)> {
    let m = &map.mesh.mesh;
    (0..m.triangle_count())
        .into_par_iter()
        .map(|t| element_du_dv(&m.grads[t], &element_values(map, t)))
        .collect()
}

/// Area-weighted average of the element gradients around each node.
pub fn nodal_gradients<T: Real>(map: &DiscreteMap<T>) -> Vec<(Vec3<T>, Vec3<T>)> {
    let m = &map.mesh.mesh;
    let elems = element_gradients(map);
    let mut acc = vec![([T::zero(); 3], [T::zero(); 3], T::zero()); m.node_count()];
    for (t, tri) in m.triangles.iter().enumerate() {
        let a = m.areas[t];
        for &n in tri {
            for k in 0..3 {
                acc[n].0[k] += a * elems[t].0[k];
                acc[n].1[k] += a * elems[t].1[k];
            }
            acc[n].2 += a;
        }
    }
    acc.into_iter()
        .map(|(u, v, a)| (u.map(|x| x / a), v.map(|x| x / a)))
        .collect()
}

/// `x_w = (x_u - i x_v) / 2`.
pub fn wirtinger_derivative<T: Real>(map: &DiscreteMap<T>, at: Where<T>) -> Result<[Complex<T>; 3]> {
    let m = &map.mesh.mesh;
    let (xu, xv) = match at {
        Where::Element(t) => {
            if t >= m.triangle_count() {
                return Err(Error::InvalidInput(format!("no triangle {t}")));
            }
            element_du_dv(&m.grads[t], &element_values(map, t))
        }
        Where::Node(n) => {
            if n >= m.node_count() {
                return Err(Error::InvalidInput(format!("no node {n}")));
            }
            let mut xu = [T::zero(); 3];
            let mut xv = [T::zero(); 3];
            let mut area = T::zero();
            for (t, tri) in m.triangles.iter().enumerate() {
                if tri.contains(&n) {
                    let (u, v) = element_du_dv(&m.grads[t], &element_values(map, t));
                    for k in 0..3 {
                        xu[k] += m.areas[t] * u[k];
                        xv[k] += m.areas[t] * v[k];
                    }
                    area += m.areas[t];
                }
            }
            (xu.map(|x| x / area), xv.map(|x| x / area))
        }
        Where::Point(p) => {
            let inside = p[1] >= lit(-1e-12) && p[0] * p[0] + p[1] * p[1] <= lit(1.0 + 1e-12);
            let hit = if inside { m.locate_nearest(p) } else { None };
            let (t, _) = hit.ok_or(Error::OutsideDomain {
                u: p[0].to_f64_lossy(),
                v: p[1].to_f64_lossy(),
            })?;
            element_du_dv(&m.grads[t], &element_values(map, t))
        }
    };
    let half = lit::<T>(0.5);
    Ok([0, 1, 2].map(|k| Complex::new(xu[k] * half, -xv[k] * half)))
}

fn element_energy<T: Real>(field: &FieldQ<T>, w: T, grads: &[[T; 2]; 3], xs: &[Vec3<T>; 3]) -> T {
    let (xu, xv) = element_du_dv(grads, xs);
    let mut e = (dot3(&xu, &xu) + dot3(&xv, &xv)) * lit(0.5);
    if !field.is_zero() {
        let third = lit::<T>(1.0 / 3.0);
        let c = [0, 1, 2].map(|k| (xs[0][k] + xs[1][k] + xs[2][k]) * third);
        e += dot3(&field.eval(&c), &cross3(&xu, &xv));
    }
    w * e
}

/// Gradient of the element Dirichlet energy with respect to its nodal values.
pub(crate) fn element_dirichlet_gradient<T: Real>(
    w: T,
    grads: &[[T; 2]; 3],
    xs: &[Vec3<T>; 3],
) -> [Vec3<T>; 3] {
    let (xu, xv) = element_du_dv(grads, xs);
    let mut out = [[T::zero(); 3]; 3];
    for a in 0..3 {
        for k in 0..3 {
            out[a][k] = w * (grads[a][0] * xu[k] + grads[a][1] * xv[k]);
        }
    }
    out
}

/// Gradient of the element term `w <Q(centroid), x_u x x_v>`.
pub(crate) fn element_q_gradient<T: Real>(
    field: &FieldQ<T>,
    w: T,
    grads: &[[T; 2]; 3],
    xs: &[Vec3<T>; 3],
) -> [Vec3<T>; 3] {
    let mut out = [[T::zero(); 3]; 3];
    if field.is_zero() {
        return out;
    }
    let (xu, xv) = element_du_dv(grads, xs);
    let third = lit::<T>(1.0 / 3.0);
    let c = [0, 1, 2].map(|k| (xs[0][k] + xs[1][k] + xs[2][k]) * third);
    let q = field.eval(&c);
    let jq = field.jacobian(&c);
    let n = cross3(&xu, &xv);
    let vq = cross3(&xv, &q);
    let qu = cross3(&q, &xu);
    // jq[i][j] = dQ^i/dp^j
    let mut jtn = [T::zero(); 3];
    for j in 0..3 {
        for i in 0..3 {
            jtn[j] += jq[i][j] * n[i];
        }
    }
    for a in 0..3 {
        for k in 0..3 {
            out[a][k] = w * (jtn[k] * third + grads[a][0] * vq[k] + grads[a][1] * qu[k]);
        }
    }
    out
}

pub(crate) fn element_gradient<T: Real>(
    field: &FieldQ<T>,
    w: T,
    grads: &[[T; 2]; 3],
    xs: &[Vec3<T>; 3],
) -> [Vec3<T>; 3] {
    let mut out = element_dirichlet_gradient(w, grads, xs);
    let q = element_q_gradient(field, w, grads, xs);
    for a in 0..3 {
        for k in 0..3 {
            out[a][k] += q[a][k];
        }
    }
    out
}

/// Discrete `E_Q`: linear elements, midpoint rule for the `Q` term, weights
/// including arc segments.
pub fn energy<T: Real>(map: &DiscreteMap<T>, field: &FieldQ<T>) -> T {
    let hm = &map.mesh;
    let parts: Vec<T> = (0..hm.mesh.triangle_count())
        .into_par_iter()
        .map(|t| element_energy(field, hm.weights[t], &hm.mesh.grads[t], &element_values(map, t)))
        .collect();
    parts.into_iter().sum()
}

/// Unconstrained gradient of the discrete energy at every node.
pub fn euclidean_gradient<T: Real>(map: &DiscreteMap<T>, field: &FieldQ<T>) -> Vec<Vec3<T>> {
    let hm = &map.mesh;
    let parts: Vec<[Vec3<T>; 3]> = (0..hm.mesh.triangle_count())
        .into_par_iter()
        .map(|t| element_gradient(field, hm.weights[t], &hm.mesh.grads[t], &element_values(map, t)))
        .collect();
    let mut g = vec![[T::zero(); 3]; hm.node_count()];
    for (tri, part) in hm.mesh.triangles.iter().zip(&parts) {
        for a in 0..3 {
            for k in 0..3 {
                g[tri[a]][k] += part[a][k];
            }
        }
    }
    g
}

/// Default slack below which an I-node counts as touching the edge.
pub(crate) const ACTIVE_TOL: f64 = 1e-12;

/// Unit edge tangent and inward conormal (tangent to the support surface,
/// pointing away from the edge) at chart abscissa `a`.
pub(crate) fn edge_frame<T: Real>(chart: &SupportChart<T>, a: T) -> Result<(Vec3<T>, Vec3<T>)> {
    let (g, dg, _) = chart.eval_gamma(a)?;
    let j = chart.eval_chart(a, g)?;
    let tau = [T::one(), dg, j.grad[0] + j.grad[1] * dg];
    let tn = dot3(&tau, &tau).sqrt();
    let tau = tau.map(|x| x / tn);
    let n = crate::geometry::graph_normal(j.grad);
    let mut nu = cross3(&n, &tau);
    // Inward means increasing p2 - gamma(p1).
    if nu[1] - dg * nu[0] < T::zero() {
        nu = nu.map(|x| -x);
    }
    Ok((tau, nu))
}

/// Gradient with the boundary reduction: zero on arc nodes, projected to
/// the tangent plane of the support surface on I-nodes, and with the
/// outward-blocked conormal part removed at nodes touching the edge.
pub fn energy_gradient<T: Real>(
    map: &DiscreteMap<T>,
    field: &FieldQ<T>,
    chart: &SupportChart<T>,
) -> Result<Vec<Vec3<T>>> {
    let mut g = euclidean_gradient(map, field);
    for (k, tag) in map.tags().iter().enumerate() {
        match tag {
            NodeTag::Interior => {}
            NodeTag::Arc | NodeTag::Corner => g[k] = [T::zero(); 3],
            NodeTag::ISegment => {
                let x = map.values[k];
                let n = chart.unit_normal(x[0], x[1])?;
                let gn = dot3(&g[k], &n);
                let mut gt = [0, 1, 2].map(|i| g[k][i] - gn * n[i]);
                let (gam, _, _) = chart.eval_gamma(x[0])?;
                if x[1] - gam <= lit(ACTIVE_TOL) {
                    let (_, nu) = edge_frame(chart, x[0])?;
                    let gnu = dot3(&gt, &nu);
                    if gnu > T::zero() {
                        gt = [0, 1, 2].map(|i| gt[i] - gnu * nu[i]);
                    }
                }
                g[k] = gt;
            }
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_halfdisc_mesh;
    use crate::poly::{Poly1, Poly2, Poly3};
    use crate::solver::ArcData;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn mesh(n: usize, g: f64) -> Arc<crate::mesh::HalfDiscMesh<f64>> {
        Arc::new(build_halfdisc_mesh(n, g).unwrap())
    }

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn wirtinger_of_linear_maps() {
        let m = mesh(6, 2.0);
        let a = DiscreteMap::from_fn(m.clone(), |u, v| [u, -v, 0.0]);
        let b = DiscreteMap::from_fn(m.clone(), |u, v| [u, v, 0.0]);
        for at in [Where::Node(0), Where::Node(17), Where::Element(5), Where::Point([0.2, 0.3])] {
            let xa = wirtinger_derivative(&a, at).unwrap();
            let xb = wirtinger_derivative(&b, at).unwrap();
            for (x, e) in xa.iter().zip([c(0.5, 0.0), c(0.0, 0.5), c(0.0, 0.0)]) {
                assert!((x - e).norm() < 1e-14);
            }
            for (x, e) in xb.iter().zip([c(0.5, 0.0), c(0.0, -0.5), c(0.0, 0.0)]) {
                assert!((x - e).norm() < 1e-14);
            }
        }
        assert!(matches!(
            wirtinger_derivative(&a, Where::Point([0.0, -0.2])),
            Err(Error::OutsideDomain { .. })
        ));
    }

    #[test]
    fn wirtinger_of_square_is_first_order() {
        // x1 + i x2 = w^2, so (x1 + i x2)_w = 2w.
        let mut errs = Vec::new();
        for n in [8, 16, 32] {
            let m = mesh(n, 1.0);
            let map = DiscreteMap::from_fn(m.clone(), |u, v| [u * u - v * v, 2.0 * u * v, 0.0]);
            let mut worst = 0.0f64;
            for t in 0..m.mesh.triangle_count() {
                let xw = wirtinger_derivative(&map, Where::Element(t)).unwrap();
                let ctr = m.mesh.centroid(t);
                let exact = 2.0 * c(ctr[0], ctr[1]);
                let got = xw[0] + c(0.0, 1.0) * xw[1];
                worst = worst.max((got - exact).norm());
            }
            errs.push(worst);
        }
        assert!(errs[0] / errs[1] > 1.6 && errs[1] / errs[2] > 1.6, "{errs:?}");
        assert!(errs[2] < 0.2);
    }

    #[test]
    fn energy_of_reference_maps() {
        let m = mesh(64, 2.0);
        let field = FieldQ::zero();
        let a = DiscreteMap::from_fn(m.clone(), |u, v| [u, -v, 0.0]);
        assert!((energy(&a, &field) - PI / 2.0).abs() < 1e-6);
        let b = DiscreteMap::from_fn(m.clone(), |u, v| [u, v, 0.0]);
        assert!((energy(&b, &field) - PI / 2.0).abs() < 1e-6);
        let k = DiscreteMap::from_fn(m.clone(), |_, _| [0.3, -1.0, 2.0]);
        assert_eq!(energy(&k, &FieldQ::constant([0.1, 0.2, 0.3])), 0.0);
    }

    fn curved_setup() -> (SupportChart<f64>, FieldQ<f64>) {
        let chart = SupportChart::new(
            Poly2::new(vec![(2, 0, 0.1), (0, 2, -0.1)]),
            Poly1::new(vec![0.0, 0.0, 0.2]),
            2.0,
        )
        .unwrap();
        let field = FieldQ::new(
            Poly3::new(vec![(0, 1, 0, 0.1), (2, 0, 0, 0.05)]),
            Poly3::new(vec![(1, 0, 0, -0.1)]),
            Poly3::new(vec![(0, 0, 0, 0.3), (0, 0, 1, 0.1), (1, 1, 1, 0.07)]),
        );
        (chart, field)
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let (_, field) = curved_setup();
        let m = mesh(6, 1.5);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let base = DiscreteMap::from_fn(m.clone(), |u, v| [u + 0.1 * v * v, 0.2 - 0.6 * v, 0.1 * u * v]);
        let mut map = base.clone();
        for x in &mut map.values {
            for k in 0..3 {
                x[k] += rng.gen_range(-0.05..0.05);
            }
        }
        let g = euclidean_gradient(&map, &field);
        let h = 1e-6;
        for _ in 0..20 {
            let dir: Vec<[f64; 3]> = (0..m.node_count())
                .map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
                .collect();
            let shifted = |s: f64| {
                let mut p = map.clone();
                for (x, d) in p.values.iter_mut().zip(&dir) {
                    for k in 0..3 {
                        x[k] += s * d[k];
                    }
                }
                energy(&p, &field)
            };
            let fd = (shifted(h) - shifted(-h)) / (2.0 * h);
            let an: f64 = g.iter().zip(&dir).map(|(a, d)| dot3(a, d)).sum();
            assert!((fd - an).abs() <= 1e-5 * an.abs().max(1e-3), "{fd} vs {an}");
        }
    }

    #[test]
    fn interior_gradient_is_cotangent_laplacian() {
        let m = mesh(10, 1.0);
        let map = DiscreteMap::from_fn(m.clone(), |u, v| [u * v, u * u - v * v, u]);
        let g = euclidean_gradient(&map, &FieldQ::zero());
        // Independent assembly with cotangent weights, using the same
        // per-triangle weight scaling as the energy.
        let mut lap = vec![[0.0f64; 3]; m.node_count()];
        for (t, tri) in m.mesh.triangles.iter().enumerate() {
            let scale = m.weights[t] / m.mesh.areas[t];
            for k in 0..3 {
                let (i, j, o) = (tri[k], tri[(k + 1) % 3], tri[(k + 2) % 3]);
                let p = |n: usize| m.mesh.nodes[n];
                let e1 = [p(i)[0] - p(o)[0], p(i)[1] - p(o)[1]];
                let e2 = [p(j)[0] - p(o)[0], p(j)[1] - p(o)[1]];
                let cot = (e1[0] * e2[0] + e1[1] * e2[1]) / (e1[0] * e2[1] - e1[1] * e2[0]).abs();
                for d in 0..3 {
                    let diff = map.values[i][d] - map.values[j][d];
                    lap[i][d] += 0.5 * scale * cot * diff;
                    lap[j][d] -= 0.5 * scale * cot * diff;
                }
            }
        }
        for (k, tag) in m.tags.iter().enumerate() {
            if *tag == NodeTag::Interior {
                for d in 0..3 {
                    assert!((g[k][d] - lap[k][d]).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn reduced_gradient_structure() {
        let m = mesh(8, 2.0);
        let chart = SupportChart::flat(2.0);
        let field = FieldQ::zero();
        let flat = ArcData::flat().harmonic_map(m.clone());
        let g = energy_gradient(&flat, &field, &chart).unwrap();
        // Only nodes of triangles with an arc segment feel the extra weight.
        let mut near_arc = vec![false; m.node_count()];
        for (t, tri) in m.mesh.triangles.iter().enumerate() {
            if m.weights[t] != m.mesh.areas[t] {
                tri.iter().for_each(|&n| near_arc[n] = true);
            }
        }
        for k in 0..m.node_count() {
            if !near_arc[k] {
                assert!(dot3(&g[k], &g[k]).sqrt() < 1e-12, "node {k}: {:?}", g[k]);
            }
        }
        for (k, tag) in m.tags.iter().enumerate() {
            match tag {
                NodeTag::Arc | NodeTag::Corner => assert_eq!(g[k], [0.0; 3]),
                NodeTag::ISegment => assert_eq!(g[k][2], 0.0),
                NodeTag::Interior => {}
            }
        }
        // Lifting the trace off the edge makes the blocked component visible.
        let mut lifted = flat.clone();
        for (k, tag) in m.tags.iter().enumerate() {
            if *tag == NodeTag::ISegment {
                lifted.values[k][1] += 0.01;
            }
        }
        let g = energy_gradient(&lifted, &field, &chart).unwrap();
        let i_part: f64 = m
            .tags
            .iter()
            .zip(&g)
            .filter(|(t, _)| **t == NodeTag::ISegment)
            .map(|(_, x)| x[1])
            .sum();
        assert!(i_part > 0.1);
    }
}
