use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::energy::{edge_frame, element_du_dv, ACTIVE_TOL};
use super::{energy, DiscreteMap};
use crate::error::{Error, Result};
use crate::geometry::{FieldQ, SupportChart};
use crate::linalg::{fit_line, solve_dense};
use crate::mesh::NodeTag;
use crate::quadrature::GaussLegendre;
use crate::scalar::{cross3, dot3, lit, Real, Vec3};

/// Local quadratic least-squares jet of a map at a node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeJet<T> {
    pub value: Vec3<T>,
    pub du: Vec3<T>,
    pub dv: Vec3<T>,
    pub laplacian: Vec3<T>,
}

/// Fits `x(p) ~ c0 + c1 du + c2 dv + c3 du^2 + c4 du dv + c5 dv^2` over the
/// two-ring of every node.
pub fn lsq_jets<T: Real>(map: &DiscreteMap<T>) -> Result<Vec<NodeJet<T>>> {
    let m = &map.mesh.mesh;
    let adj = m.neighbors();
    (0..m.node_count())
        .into_par_iter()
        .map(|k| {
            let mut patch: Vec<usize> = adj[k].iter().flat_map(|&n| adj[n].iter().copied()).collect();
            patch.extend(&adj[k]);
            patch.sort_unstable();
            patch.dedup();
            let c = m.nodes[k];
            let h = patch.iter().fold(T::zero(), |acc, &n| {
                let d = m.nodes[n];
                acc.max(((d[0] - c[0]).powi(2) + (d[1] - c[1]).powi(2)).sqrt())
            });
            let mut ata = vec![vec![T::zero(); 6]; 6];
            let mut atb = vec![[T::zero(); 3]; 6];
            for &n in &patch {
                let p = m.nodes[n];
                let (du, dv) = ((p[0] - c[0]) / h, (p[1] - c[1]) / h);
                let row = [T::one(), du, dv, du * du, du * dv, dv * dv];
                for i in 0..6 {
                    for j in 0..6 {
                        ata[i][j] += row[i] * row[j];
                    }
                    for d in 0..3 {
                        atb[i][d] += row[i] * map.values[n][d];
                    }
                }
            }
            let mut coef = [[T::zero(); 6]; 3];
            for d in 0..3 {
                let sol = solve_dense(ata.clone(), atb.iter().map(|r| r[d]).collect())?;
                coef[d].copy_from_slice(&sol);
            }
            let two = lit::<T>(2.0);
            Ok(NodeJet {
                value: [0, 1, 2].map(|d| coef[d][0]),
                du: [0, 1, 2].map(|d| coef[d][1] / h),
                dv: [0, 1, 2].map(|d| coef[d][2] / h),
                laplacian: [0, 1, 2].map(|d| two * (coef[d][3] + coef[d][5]) / (h * h)),
            })
        })
        .collect()
}

/// Per-triangle `|Lap x - 2 H(x) x_u x x_v|` with the Laplacian from
/// [`lsq_jets`] averaged over the triangle's nodes.
pub fn rellich_residual<T: Real>(map: &DiscreteMap<T>, field: &FieldQ<T>) -> Result<Vec<T>> {
    let jets = lsq_jets(map)?;
    let m = &map.mesh.mesh;
    let third = lit::<T>(1.0 / 3.0);
    Ok((0..m.triangle_count())
        .map(|t| {
            let tri = m.triangles[t];
            let xs = tri.map(|n| map.values[n]);
            let (xu, xv) = element_du_dv(&m.grads[t], &xs);
            let c = [0, 1, 2].map(|k| (xs[0][k] + xs[1][k] + xs[2][k]) * third);
            let h2 = field.div(&c);
            let n = cross3(&xu, &xv);
            let r = [0, 1, 2].map(|k| {
                let lap = (jets[tri[0]].laplacian[k] + jets[tri[1]].laplacian[k] + jets[tri[2]].laplacian[k]) * third;
                lap - h2 * n[k]
            });
            dot3(&r, &r).sqrt()
        })
        .collect())
}

/// Per-triangle `(|x_u|^2 - |x_v|^2, <x_u, x_v>)`.
pub fn conformality_defect<T: Real>(map: &DiscreteMap<T>) -> Vec<(T, T)> {
    let m = &map.mesh.mesh;
    (0..m.triangle_count())
        .map(|t| {
            let xs = m.triangles[t].map(|n| map.values[n]);
            let (xu, xv) = element_du_dv(&m.grads[t], &xs);
            (dot3(&xu, &xu) - dot3(&xv, &xv), dot3(&xu, &xv))
        })
        .collect()
}

pub const FIRST_VARIATION_STEPS: [f64; 3] = [1e-3, 1e-4, 1e-5];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirstVariation<T> {
    /// Richardson extrapolation from the two smallest steps.
    pub value: T,
    /// One-sided quotients for [`FIRST_VARIATION_STEPS`].
    pub quotients: [T; 3],
    /// Difference between the extrapolations from the two step pairs.
    pub consistency: T,
}

fn check_direction<T: Real>(
    map: &DiscreteMap<T>,
    chart: &SupportChart<T>,
    dir: &[Vec3<T>],
) -> Result<()> {
    if dir.len() != map.values.len() {
        return Err(Error::InadmissibleDirection(format!(
            "direction has {} entries for {} nodes",
            dir.len(),
            map.values.len()
        )));
    }
    let tol = lit::<T>(1e-10);
    for (k, (tag, phi)) in map.tags().iter().zip(dir).enumerate() {
        let size = dot3(phi, phi).sqrt();
        if !size.is_finite() {
            return Err(Error::InadmissibleDirection(format!("node {k} is not finite")));
        }
        match tag {
            NodeTag::Interior => {}
            NodeTag::Arc | NodeTag::Corner => {
                if size > T::zero() {
                    return Err(Error::InadmissibleDirection(format!(
                        "node {k} on the arc must not move"
                    )));
                }
            }
            NodeTag::ISegment => {
                let x = map.values[k];
                let n = chart.unit_normal(x[0], x[1])?;
                if dot3(phi, &n).abs() > tol * size.max(T::one()) {
                    return Err(Error::InadmissibleDirection(format!(
                        "node {k} on I leaves the tangent plane of the support surface"
                    )));
                }
                let (g, _, _) = chart.eval_gamma(x[0])?;
                if x[1] - g <= lit(ACTIVE_TOL) {
                    let (_, nu) = edge_frame(chart, x[0])?;
                    if dot3(phi, &nu) < -tol * size.max(T::one()) {
                        return Err(Error::InadmissibleDirection(format!(
                            "node {k} on the edge points out of the support surface"
                        )));
                    }
                }
            }
        }
    }
    Ok(())
}

fn perturbed<T: Real>(
    map: &DiscreteMap<T>,
    chart: &SupportChart<T>,
    dir: &[Vec3<T>],
    eps: T,
) -> Result<DiscreteMap<T>> {
    let mut out = map.clone();
    for (k, (x, phi)) in out.values.iter_mut().zip(dir).enumerate() {
        for d in 0..3 {
            x[d] += eps * phi[d];
        }
        if map.mesh.tags[k] == NodeTag::ISegment {
            let (g, _, _) = chart.eval_gamma(x[0])?;
            x[1] = x[1].max(g);
            x[2] = chart.eval_chart(x[0], x[1])?.value;
        }
    }
    Ok(out)
}

/// One-sided difference quotients of the energy along an admissible
/// direction, with I-nodes projected back onto the support surface.
pub fn first_variation<T: Real>(
    map: &DiscreteMap<T>,
    field: &FieldQ<T>,
    chart: &SupportChart<T>,
    direction: &[Vec3<T>],
) -> Result<FirstVariation<T>> {
    check_direction(map, chart, direction)?;
    let e0 = energy(map, field);
    let mut q = [T::zero(); 3];
    for (slot, &eps) in q.iter_mut().zip(&FIRST_VARIATION_STEPS) {
        let eps = lit::<T>(eps);
        *slot = (energy(&perturbed(map, chart, direction, eps)?, field) - e0) / eps;
    }
    let (ten, nine) = (lit::<T>(10.0), lit::<T>(9.0));
    let fine = (ten * q[2] - q[1]) / nine;
    let coarse = (ten * q[1] - q[0]) / nine;
    Ok(FirstVariation {
        value: fine,
        quotients: q,
        consistency: (fine - coarse).abs(),
    })
}

/// Seeded suite of admissible directions: smooth random bumps vanishing on
/// the arc, tangent to the support surface on `I`, and pointing into it at
/// nodes touching the edge. Half of the bumps are centered on `I`.
pub fn direction_suite<T: Real>(
    map: &DiscreteMap<T>,
    chart: &SupportChart<T>,
    count: usize,
    seed: u64,
) -> Result<Vec<Vec<Vec3<T>>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nodes = map.mesh.nodes();
    let mut suite = Vec::with_capacity(count);
    for j in 0..count {
        let cu: f64 = rng.gen_range(-0.8..0.8);
        let cv: f64 = if j % 2 == 0 { 0.0 } else { rng.gen_range(0.0..0.6) };
        let r: f64 = rng.gen_range(0.15..0.5);
        let amp: [f64; 3] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let mut dir = Vec::with_capacity(nodes.len());
        for (k, p) in nodes.iter().enumerate() {
            let (u, v) = (p[0].to_f64_lossy(), p[1].to_f64_lossy());
            let d2 = ((u - cu).powi(2) + (v - cv).powi(2)) / (r * r);
            let b = if d2 < 1.0 { (1.0 - d2).powi(3) * (1.0 - (u * u + v * v)).max(0.0) } else { 0.0 };
            let phi = match map.mesh.tags[k] {
                NodeTag::Arc | NodeTag::Corner => [T::zero(); 3],
                NodeTag::Interior => amp.map(|a| lit(a * b)),
                NodeTag::ISegment => {
                    let x = map.values[k];
                    let (tau, nu) = edge_frame(chart, x[0])?;
                    let n = chart.unit_normal(x[0], x[1])?;
                    // Tangent basis of the surface at x: the edge frame
                    // re-projected to the local tangent plane.
                    let proj = |v: Vec3<T>| {
                        let d = dot3(&v, &n);
                        [v[0] - d * n[0], v[1] - d * n[1], v[2] - d * n[2]]
                    };
                    let (t1, t2) = (proj(tau), proj(nu));
                    let (g, _, _) = chart.eval_gamma(x[0])?;
                    let on_edge = x[1] - g <= lit(ACTIVE_TOL);
                    let c2 = if on_edge { amp[1].abs() } else { amp[1] };
                    let (a, c) = (lit::<T>(amp[0] * b), lit::<T>(c2 * b));
                    [0, 1, 2].map(|i| a * t1[i] + c * t2[i])
                }
            };
            dir.push(phi);
        }
        suite.push(dir);
    }
    Ok(suite)
}

fn line_integral<T: Real>(
    map: &DiscreteMap<T>,
    rho: T,
    panels: usize,
    mut f: impl FnMut([T; 2], Vec3<T>, Vec3<T>, Vec3<T>) -> Result<T>,
) -> Result<T> {
    if !(rho > T::zero() && rho < T::one()) {
        return Err(Error::InvalidInput(format!("rho = {rho} not in (0, 1)")));
    }
    let m = &map.mesh.mesh;
    let half = (T::one() - rho * rho).sqrt();
    let rule = GaussLegendre::<T>::new(3);
    let width = (half + half) / T::from_usize_lossy(panels);
    let mut acc = T::zero();
    for p in 0..panels {
        let a = -half + width * T::from_usize_lossy(p);
        for (u, w) in rule.mapped(a, a + width) {
            let pt = [u, rho];
            let (t, bary) = m.locate_nearest(pt).ok_or(Error::OutsideDomain {
                u: u.to_f64_lossy(),
                v: rho.to_f64_lossy(),
            })?;
            let tri = m.triangles[t];
            let xs = tri.map(|n| map.values[n]);
            let x = [0, 1, 2].map(|k| bary[0] * xs[0][k] + bary[1] * xs[1][k] + bary[2] * xs[2][k]);
            let (xu, xv) = element_du_dv(&m.grads[t], &xs);
            acc += w * f(pt, x, xu, xv)?;
        }
    }
    Ok(acc)
}

const LINE_PANELS: usize = 2048;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxReport<T> {
    pub rho: Vec<T>,
    pub values: Vec<T>,
    /// Linear extrapolation of the values to `rho = 0`.
    pub extrapolated: T,
}

/// `alpha(w) = (1 - |w|^2 / R^2)^2` inside the radius `R`, zero outside.
pub fn bump_test_function<T: Real>(radius: T) -> impl Fn([T; 2]) -> T {
    move |p: [T; 2]| {
        let s = (p[0] * p[0] + p[1] * p[1]) / (radius * radius);
        if s < T::one() {
            (T::one() - s).powi(2)
        } else {
            T::zero()
        }
    }
}

/// `int_{v = rho} alpha <t(x^1), x_v + Q(x) x x_u> du` for each `rho`, where
/// `t = (1, gamma'(x^1), psi_p1 + psi_p2 gamma'(x^1))`.
pub fn boundary_flux<T: Real>(
    map: &DiscreteMap<T>,
    field: &FieldQ<T>,
    chart: &SupportChart<T>,
    alpha: impl Fn([T; 2]) -> T,
    rho_list: &[T],
) -> Result<FluxReport<T>> {
    let mut values = Vec::with_capacity(rho_list.len());
    for &rho in rho_list {
        values.push(line_integral(map, rho, LINE_PANELS, |p, x, xu, xv| {
            let a = alpha(p);
            if a.is_zero() {
                return Ok(T::zero());
            }
            let (_, dg, _) = chart.eval_gamma(x[0])?;
            let j = chart.eval_chart(x[0], x[1])?;
            let t = [T::one(), dg, j.grad[0] + j.grad[1] * dg];
            let qx = cross3(&field.eval(&x), &xu);
            let f = [0, 1, 2].map(|k| xv[k] + qx[k]);
            Ok(a * dot3(&t, &f))
        })?);
    }
    let extrapolated = if rho_list.len() >= 2 {
        fit_line(rho_list, &values)?.0
    } else {
        values.first().copied().unwrap_or(T::zero())
    };
    Ok(FluxReport {
        rho: rho_list.to_vec(),
        values,
        extrapolated,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiReport<T> {
    pub rho: Vec<T>,
    pub values: Vec<T>,
    /// Log-log slope; absent when the integrand vanishes identically.
    pub slope: Option<T>,
    pub identically_satisfied: bool,
}

/// `int_{v = rho} [x^3 - psi(x^1, x^2)]^2 du` and its log-log slope in `rho`.
pub fn chi_decay<T: Real>(
    map: &DiscreteMap<T>,
    chart: &SupportChart<T>,
    rho_list: &[T],
) -> Result<ChiReport<T>> {
    let mut values = Vec::with_capacity(rho_list.len());
    for &rho in rho_list {
        values.push(line_integral(map, rho, LINE_PANELS, |_, x, _, _| {
            let d = x[2] - chart.eval_chart(x[0], x[1])?.value;
            Ok(d * d)
        })?);
    }
    let floor = lit::<T>(1e-14);
    let identically = values.iter().all(|&v| v < floor);
    let slope = if identically {
        None
    } else {
        let (lx, ly): (Vec<T>, Vec<T>) = rho_list
            .iter()
            .zip(&values)
            .filter(|(_, &v)| v > T::zero())
            .map(|(&r, &v)| (r.ln(), v.ln()))
            .unzip();
        Some(fit_line(&lx, &ly)?.1)
    };
    Ok(ChiReport {
        rho: rho_list.to_vec(),
        values,
        slope,
        identically_satisfied: identically,
    })
}
