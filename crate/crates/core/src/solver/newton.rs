//! Projected Newton iteration in reduced coordinates.
//!
//! Interior nodes carry their three coordinates. A node on `I` carries
//! `(a, s)` with `x = (a, gamma(a) + s, psi(a, gamma(a) + s))` and `s >= 0`,
//! so every iterate lies on the support surface and on the admissible side
//! of its edge. Arc and corner nodes are fixed.

use log::debug;
use serde::{Deserialize, Serialize};

use super::energy::{element_q_gradient, energy_gradient, ACTIVE_TOL};
use super::envelope::EnvelopeMatrix;
use super::{energy, euclidean_gradient, DiscreteMap};
use crate::error::{Error, Result};
use crate::geometry::{validate_transversality, FieldQ, SupportChart, DEFAULT_TRANSVERSALITY_SAMPLES};
use crate::mesh::NodeTag;
use crate::scalar::{dot3, lit, Real, Vec3};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Problem<T> {
    pub chart: SupportChart<T>,
    pub field: FieldQ<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveOptions<T> {
    /// Bound on the projected gradient norm.
    pub tol: T,
    pub max_iter: usize,
    /// Sufficient-decrease constant of the line search.
    pub armijo: T,
    pub transversality_samples: usize,
}

impl<T: Real> Default for SolveOptions<T> {
    fn default() -> Self {
        Self {
            tol: lit(1e-9),
            max_iter: 200,
            armijo: lit(1e-4),
            transversality_samples: DEFAULT_TRANSVERSALITY_SAMPLES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport<T> {
    pub energy: T,
    pub gradient_norm: T,
    pub iterations: usize,
    pub active_edge_nodes: Vec<usize>,
    pub converged: bool,
    pub energy_history: Vec<T>,
}

#[derive(Debug, Clone, Copy)]
enum Var {
    Fixed,
    Free(usize),
    Edge(usize),
}

impl Var {
    fn range(self) -> Option<(usize, usize)> {
        match self {
            Var::Fixed => None,
            Var::Free(i) => Some((i, 3)),
            Var::Edge(i) => Some((i, 2)),
        }
    }
}

/// Position on the support surface with first and second derivatives with
/// respect to `(a, s)`.
struct Lift<T> {
    x: Vec3<T>,
    /// Columns `dx/da`, `dx/ds`.
    jac: [Vec3<T>; 2],
    /// `d2x/da2`, `d2x/dads`, `d2x/ds2`.
    second: [Vec3<T>; 3],
}

fn lift<T: Real>(chart: &SupportChart<T>, a: T, s: T) -> Result<Lift<T>> {
    let (g, dg, ddg) = chart.eval_gamma(a)?;
    let p2 = g + s;
    let j = chart.eval_chart(a, p2)?;
    let [p1d, p2d] = j.grad;
    let [[h11, h12], [_, h22]] = j.hess;
    let two = lit::<T>(2.0);
    let z = T::zero();
    Ok(Lift {
        x: [a, p2, j.value],
        jac: [[T::one(), dg, p1d + p2d * dg], [z, T::one(), p2d]],
        second: [
            [z, ddg, h11 + two * h12 * dg + h22 * dg * dg + p2d * ddg],
            [z, z, h12 + h22 * dg],
            [z, z, h22],
        ],
    })
}

struct Layout {
    vars: Vec<Var>,
    n: usize,
}

fn layout(tags: &[NodeTag]) -> Layout {
    let mut n = 0;
    let vars = tags
        .iter()
        .map(|t| match t {
            NodeTag::Interior => {
                n += 3;
                Var::Free(n - 3)
            }
            NodeTag::ISegment => {
                n += 2;
                Var::Edge(n - 2)
            }
            NodeTag::Arc | NodeTag::Corner => Var::Fixed,
        })
        .collect();
    Layout { vars, n }
}

struct State<T> {
    map: DiscreteMap<T>,
    /// `(a, s)` per I-node, indexed by node.
    coords: Vec<(T, T)>,
}

impl<T: Real> State<T> {
    fn from_values(
        chart: &SupportChart<T>,
        lay: &Layout,
        map: &DiscreteMap<T>,
        y: Option<&[T]>,
    ) -> Result<Self> {
        let mut out = map.clone();
        let mut coords = vec![(T::zero(), T::zero()); map.values.len()];
        for (k, v) in lay.vars.iter().enumerate() {
            match *v {
                Var::Fixed => {}
                Var::Free(i) => {
                    if let Some(y) = y {
                        out.values[k] = [y[i], y[i + 1], y[i + 2]];
                    }
                }
                Var::Edge(i) => {
                    let (a, s) = match y {
                        Some(y) => (y[i], y[i + 1].max(T::zero())),
                        None => {
                            let x = map.values[k];
                            let (g, _, _) = chart.eval_gamma(x[0])?;
                            (x[0], (x[1] - g).max(T::zero()))
                        }
                    };
                    out.values[k] = lift(chart, a, s)?.x;
                    coords[k] = (a, s);
                }
            }
        }
        Ok(Self { map: out, coords })
    }

    fn vector(&self, lay: &Layout) -> Vec<T> {
        let mut y = vec![T::zero(); lay.n];
        for (k, v) in lay.vars.iter().enumerate() {
            match *v {
                Var::Fixed => {}
                Var::Free(i) => y[i..i + 3].copy_from_slice(&self.map.values[k]),
                Var::Edge(i) => {
                    y[i] = self.coords[k].0;
                    y[i + 1] = self.coords[k].1;
                }
            }
        }
        y
    }
}

fn reduced_gradient<T: Real>(
    chart: &SupportChart<T>,
    lay: &Layout,
    state: &State<T>,
    g: &[Vec3<T>],
) -> Result<Vec<T>> {
    let mut out = vec![T::zero(); lay.n];
    for (k, v) in lay.vars.iter().enumerate() {
        match *v {
            Var::Fixed => {}
            Var::Free(i) => out[i..i + 3].copy_from_slice(&g[k]),
            Var::Edge(i) => {
                let (a, s) = state.coords[k];
                let l = lift(chart, a, s)?;
                out[i] = dot3(&g[k], &l.jac[0]);
                out[i + 1] = dot3(&g[k], &l.jac[1]);
            }
        }
    }
    Ok(out)
}

fn profile(lay: &Layout, triangles: &[[usize; 3]]) -> Vec<usize> {
    let mut first: Vec<usize> = (0..lay.n).collect();
    for tri in triangles {
        let lo = tri
            .iter()
            .filter_map(|&n| lay.vars[n].range().map(|(i, _)| i))
            .min();
        let Some(lo) = lo else { continue };
        for &n in tri {
            if let Some((i, len)) = lay.vars[n].range() {
                for r in i..i + len {
                    first[r] = first[r].min(lo);
                }
            }
        }
    }
    first
}

/// Element Hessian: analytic Dirichlet block plus central differences of the
/// analytic `Q`-term gradient.
fn element_hessian<T: Real>(
    field: &FieldQ<T>,
    w: T,
    grads: &[[T; 2]; 3],
    xs: &[Vec3<T>; 3],
) -> [[T; 9]; 9] {
    let mut h = [[T::zero(); 9]; 9];
    for a in 0..3 {
        for b in 0..3 {
            let d = w * (grads[a][0] * grads[b][0] + grads[a][1] * grads[b][1]);
            for k in 0..3 {
                h[3 * a + k][3 * b + k] = d;
            }
        }
    }
    if field.is_zero() {
        return h;
    }
    let step = lit::<T>(1e-6);
    let mut fd = [[T::zero(); 9]; 9];
    for c in 0..9 {
        let mut plus = *xs;
        let mut minus = *xs;
        plus[c / 3][c % 3] += step;
        minus[c / 3][c % 3] -= step;
        let gp = element_q_gradient(field, w, grads, &plus);
        let gm = element_q_gradient(field, w, grads, &minus);
        for r in 0..9 {
            fd[r][c] = (gp[r / 3][r % 3] - gm[r / 3][r % 3]) / (step + step);
        }
    }
    for r in 0..9 {
        for c in 0..9 {
            h[r][c] += (fd[r][c] + fd[c][r]) * lit(0.5);
        }
    }
    h
}

fn node_jacobian<T: Real>(
    chart: &SupportChart<T>,
    state: &State<T>,
    node: usize,
    var: Var,
) -> Result<Vec<Vec3<T>>> {
    Ok(match var {
        Var::Fixed => Vec::new(),
        Var::Free(_) => {
            let (o, z) = (T::one(), T::zero());
            vec![[o, z, z], [z, o, z], [z, z, o]]
        }
        Var::Edge(_) => {
            let (a, s) = state.coords[node];
            lift(chart, a, s)?.jac.to_vec()
        }
    })
}

fn assemble_hessian<T: Real>(
    problem: &Problem<T>,
    lay: &Layout,
    first: &[usize],
    state: &State<T>,
    g: &[Vec3<T>],
    active: &[bool],
) -> Result<EnvelopeMatrix<T>> {
    let hm = &state.map.mesh;
    let mut mat = EnvelopeMatrix::with_profile(first.to_vec());
    let jacs: Vec<Vec<Vec3<T>>> = lay
        .vars
        .iter()
        .enumerate()
        .map(|(k, &v)| node_jacobian(&problem.chart, state, k, v))
        .collect::<Result<_>>()?;
    for (t, tri) in hm.mesh.triangles.iter().enumerate() {
        let xs = tri.map(|n| state.map.values[n]);
        let he = element_hessian(&problem.field, hm.weights[t], &hm.mesh.grads[t], &xs);
        for la in 0..3 {
            let Some((ia, na)) = lay.vars[tri[la]].range() else { continue };
            for lb in 0..3 {
                let Some((ib, nb)) = lay.vars[tri[lb]].range() else { continue };
                let (ja, jb) = (&jacs[tri[la]], &jacs[tri[lb]]);
                for p in 0..na {
                    for q in 0..nb {
                        let (r, c) = (ia + p, ib + q);
                        if r < c || active[r] || active[c] {
                            continue;
                        }
                        let mut v = T::zero();
                        for k in 0..3 {
                            for l in 0..3 {
                                v += ja[p][k] * he[3 * la + k][3 * lb + l] * jb[q][l];
                            }
                        }
                        mat.add(r, c, v)?;
                    }
                }
            }
        }
    }
    for (k, &v) in lay.vars.iter().enumerate() {
        if let Var::Edge(i) = v {
            let (a, s) = state.coords[k];
            let l = lift(&problem.chart, a, s)?;
            let c = l.second.map(|d| dot3(&g[k], &d));
            if !active[i] {
                mat.add(i, i, c[0])?;
                if !active[i + 1] {
                    mat.add(i + 1, i, c[1])?;
                }
            }
            if !active[i + 1] {
                mat.add(i + 1, i + 1, c[2])?;
            }
        }
    }
    for (i, &a) in active.iter().enumerate() {
        if a {
            mat.add(i, i, T::one())?;
        }
    }
    Ok(mat)
}

fn norm<T: Real>(v: &[Vec3<T>]) -> T {
    v.iter().map(|x| dot3(x, x)).sum::<T>().sqrt()
}

/// Minimizes the discrete energy over maps with the arc values of `init`
/// and the trace on `I` constrained to the support surface.
pub fn solve_stationary<T: Real>(
    problem: &Problem<T>,
    init: &DiscreteMap<T>,
    opts: &SolveOptions<T>,
) -> Result<(DiscreteMap<T>, SolveReport<T>)> {
    let tr = validate_transversality(&problem.chart, &problem.field, opts.transversality_samples.max(1))?;
    if !tr.admissible {
        return Err(Error::Transversality {
            q0: tr.q0.to_f64_lossy(),
        });
    }
    let lay = layout(init.tags());
    let first = profile(&lay, &init.mesh.mesh.triangles);
    let chart = &problem.chart;
    let mut state = State::from_values(chart, &lay, init, None)?;
    let mut e = energy(&state.map, &problem.field);
    let mut history = vec![e];
    let mut iterations = 0;
    let mut gnorm;
    loop {
        let spec_g = energy_gradient(&state.map, &problem.field, chart)?;
        gnorm = norm(&spec_g);
        debug!("iteration {iterations}: energy {e}, projected gradient {gnorm}");
        if gnorm <= opts.tol || iterations >= opts.max_iter {
            break;
        }
        let g = euclidean_gradient(&state.map, &problem.field);
        let rg = reduced_gradient(chart, &lay, &state, &g)?;
        let y = state.vector(&lay);

        let eps = gnorm.min(lit(1e-6));
        let mut active = vec![false; lay.n];
        for &v in &lay.vars {
            if let Var::Edge(i) = v {
                if y[i + 1] <= eps && rg[i + 1] > T::zero() {
                    active[i + 1] = true;
                }
            }
        }
        let base = assemble_hessian(problem, &lay, &first, &state, &g, &active)?;
        let rhs: Vec<T> = rg
            .iter()
            .zip(&active)
            .map(|(&v, &a)| if a { T::zero() } else { -v })
            .collect();
        let mut shift = T::zero();
        let mut dir = loop {
            let mut m = base.clone();
            if shift > T::zero() {
                m.add_diagonal(shift);
            }
            match m.factor() {
                Ok(()) => break m.solve(&rhs)?,
                Err(Error::Singular(_)) => {
                    shift = if shift > T::zero() {
                        shift * lit(10.0)
                    } else {
                        base.max_diagonal() * lit(1e-8)
                    };
                    if !shift.is_finite() || shift > base.max_diagonal() * lit(1e8) {
                        return Err(Error::NonConvergence(format!(
                            "Hessian could not be regularized at iteration {iterations}"
                        )));
                    }
                }
                Err(err) => return Err(err),
            }
        };
        let slope: T = dir.iter().zip(&rg).map(|(&d, &g)| d * g).sum();
        if !(slope < T::zero()) {
            dir = rg.iter().zip(&active).map(|(&g, &a)| if a { T::zero() } else { -g }).collect();
        }
        for &v in &lay.vars {
            if let Var::Edge(i) = v {
                if active[i + 1] {
                    let d = base.get(i + 1, i + 1).max(lit(1e-30));
                    dir[i + 1] = -rg[i + 1] / d;
                }
            }
        }

        let mut alpha = T::one();
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<T> = y.iter().zip(&dir).map(|(&a, &d)| a + alpha * d).collect();
            if let Ok(st) = State::from_values(chart, &lay, &state.map, Some(&trial)) {
                let et = energy(&st.map, &problem.field);
                let moved = st.vector(&lay);
                let pred: T = moved.iter().zip(&y).zip(&rg).map(|((&m, &o), &g)| (m - o) * g).sum();
                if et.is_finite() && et <= e + opts.armijo * pred {
                    accepted = Some((st, et));
                    break;
                }
                // Below the rounding level of E the decrease test is
                // meaningless; the full step is kept if it reduces the
                // projected gradient.
                let noise = lit::<T>(64.0) * T::epsilon() * e.abs().max(T::one());
                if alpha == T::one() && et.is_finite() && (et - e).abs() <= noise {
                    let gt = norm(&energy_gradient(&st.map, &problem.field, chart)?);
                    if gt < gnorm {
                        accepted = Some((st, et));
                        break;
                    }
                }
            }
            alpha = alpha * lit(0.5);
        }
        iterations += 1;
        match accepted {
            Some((st, et)) => {
                state = st;
                e = et;
                history.push(e);
            }
            None => {
                debug!("line search failed at iteration {iterations}");
                break;
            }
        }
    }
    let tags = init.tags();
    let mut active_nodes = Vec::new();
    for (k, tag) in tags.iter().enumerate() {
        if *tag == NodeTag::ISegment && state.coords[k].1 <= lit(ACTIVE_TOL) {
            active_nodes.push(k);
        }
    }
    let report = SolveReport {
        energy: e,
        gradient_norm: gnorm,
        iterations,
        active_edge_nodes: active_nodes,
        converged: gnorm <= opts.tol,
        energy_history: history,
    };
    Ok((state.map, report))
}
