//! Triangulations of the closed upper half-disc and a generic triangle mesh
//! with a point locator.

use serde::{Deserialize, Serialize};
use std::ops::Range;

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

const MIN_AREA: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeTag {
    Interior,
    ISegment,
    Arc,
    Corner,
}

impl NodeTag {
    /// Nodes whose position is prescribed by the arc data.
    pub fn is_fixed(self) -> bool {
        matches!(self, NodeTag::Arc | NodeTag::Corner)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NodeTag::Interior => "interior",
            NodeTag::ISegment => "i-segment",
            NodeTag::Arc => "arc",
            NodeTag::Corner => "corner",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "interior" => NodeTag::Interior,
            "i-segment" => NodeTag::ISegment,
            "arc" => NodeTag::Arc,
            "corner" => NodeTag::Corner,
            _ => return None,
        })
    }
}

/// Bucket grid over the bounding box of a mesh.
#[derive(Debug, Clone)]
struct Locator {
    lo: [f64; 2],
    cell: [f64; 2],
    dims: [usize; 2],
    buckets: Vec<Vec<usize>>,
}

impl Locator {
    fn new<T: Real>(nodes: &[[T; 2]], triangles: &[[usize; 3]]) -> Self {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in nodes {
            for k in 0..2 {
                let x = p[k].to_f64_lossy();
                lo[k] = lo[k].min(x);
                hi[k] = hi[k].max(x);
            }
        }
        let side = ((triangles.len() as f64).sqrt().ceil() as usize).clamp(1, 512);
        let dims = [side, side];
        let cell = [
            ((hi[0] - lo[0]) / side as f64).max(1e-300),
            ((hi[1] - lo[1]) / side as f64).max(1e-300),
        ];
        let mut loc = Self {
            lo,
            cell,
            dims,
            buckets: vec![Vec::new(); side * side],
        };
        for (t, tri) in triangles.iter().enumerate() {
            let mut blo = [f64::INFINITY; 2];
            let mut bhi = [f64::NEG_INFINITY; 2];
            for &n in tri {
                for k in 0..2 {
                    let x = nodes[n][k].to_f64_lossy();
                    blo[k] = blo[k].min(x);
                    bhi[k] = bhi[k].max(x);
                }
            }
            let (i0, j0) = loc.cell_of(blo);
            let (i1, j1) = loc.cell_of(bhi);
            for i in i0..=i1 {
                for j in j0..=j1 {
                    loc.buckets[j * dims[0] + i].push(t);
                }
            }
        }
        loc
    }

    fn cell_of(&self, p: [f64; 2]) -> (usize, usize) {
        let f = |k: usize| {
            let c = ((p[k] - self.lo[k]) / self.cell[k]).floor();
            (c.max(0.0) as usize).min(self.dims[k] - 1)
        };
        (f(0), f(1))
    }
}

/// Triangle mesh with precomputed areas and basis-function gradients.
#[derive(Debug, Clone)]
pub struct TriMesh<T> {
    pub nodes: Vec<[T; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub areas: Vec<T>,
    /// Gradients of the three nodal hat functions on each triangle.
    pub grads: Vec<[[T; 2]; 3]>,
    locator: Locator,
}

impl<T: Real> TriMesh<T> {
    /// Fails on clockwise or degenerate triangles.
    pub fn new(nodes: Vec<[T; 2]>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let mut areas = Vec::with_capacity(triangles.len());
        let mut grads = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&n| n >= nodes.len()) {
                return Err(Error::InvalidInput(format!("triangle {t} references a missing node")));
            }
            let [a, b, c] = tri.map(|n| nodes[n]);
            let twice = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
            let area = twice * lit(0.5);
            if !(area > lit(MIN_AREA)) {
                return Err(Error::InvalidInput(format!(
                    "triangle {t} is degenerate or clockwise (area {area})"
                )));
            }
            let p = [a, b, c];
            let mut g = [[T::zero(); 2]; 3];
            for k in 0..3 {
                let pb = p[(k + 1) % 3];
                let pc = p[(k + 2) % 3];
                g[k] = [(pb[1] - pc[1]) / twice, (pc[0] - pb[0]) / twice];
            }
            areas.push(area);
            grads.push(g);
        }
        let locator = Locator::new(&nodes, &triangles);
        Ok(Self {
            nodes,
            triangles,
            areas,
            grads,
            locator,
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn total_area(&self) -> T {
        self.areas.iter().copied().sum()
    }

    pub fn centroid(&self, t: usize) -> [T; 2] {
        let third = lit::<T>(1.0 / 3.0);
        let [a, b, c] = self.triangles[t].map(|n| self.nodes[n]);
        [(a[0] + b[0] + c[0]) * third, (a[1] + b[1] + c[1]) * third]
    }

    pub fn diameter(&self, t: usize) -> T {
        let [a, b, c] = self.triangles[t].map(|n| self.nodes[n]);
        let d = |p: [T; 2], q: [T; 2]| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
        d(a, b).max(d(b, c)).max(d(c, a))
    }

    pub fn max_diameter(&self) -> T {
        (0..self.triangle_count()).fold(T::zero(), |m, t| m.max(self.diameter(t)))
    }

    pub fn barycentric(&self, t: usize, p: [T; 2]) -> [T; 3] {
        let g = &self.grads[t];
        let a = self.nodes[self.triangles[t][0]];
        let l1 = g[1][0] * (p[0] - a[0]) + g[1][1] * (p[1] - a[1]);
        let l2 = g[2][0] * (p[0] - a[0]) + g[2][1] * (p[1] - a[1]);
        [T::one() - l1 - l2, l1, l2]
    }

    /// Triangle containing `p` with its barycentric coordinates.
    pub fn locate(&self, p: [T; 2]) -> Option<(usize, [T; 3])> {
        let pf = [p[0].to_f64_lossy(), p[1].to_f64_lossy()];
        let (i, j) = self.locator.cell_of(pf);
        let tol = lit::<T>(-1e-12);
        for &t in &self.locator.buckets[j * self.locator.dims[0] + i] {
            let b = self.barycentric(t, p);
            if b.iter().all(|&x| x >= tol) {
                return Some((t, b));
            }
        }
        None
    }

    /// Like [`locate`](Self::locate) but falls back to the nearby triangle
    /// with the least negative barycentric coordinate (linear extrapolation).
    pub fn locate_nearest(&self, p: [T; 2]) -> Option<(usize, [T; 3])> {
        if let Some(hit) = self.locate(p) {
            return Some(hit);
        }
        let pf = [p[0].to_f64_lossy(), p[1].to_f64_lossy()];
        let (ci, cj) = self.locator.cell_of(pf);
        let mut best: Option<(usize, [T; 3], T)> = None;
        for dj in -1i64..=1 {
            for di in -1i64..=1 {
                let i = ci as i64 + di;
                let j = cj as i64 + dj;
                if i < 0 || j < 0 || i >= self.locator.dims[0] as i64 || j >= self.locator.dims[1] as i64 {
                    continue;
                }
                for &t in &self.locator.buckets[j as usize * self.locator.dims[0] + i as usize] {
                    let b = self.barycentric(t, p);
                    let worst = b[0].min(b[1]).min(b[2]);
                    if best.map_or(true, |(_, _, w)| worst > w) {
                        best = Some((t, b, worst));
                    }
                }
            }
        }
        best.map(|(t, b, _)| (t, b))
    }

    /// Sorted node adjacency lists.
    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.node_count()];
        for tri in &self.triangles {
            for k in 0..3 {
                for l in 0..3 {
                    if k != l {
                        adj[tri[k]].push(tri[l]);
                    }
                }
            }
        }
        for a in &mut adj {
            a.sort_unstable();
            a.dedup();
        }
        adj
    }

    /// Triangles incident to each node.
    pub fn node_triangles(&self) -> Vec<Vec<usize>> {
        let mut inc = vec![Vec::new(); self.node_count()];
        for (t, tri) in self.triangles.iter().enumerate() {
            for &n in tri {
                inc[n].push(t);
            }
        }
        inc
    }
}

/// Conforming triangulation of the closed half-disc `|w| <= 1, v >= 0`.
///
/// Nodes lie on concentric half-rings of radius `(i/n)^grading`, so the
/// spacing shrinks toward the origin on `I`. Ring `i` is stored contiguously
/// in `rings[i]`, ordered by increasing angle.
#[derive(Debug, Clone)]
pub struct HalfDiscMesh<T> {
    pub mesh: TriMesh<T>,
    pub tags: Vec<NodeTag>,
    /// Quadrature weight per triangle: its area plus, for triangles with an
    /// arc edge, the circular segment cut off by that chord.
    pub weights: Vec<T>,
    pub grading: T,
    pub n_radial: usize,
    pub rings: Vec<Range<usize>>,
}

pub fn build_halfdisc_mesh<T: Real>(n_radial: usize, grading: T) -> Result<HalfDiscMesh<T>> {
    if n_radial < 2 {
        return Err(Error::InvalidInput(format!("n_radial must be at least 2, got {n_radial}")));
    }
    if !(grading >= T::one()) {
        return Err(Error::InvalidInput(format!("grading must be at least 1, got {grading}")));
    }
    let n = n_radial;
    let g = grading.to_f64_lossy();
    let radius = |i: usize| (i as f64 / n as f64).powf(g);
    let pi = std::f64::consts::PI;

    let mut nodes_f: Vec<[f64; 2]> = vec![[0.0, 0.0]];
    let mut angles: Vec<f64> = vec![0.0];
    let mut tags = vec![NodeTag::ISegment];
    let mut rings = vec![0..1];
    let mut m_prev = 1usize;
    for i in 1..=n {
        let r = radius(i);
        let h = r - radius(i - 1);
        let m = m_prev.max((pi * r / h).ceil() as usize).max(2);
        let start = nodes_f.len();
        for j in 0..=m {
            let th = if j == m { pi } else { pi * j as f64 / m as f64 };
            let (s, c) = th.sin_cos();
            let p = if j == 0 {
                [r, 0.0]
            } else if j == m {
                [-r, 0.0]
            } else {
                [r * c, r * s]
            };
            nodes_f.push(p);
            angles.push(th);
            let end = j == 0 || j == m;
            tags.push(match (i == n, end) {
                (true, true) => NodeTag::Corner,
                (true, false) => NodeTag::Arc,
                (false, true) => NodeTag::ISegment,
                (false, false) => NodeTag::Interior,
            });
        }
        rings.push(start..nodes_f.len());
        m_prev = m;
    }

    let mut triangles: Vec<[usize; 3]> = Vec::new();
    let orient = |nodes: &[[f64; 2]], t: [usize; 3]| {
        let [a, b, c] = t.map(|k| nodes[k]);
        let twice = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        if twice < 0.0 {
            [t[0], t[2], t[1]]
        } else {
            t
        }
    };
    for i in 1..=n {
        let inner: Vec<usize> = rings[i - 1].clone().collect();
        let outer: Vec<usize> = rings[i].clone().collect();
        if inner.len() == 1 {
            for b in 0..outer.len() - 1 {
                triangles.push(orient(&nodes_f, [inner[0], outer[b], outer[b + 1]]));
            }
            continue;
        }
        let (mut a, mut b) = (0usize, 0usize);
        while a + 1 < inner.len() || b + 1 < outer.len() {
            let advance_inner = if a + 1 == inner.len() {
                false
            } else if b + 1 == outer.len() {
                true
            } else {
                angles[inner[a + 1]] <= angles[outer[b + 1]]
            };
            if advance_inner {
                triangles.push(orient(&nodes_f, [inner[a], outer[b], inner[a + 1]]));
                a += 1;
            } else {
                triangles.push(orient(&nodes_f, [inner[a], outer[b], outer[b + 1]]));
                b += 1;
            }
        }
    }

    let mut weights = Vec::with_capacity(triangles.len());
    let nodes: Vec<[T; 2]> = nodes_f.iter().map(|p| [lit(p[0]), lit(p[1])]).collect();
    for tri in &triangles {
        let [a, b, c] = tri.map(|k| nodes_f[k]);
        let mut w = 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]));
        let on_arc: Vec<usize> = tri.iter().copied().filter(|&k| tags[k].is_fixed()).collect();
        if on_arc.len() == 2 {
            let dth = (angles[on_arc[0]] - angles[on_arc[1]]).abs();
            w += 0.5 * (dth - dth.sin());
        }
        weights.push(lit(w));
    }
    let mesh = TriMesh::new(nodes, triangles)?;
    Ok(HalfDiscMesh {
        mesh,
        tags,
        weights,
        grading,
        n_radial,
        rings,
    })
}

impl<T: Real> HalfDiscMesh<T> {
    pub fn node_count(&self) -> usize {
        self.mesh.node_count()
    }

    pub fn nodes(&self) -> &[[T; 2]] {
        &self.mesh.nodes
    }

    /// Indices of nodes on the closed segment `I` (including corners),
    /// ordered by increasing `u`.
    pub fn i_nodes_sorted(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.node_count())
            .filter(|&k| matches!(self.tags[k], NodeTag::ISegment | NodeTag::Corner))
            .collect();
        idx.sort_by(|&a, &b| self.mesh.nodes[a][0].partial_cmp(&self.mesh.nodes[b][0]).unwrap());
        idx
    }

    /// Smallest distance from the origin to a ring, the mesh size at `w = 0`.
    pub fn inner_spacing(&self) -> T {
        let k = self.rings[1].start;
        self.mesh.nodes[k][0]
    }

    /// Full-disc mesh made of this mesh and its reflection `v -> -v`.
    /// Returns the mesh and, per full-disc node, the half-disc node it copies
    /// together with a flag telling whether it is a mirror image.
    pub fn mirrored(&self) -> Result<(TriMesh<T>, Vec<(usize, bool)>)> {
        let mut nodes = self.mesh.nodes.clone();
        let mut origin: Vec<(usize, bool)> = (0..nodes.len()).map(|k| (k, false)).collect();
        let mut image = vec![usize::MAX; nodes.len()];
        for (k, p) in self.mesh.nodes.iter().enumerate() {
            if matches!(self.tags[k], NodeTag::ISegment | NodeTag::Corner) {
                image[k] = k;
            } else {
                image[k] = nodes.len();
                nodes.push([p[0], -p[1]]);
                origin.push((k, true));
            }
        }
        let mut triangles = self.mesh.triangles.clone();
        for tri in &self.mesh.triangles {
            triangles.push([image[tri[0]], image[tri[2]], image[tri[1]]]);
        }
        Ok((TriMesh::new(nodes, triangles)?, origin))
    }
}
