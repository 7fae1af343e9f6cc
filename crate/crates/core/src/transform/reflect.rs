use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::{local, zeta_components};
use crate::error::{Error, Result};
use crate::geometry::{FieldQ, SupportChart};
use crate::mesh::{HalfDiscMesh, TriMesh};
use crate::scalar::{lit, Real};
use crate::solver::{nodal_gradients, DiscreteMap};

type C<T> = Complex<T>;

/// `(z^1, z^2)` at every node from the area-averaged gradients.
pub fn node_z_field<T: Real>(
    map: &DiscreteMap<T>,
    chart: &SupportChart<T>,
    field: &FieldQ<T>,
) -> Result<Vec<[C<T>; 2]>> {
    let half = lit::<T>(0.5);
    nodal_gradients(map)
        .iter()
        .zip(&map.values)
        .map(|((xu, xv), x)| {
            let l = local(chart, field, x)?;
            let xw = [0, 1, 2].map(|k| Complex::new(xu[k] * half, -xv[k] * half));
            let z = zeta_components(&l, &xw);
            Ok([z[0], z[1]])
        })
        .collect()
}

/// Samples of `z` on the full disc: the half-disc values and their
/// conjugates at mirrored nodes.
#[derive(Debug, Clone)]
pub struct ReflectedField<T, const N: usize> {
    pub mesh: TriMesh<T>,
    /// Per full-disc node: source half-disc node and whether it is mirrored.
    pub origin: Vec<(usize, bool)>,
    pub values: Vec<[C<T>; N]>,
}

pub fn reflect<T: Real, const N: usize>(
    half: &HalfDiscMesh<T>,
    z: &[[C<T>; N]],
) -> Result<ReflectedField<T, N>> {
    if z.len() != half.node_count() {
        return Err(Error::InvalidInput(format!(
            "{} samples for {} nodes",
            z.len(),
            half.node_count()
        )));
    }
    let (mesh, origin) = half.mirrored()?;
    let values = origin
        .iter()
        .map(|&(src, mirrored)| if mirrored { z[src].map(|c| c.conj()) } else { z[src] })
        .collect();
    Ok(ReflectedField { mesh, origin, values })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WbarReport<T> {
    /// Per-triangle `|z_wbar|` from the linear interpolant.
    pub dwbar: Vec<T>,
    /// Per-triangle mean of `|z|^2` over the vertices.
    pub z_squared: Vec<T>,
    /// `sup |z_wbar| / |z|^2` over triangles above the noise floor.
    pub ratio_sup: T,
    pub noise_floor: T,
    pub counted: usize,
}

/// Discrete `z_wbar = (z_u + i z_v) / 2` per triangle and its size relative
/// to `|z|^2`.
pub fn wirtinger_bar_residual<T: Real, const N: usize>(r: &ReflectedField<T, N>) -> WbarReport<T> {
    let m = &r.mesh;
    let zmax = r
        .values
        .iter()
        .map(|v| v.iter().map(|c| c.norm_sqr()).sum::<T>().sqrt())
        .fold(T::zero(), T::max);
    let noise_floor = zmax * lit(1e-6);
    let (mut dwbar, mut z_squared) = (Vec::new(), Vec::new());
    let mut sup = T::zero();
    let mut counted = 0;
    let third = lit::<T>(1.0 / 3.0);
    let half = lit::<T>(0.5);
    for (t, tri) in m.triangles.iter().enumerate() {
        let g = &m.grads[t];
        let mut s = T::zero();
        for k in 0..N {
            let d1 = r.values[tri[1]][k] - r.values[tri[0]][k];
            let d2 = r.values[tri[2]][k] - r.values[tri[0]][k];
            let zu = d1 * g[1][0] + d2 * g[2][0];
            let zv = d1 * g[1][1] + d2 * g[2][1];
            s += ((zu + zv * Complex::i()) * half).norm_sqr();
        }
        let d = s.sqrt();
        let zz = tri
            .iter()
            .map(|&n| r.values[n].iter().map(|c| c.norm_sqr()).sum::<T>())
            .sum::<T>()
            * third;
        if zz.sqrt() > noise_floor {
            sup = sup.max(d / zz);
            counted += 1;
        }
        dwbar.push(d);
        z_squared.push(zz);
    }
    WbarReport {
        dwbar,
        z_squared,
        ratio_sup: sup,
        noise_floor,
        counted,
    }
}
