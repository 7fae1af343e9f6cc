//! Discretization of the half-disc problem: energy, gradients, a projected
//! Newton solver for the free boundary constraint, and diagnostics.

mod diagnostics;
mod energy;
mod envelope;
mod newton;

pub use diagnostics::{
    boundary_flux, chi_decay, conformality_defect, first_variation, lsq_jets, rellich_residual,
    bump_test_function, direction_suite, ChiReport, FirstVariation, FluxReport, NodeJet,
    FIRST_VARIATION_STEPS,
};
pub use energy::{
    element_gradients, energy, energy_gradient, euclidean_gradient, nodal_gradients,
    wirtinger_derivative, Where,
};
pub use envelope::EnvelopeMatrix;
pub use newton::{solve_stationary, Problem, SolveOptions, SolveReport};

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::{HalfDiscMesh, NodeTag};
use crate::scalar::{lit, Real, Vec3};

/// Nodal map `x: B+ -> R^3` on a half-disc mesh.
#[derive(Debug, Clone)]
pub struct DiscreteMap<T> {
    pub mesh: Arc<HalfDiscMesh<T>>,
    pub values: Vec<Vec3<T>>,
}

impl<T: Real> DiscreteMap<T> {
    pub fn new(mesh: Arc<HalfDiscMesh<T>>, values: Vec<Vec3<T>>) -> Result<Self> {
        if values.len() != mesh.node_count() {
            return Err(Error::InvalidInput(format!(
                "map has {} values for {} nodes",
                values.len(),
                mesh.node_count()
            )));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("map has non-finite entries".into()));
        }
        Ok(Self { mesh, values })
    }

    /// Samples `f(u, v)` at every node.
    pub fn from_fn(mesh: Arc<HalfDiscMesh<T>>, f: impl Fn(T, T) -> Vec3<T>) -> Self {
        let values = mesh.nodes().iter().map(|p| f(p[0], p[1])).collect();
        Self { mesh, values }
    }

    pub fn tags(&self) -> &[NodeTag] {
        &self.mesh.tags
    }
}

/// Boundary data on the arc `w = e^{i theta}`, `0 <= theta <= pi`, as
/// half-angle Fourier series: per component a list of
/// `(n, a, b)` meaning `a cos(n theta / 2) + b sin(n theta / 2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArcData<T> {
    pub components: [Vec<(u32, T, T)>; 3],
}

impl<T: Real> ArcData<T> {
    /// Trace of `x = (u, -v, 0)`.
    pub fn flat() -> Self {
        Self {
            components: [
                vec![(2, T::one(), T::zero())],
                vec![(2, T::zero(), -T::one())],
                vec![],
            ],
        }
    }

    pub fn eval(&self, theta: T) -> Vec3<T> {
        self.extend(T::one(), theta)
    }

    /// Harmonic extension `sum rho^{n/2} (a cos(n theta/2) + b sin(n theta/2))`.
    pub fn extend(&self, rho: T, theta: T) -> Vec3<T> {
        let half = lit::<T>(0.5);
        let mut out = [T::zero(); 3];
        for (k, terms) in self.components.iter().enumerate() {
            for &(n, a, b) in terms {
                let nh = T::from_usize_lossy(n as usize) * half;
                let r = if n == 0 { T::one() } else { rho.powf(nh) };
                let (s, c) = (nh * theta).sin_cos();
                out[k] += r * (a * c + b * s);
            }
        }
        out
    }

    /// Arc values at the fixed nodes, harmonic extension elsewhere.
    pub fn harmonic_map(&self, mesh: Arc<HalfDiscMesh<T>>) -> DiscreteMap<T> {
        DiscreteMap::from_fn(mesh, |u, v| {
            let w = Complex::new(u, v);
            self.extend(w.norm(), polar_angle(u, v))
        })
    }

    /// Radial blend `x = rho * arc(theta)`; agrees with the arc data on the
    /// arc and is far from any stationary map in general.
    pub fn radial_map(&self, mesh: Arc<HalfDiscMesh<T>>) -> DiscreteMap<T> {
        DiscreteMap::from_fn(mesh, |u, v| {
            let rho = (u * u + v * v).sqrt();
            let a = self.eval(polar_angle(u, v));
            [rho * a[0], rho * a[1], rho * a[2]]
        })
    }
}

/// Angle in `[0, pi]` for points of the closed upper half-plane; the negative
/// real axis maps to `pi`.
pub(crate) fn polar_angle<T: Real>(u: T, v: T) -> T {
    if v <= T::zero() {
        if u < T::zero() {
            T::PI()
        } else {
            T::zero()
        }
    } else {
        v.atan2(u)
    }
}
