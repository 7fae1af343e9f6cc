use std::f64::consts::PI;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::vekua::{bvp_residuals, solve_disc_bvp, vekua_t, DiscField};

pub const SELFTEST_RESOLUTIONS: [usize; 3] = [16, 32, 64];
/// Required residual reduction per grid halving.
pub const REFINEMENT_FACTOR: f64 = 1.5;
pub const T_ONE_REL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfTestRow {
    pub n: usize,
    /// `max |T[0](w)|` over the probe points.
    pub t_zero_max: f64,
    /// `max |T[1](w) - conj(w)| / |w|` over ten interior points.
    pub t_one_rel_max: f64,
    pub interior_residual: f64,
    pub boundary_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfTest {
    pub rows: Vec<SelfTestRow>,
    pub t_zero_exact: bool,
    pub t_one_within_tol: bool,
    pub interior_decreasing: bool,
    pub boundary_decreasing: bool,
}

impl SelfTest {
    pub fn passed(&self) -> bool {
        self.t_zero_exact && self.t_one_within_tol && self.interior_decreasing && self.boundary_decreasing
    }
}

/// Interior points `0.05 + 0.09 k` at angles `0.7 k`.
pub fn t_one_points() -> Vec<Complex<f64>> {
    (0..10).map(|k| Complex::from_polar(0.05 + 0.09 * k as f64, 0.7 * k as f64)).collect()
}

fn boundary_data(t: f64) -> f64 {
    t.sin().abs().powi(3)
}

/// Operator residuals on polar grids `n x n`: the density
/// `g = cos(u) + i v^2` and boundary data `|sin t|^3`.
pub fn vekua_selftest(resolutions: &[usize]) -> Result<SelfTest> {
    let mut rows = Vec::with_capacity(resolutions.len());
    for &n in resolutions {
        let zero = DiscField::<f64>::zero(n, n)?;
        let one = DiscField::from_fn(n, n, |_| Complex::new(1.0, 0.0))?;
        let mut t_zero_max = 0.0f64;
        let mut t_one_rel_max = 0.0f64;
        for w in t_one_points() {
            t_zero_max = t_zero_max.max(vekua_t(&zero, w)?.norm());
            t_one_rel_max = t_one_rel_max.max((vekua_t(&one, w)? - w.conj()).norm() / w.norm());
        }
        let g = DiscField::from_fn(n, n, |z: Complex<f64>| Complex::new(z.re.cos(), z.im * z.im))?;
        let h: Vec<f64> = (0..n).map(|j| boundary_data(2.0 * PI * j as f64 / n as f64)).collect();
        let z = solve_disc_bvp(&g, &h)?;
        let r = bvp_residuals(&z, &g, boundary_data, 1.0 / n as f64);
        rows.push(SelfTestRow {
            n,
            t_zero_max,
            t_one_rel_max,
            interior_residual: r.interior,
            boundary_residual: r.boundary,
        });
    }
    let decreasing = |f: fn(&SelfTestRow) -> f64| rows.windows(2).all(|p| f(&p[0]) >= REFINEMENT_FACTOR * f(&p[1]));
    Ok(SelfTest {
        t_zero_exact: rows.iter().all(|r| r.t_zero_max == 0.0),
        t_one_within_tol: rows.iter().all(|r| r.t_one_rel_max <= T_ONE_REL_TOL),
        interior_decreasing: decreasing(|r| r.interior_residual),
        boundary_decreasing: decreasing(|r| r.boundary_residual),
        rows,
    })
}
