//! Cauchy-kernel area integrals on the unit disc, the Schwarz problem and
//! the disc boundary value problem `z_wbar = g`, `Im z = h` on the circle.

mod fourier;
mod holder;

use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use num_complex::Complex;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;
use crate::scalar::{lit, Real};

pub use fourier::{schwarz_series, HolomorphicSeries, TAIL_WARNING};
pub use holder::{holder_norm, HolderEstimate, HolderValue, MIN_PAIRS};

type C<T> = Complex<T>;

/// Closure evaluating a field at an arbitrary point.
pub type Evaluator<T> = Arc<dyn Fn(C<T>) -> C<T> + Send + Sync>;

/// Default number of Fourier modes for boundary data.
pub const DEFAULT_MODES: usize = 64;

/// Quadrature tolerance for fields given by a closure.
pub const SMOOTH_TOL: f64 = 1e-12;

/// Quadrature tolerance for fields given only by grid samples.
pub const SAMPLED_TOL: f64 = 1e-9;

const ANGLE_PANELS: usize = 8;

/// Complex field on the closed unit disc with samples on a polar grid of
/// `n_r + 1` rings (radius `i / n_r`, ring 0 the centre) by `n_theta` angles.
#[derive(Clone)]
pub struct DiscField<T: Real> {
    n_r: usize,
    n_theta: usize,
    eval: Option<Evaluator<T>>,
    samples: Arc<OnceLock<Vec<C<T>>>>,
}

impl<T: Real> fmt::Debug for DiscField<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DiscField")
            .field("n_r", &self.n_r)
            .field("n_theta", &self.n_theta)
            .field("closure", &self.eval.is_some())
            .finish()
    }
}

fn check_grid(n_r: usize, n_theta: usize) -> Result<()> {
    if n_r == 0 || n_theta < 3 {
        return Err(Error::InvalidInput(format!(
            "polar grid needs n_r >= 1 and n_theta >= 3, got {n_r} x {n_theta}"
        )));
    }
    Ok(())
}

impl<T: Real> DiscField<T> {
    pub fn from_fn(
        n_r: usize,
        n_theta: usize,
        f: impl Fn(C<T>) -> C<T> + Send + Sync + 'static,
    ) -> Result<Self> {
        check_grid(n_r, n_theta)?;
        Ok(Self {
            n_r,
            n_theta,
            eval: Some(Arc::new(f)),
            samples: Arc::new(OnceLock::new()),
        })
    }

    /// Field known only through its samples, ring by ring; evaluation is
    /// bilinear in `(r, theta)`.
    pub fn from_samples(n_r: usize, n_theta: usize, values: Vec<C<T>>) -> Result<Self> {
        check_grid(n_r, n_theta)?;
        if values.len() != (n_r + 1) * n_theta {
            return Err(Error::InvalidInput(format!(
                "expected {} samples, got {}",
                (n_r + 1) * n_theta,
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::InvalidInput(format!("non-finite sample at index {k}")));
        }
        let cell = OnceLock::new();
        let _ = cell.set(values);
        Ok(Self { n_r, n_theta, eval: None, samples: Arc::new(cell) })
    }

    pub fn zero(n_r: usize, n_theta: usize) -> Result<Self> {
        Self::from_fn(n_r, n_theta, |_| C::new(T::zero(), T::zero()))
    }

    pub fn n_r(&self) -> usize {
        self.n_r
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    /// Radial grid spacing.
    pub fn spacing(&self) -> T {
        T::one() / T::from_usize_lossy(self.n_r)
    }

    pub fn has_closure(&self) -> bool {
        self.eval.is_some()
    }

    pub fn node(&self, ring: usize, k: usize) -> C<T> {
        let r = T::from_usize_lossy(ring) / T::from_usize_lossy(self.n_r);
        let t = lit::<T>(2.0 * PI) * T::from_usize_lossy(k) / T::from_usize_lossy(self.n_theta);
        C::from_polar(r, t)
    }

    /// Grid samples, computed on first use for closure fields.
    pub fn samples(&self) -> &[C<T>] {
        self.samples.get_or_init(|| {
            let f = self.eval.as_ref().expect("closure field");
            (0..(self.n_r + 1) * self.n_theta)
                .into_par_iter()
                .map(|idx| f(self.node(idx / self.n_theta, idx % self.n_theta)))
                .collect()
        })
    }

    pub fn eval(&self, w: C<T>) -> C<T> {
        match &self.eval {
            Some(f) => f(w),
            None => self.interpolate(w),
        }
    }

    fn interpolate(&self, w: C<T>) -> C<T> {
        let s = self.samples();
        let fr = (w.norm().min(T::one()) * T::from_usize_lossy(self.n_r)).max(T::zero());
        let i = fr.floor().to_usize().unwrap_or(0).min(self.n_r - 1);
        let a = fr - T::from_usize_lossy(i);
        let mut th = w.im.atan2(w.re);
        if th < T::zero() {
            th = th + lit(2.0 * PI);
        }
        let ft = th / lit(2.0 * PI) * T::from_usize_lossy(self.n_theta);
        let j = ft.floor().to_usize().unwrap_or(0) % self.n_theta;
        let b = ft - ft.floor();
        let j1 = (j + 1) % self.n_theta;
        let at = |ring: usize, k: usize| s[ring * self.n_theta + k];
        let one = T::one();
        at(i, j) * ((one - a) * (one - b))
            + at(i + 1, j) * (a * (one - b))
            + at(i, j1) * ((one - a) * b)
            + at(i + 1, j1) * (a * b)
    }

    fn tolerance(&self) -> T {
        lit(if self.has_closure() { SMOOTH_TOL } else { SAMPLED_TOL })
    }

    fn check_finite(&self) -> Result<()> {
        if let Some(k) = self.samples().iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::InvalidInput(format!("non-finite field sample at index {k}")));
        }
        Ok(())
    }
}

/// `int_B f(zeta) / (zeta - w) dA` in polar coordinates centred at `w`,
/// where the kernel times the area element is bounded.
fn cauchy_area_integral<T: Real>(f: &dyn Fn(C<T>) -> C<T>, w: C<T>, tol: T) -> C<T> {
    let gl = GaussLegendre::<T>::new(10);
    let depth = 24;
    let r2 = w.norm_sqr();
    let zero = C::new(T::zero(), T::zero());
    let chord = |e: C<T>, lo: T, hi: T| {
        if hi <= lo {
            return zero;
        }
        gl.integrate_adaptive(lo, hi, tol, depth, &mut |rho: T| f(w + e * rho)) * e.conj()
    };
    if r2 <= T::one() {
        let gap = (T::one() - r2).max(T::zero());
        let mut inner = |phi: T| {
            let e = C::from_polar(T::one(), phi);
            let b = (w.conj() * e).re;
            chord(e, T::zero(), -b + (b * b + gap).sqrt())
        };
        let step = lit::<T>(2.0 * PI) / T::from_usize_lossy(ANGLE_PANELS);
        (0..ANGLE_PANELS)
            .map(|k| {
                let a = step * T::from_usize_lossy(k);
                gl.integrate_adaptive(a, a + step, tol, depth, &mut inner)
            })
            .fold(zero, |s, v| s + v)
    } else {
        // Rays from an exterior point meet the disc within a cone; the
        // substitution phi = phic + beta sin t smooths the chord length.
        let rw = r2.sqrt();
        let phic = (-w.im).atan2(-w.re);
        let beta = (T::one() / rw).asin();
        let mut inner = |t: T| {
            let phi = phic + beta * t.sin();
            let e = C::from_polar(T::one(), phi);
            let b = (w.conj() * e).re;
            let s = (b * b - r2 + T::one()).max(T::zero()).sqrt();
            chord(e, -b - s, -b + s) * (beta * t.cos())
        };
        let half = lit::<T>(PI / 2.0);
        let step = lit::<T>(PI / 4.0);
        (0..4)
            .map(|k| {
                let a = -half + step * T::from_usize_lossy(k);
                gl.integrate_adaptive(a, a + step, tol, depth, &mut inner)
            })
            .fold(zero, |s, v| s + v)
    }
}

/// Vekua operator `T[g](w) = -(1/pi) int_B g(zeta) / (zeta - w) dA`.
pub fn vekua_t<T: Real>(g: &DiscField<T>, w: C<T>) -> Result<C<T>> {
    if !(w.re.is_finite() && w.im.is_finite()) {
        return Err(Error::InvalidInput("non-finite evaluation point".into()));
    }
    let v = cauchy_area_integral(&|z| g.eval(z), w, g.tolerance()) * (-T::FRAC_1_PI());
    if !(v.re.is_finite() && v.im.is_finite()) {
        return Err(Error::InvalidInput("non-finite values of g".into()));
    }
    Ok(v)
}

/// Holomorphic field with `Im = h` on the circle, sampled on an
/// `n_r x n_theta` grid.
pub fn schwarz_solve<T: Real>(h: &[T], n_r: usize, n_theta: usize) -> Result<DiscField<T>> {
    let s = schwarz_series(h, DEFAULT_MODES)?;
    DiscField::from_fn(n_r, n_theta, move |w| s.eval(w))
}

#[derive(Clone, Debug, serde::Deserialize, Serialize)]
#[serde(default)]
pub struct BvpOptions<T> {
    pub modes: usize,
    /// Real constant spanning the kernel of the problem.
    pub z0: T,
}

impl<T: Real> Default for BvpOptions<T> {
    fn default() -> Self {
        Self { modes: DEFAULT_MODES, z0: T::zero() }
    }
}

/// Solves `z_wbar = g` in the disc with `Im z = h` on the circle, where `h`
/// is sampled at equally spaced angles starting at 0.
pub fn solve_disc_bvp<T: Real>(g: &DiscField<T>, h: &[T]) -> Result<DiscField<T>> {
    solve_disc_bvp_with(g, h, &BvpOptions::default())
}

pub fn solve_disc_bvp_with<T: Real>(
    g: &DiscField<T>,
    h: &[T],
    opts: &BvpOptions<T>,
) -> Result<DiscField<T>> {
    g.check_finite()?;
    let series = schwarz_series(h, opts.modes)?;
    let g = g.clone();
    let z0 = opts.z0;
    let tiny = lit::<T>(1e-300).max(T::min_positive_value());
    DiscField::from_fn(g.n_r, g.n_theta, move |w| {
        let tol = g.tolerance();
        let f = |z: C<T>| g.eval(z);
        let direct = cauchy_area_integral(&f, w, tol);
        // T[g](1/wbar) is anti-holomorphic in w and equals T[g](w) on the
        // circle, so the sum below is real there.
        let mirrored = if w.norm_sqr() > tiny {
            cauchy_area_integral(&f, w / w.norm_sqr(), tol)
        } else {
            C::new(T::zero(), T::zero())
        };
        let t = (direct + mirrored.conj()) * (-T::FRAC_1_PI());
        series.eval(w) + t + z0
    })
}

/// Centred finite difference of `d/dwbar = (d/du + i d/dv) / 2`.
pub fn dbar_fd<T: Real>(f: &dyn Fn(C<T>) -> C<T>, w: C<T>, step: T) -> C<T> {
    let du = (f(w + C::new(step, T::zero())) - f(w - C::new(step, T::zero()))) / (step + step);
    let dv = (f(w + C::new(T::zero(), step)) - f(w - C::new(T::zero(), step))) / (step + step);
    (du + dv * C::new(T::zero(), T::one())) * lit::<T>(0.5)
}

/// Interior check points: four radii in (0, 0.8] times eight angles.
pub fn interior_probes<T: Real>() -> Vec<C<T>> {
    let mut out = Vec::with_capacity(32);
    for r in [0.15, 0.35, 0.55, 0.75] {
        for k in 0..8 {
            let t = 2.0 * PI * (k as f64 + 0.3) / 8.0;
            out.push(C::from_polar(lit(r), lit(t)));
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BvpResiduals<T> {
    /// Max `|z_wbar - g|` over interior probes, by centred differences.
    pub interior: T,
    /// Max `|Im z - h|` over 64 boundary points between sample angles.
    pub boundary: T,
    pub step: T,
}

pub fn bvp_residuals<T: Real>(
    z: &DiscField<T>,
    g: &DiscField<T>,
    h: impl Fn(T) -> T + Sync,
    step: T,
) -> BvpResiduals<T> {
    let interior = interior_probes::<T>()
        .par_iter()
        .map(|&w| (dbar_fd(&|p| z.eval(p), w, step) - g.eval(w)).norm())
        .collect::<Vec<_>>()
        .into_iter()
        .fold(T::zero(), T::max);
    let boundary = (0..64)
        .into_par_iter()
        .map(|k| {
            let t = lit::<T>(2.0 * PI * (k as f64 + 0.5) / 64.0);
            (z.eval(C::from_polar(T::one(), t)).im - h(t)).abs()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(T::zero(), T::max);
    BvpResiduals { interior, boundary, step }
}

/// Split of a field into a holomorphic part and the Vekua transform of its
/// `wbar`-derivative.
#[derive(Clone, Debug)]
pub struct PompeiuSplit<T: Real> {
    pub holomorphic: DiscField<T>,
    pub t_part: DiscField<T>,
    /// Max Cauchy-Riemann defect of the holomorphic part over the probes.
    pub residual: T,
}

pub fn pompeiu_decompose<T: Real>(field: &DiscField<T>, dwbar: &DiscField<T>) -> Result<PompeiuSplit<T>> {
    field.check_finite()?;
    dwbar.check_finite()?;
    let step = field.spacing().min(lit(0.01));
    let scale = dwbar.samples().iter().map(|v| v.norm()).fold(T::zero(), T::max);
    let allowed = (lit::<T>(1e-3)).max(lit::<T>(4.0) * field.spacing()) * (T::one() + scale);
    let probes = interior_probes::<T>();
    for (k, &w) in probes.iter().enumerate().step_by(3) {
        let fd = dbar_fd(&|p| field.eval(p), w, step);
        if (fd - dwbar.eval(w)).norm() > allowed {
            return Err(Error::InvalidInput(format!(
                "wbar-derivative samples inconsistent with the field at probe {k}"
            )));
        }
    }
    let g = dwbar.clone();
    let t_part = DiscField::from_fn(field.n_r, field.n_theta, move |w| {
        vekua_t(&g, w).unwrap_or(C::new(T::nan(), T::nan()))
    })?;
    let (f, t) = (field.clone(), t_part.clone());
    let holomorphic = DiscField::from_fn(field.n_r, field.n_theta, move |w| f.eval(w) - t.eval(w))?;
    let residual = probes
        .par_iter()
        .map(|&w| dbar_fd(&|p| holomorphic.eval(p), w, step).norm())
        .collect::<Vec<_>>()
        .into_iter()
        .fold(T::zero(), T::max);
    Ok(PompeiuSplit { holomorphic, t_part, residual })
}
