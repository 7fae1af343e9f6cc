use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// Fits with normalized residual at or above this are rejected.
pub const MAX_FIT_RESIDUAL: f64 = 0.5;
/// The runner-up order is reported when its residual is within this factor
/// of the winner's.
pub const DOMINANCE_MARGIN: f64 = 1.1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionFit<T> {
    pub m: u32,
    pub a: [Complex<T>; 3],
    /// `|<a, a>| / |a|^2` with the complex bilinear product.
    pub isotropy_defect: T,
    pub fit_residual: T,
    pub w0: Complex<T>,
    pub runner_up: Option<(u32, T)>,
    pub window: (T, T),
}

/// Fits `x_w(w) ~ a (w - w0)^m` for `m = 1..=m_max` by least squares
/// weighted with `|w - w0|^(-2m)`, keeping the order of least normalized
/// residual.
pub fn fit_branch_expansion<T: Real>(
    samples: &[(Complex<T>, [Complex<T>; 3])],
    w0: Complex<T>,
    m_max: u32,
    window: Option<(T, T)>,
) -> Result<ExpansionFit<T>> {
    if m_max == 0 {
        return Err(Error::InvalidInput("m_max must be at least 1".into()));
    }
    let (lo, hi) = window.unwrap_or((T::zero(), T::infinity()));
    let pts: Vec<_> = samples
        .iter()
        .filter(|(w, _)| {
            let d = (w - w0).norm();
            d > T::zero() && d >= lo && d <= hi
        })
        .collect();
    let dmin = pts.iter().map(|(w, _)| (w - w0).norm()).fold(T::infinity(), T::min);
    let dmax = pts.iter().map(|(w, _)| (w - w0).norm()).fold(T::zero(), T::max);
    if pts.len() < 2 || dmax < dmin * lit(10.0) {
        return Err(Error::InvalidInput(format!(
            "fit samples must span a decade around w0 ({} samples)",
            pts.len()
        )));
    }
    let zero = Complex::new(T::zero(), T::zero());
    let n = T::from_usize_lossy(pts.len());
    let mut fits: Vec<(u32, [Complex<T>; 3], T)> = Vec::new();
    for m in 1..=m_max {
        let ys: Vec<[Complex<T>; 3]> = pts
            .iter()
            .map(|(w, xw)| {
                let p = (w - w0).powu(m);
                xw.map(|c| c / p)
            })
            .collect();
        let mut a = [zero; 3];
        for y in &ys {
            for k in 0..3 {
                a[k] = a[k] + y[k];
            }
        }
        let a = a.map(|c| c / n);
        let (mut num, mut den) = (T::zero(), T::zero());
        for y in &ys {
            for k in 0..3 {
                num += (y[k] - a[k]).norm_sqr();
                den += y[k].norm_sqr();
            }
        }
        let res = if den.is_zero() { T::infinity() } else { (num / den).sqrt() };
        fits.push((m, a, res));
    }
    fits.sort_by(|x, y| x.2.partial_cmp(&y.2).unwrap_or(std::cmp::Ordering::Equal).then(x.0.cmp(&y.0)));
    let (m, a, res) = fits[0];
    if !(res < lit(MAX_FIT_RESIDUAL)) {
        return Err(Error::NoExpansion { best_residual: res.to_f64_lossy() });
    }
    let runner_up = fits
        .get(1)
        .filter(|f| f.2 <= res * lit(DOMINANCE_MARGIN))
        .map(|f| (f.0, f.2));
    let aa = a.iter().fold(zero, |s, c| s + c * c);
    let norm = a.iter().map(|c| c.norm_sqr()).sum::<T>();
    Ok(ExpansionFit {
        m,
        a,
        isotropy_defect: aa.norm() / norm,
        fit_residual: res,
        w0,
        runner_up,
        window: (dmin, dmax),
    })
}
