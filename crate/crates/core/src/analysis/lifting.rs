use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// Square root of `g` along an ordered path, starting from the root of
/// `g[0]` nearest to `seed` and then choosing the root with the smaller
/// jump at every step.
///
/// Equal jumps are only resolved where the previous value is at the noise
/// floor: first by linear extrapolation of the last two values, then by
/// the principal root.
pub fn continuous_sqrt_branch<T: Real>(g: &[Complex<T>], seed: Complex<T>) -> Result<Vec<Complex<T>>> {
    if g.is_empty() {
        return Ok(Vec::new());
    }
    let scale = g.iter().map(|v| v.norm()).fold(T::zero(), T::max);
    let tol = lit::<T>(1e-10) * scale;
    for (k, v) in g.iter().enumerate() {
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite sample at {k}")));
        }
        if v.im.abs() > tol && v.re > tol {
            return Err(Error::InvalidInput(format!(
                "sample {k} has neither a real nor an imaginary square root"
            )));
        }
    }
    let noise = (lit::<T>(1e-12) * scale).sqrt();
    let nearest = |r: Complex<T>, target: Complex<T>| -> (Complex<T>, bool) {
        let (j1, j2) = ((r - target).norm(), (-r - target).norm());
        let tie = (j1 - j2).abs() <= lit::<T>(1e-9) * (j1 + j2);
        (if j1 <= j2 { r } else { -r }, tie)
    };
    let mut out = Vec::with_capacity(g.len());
    out.push(nearest(g[0].sqrt(), seed).0);
    for k in 1..g.len() {
        let r = g[k].sqrt();
        let prev = out[k - 1];
        let (pick, tie) = nearest(r, prev);
        let f = if !tie || r.norm() <= T::zero() {
            pick
        } else if prev.norm() > noise {
            return Err(Error::AmbiguousLifting { index: k });
        } else {
            let guess = if k >= 2 { prev + prev - out[k - 2] } else { prev };
            let (pick, tie) = nearest(r, guess);
            if tie { r } else { pick }
        };
        out.push(f);
    }
    Ok(out)
}
