use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Fitted Hölder exponent with the constant and the distance window used.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderEstimate<T> {
    pub alpha: T,
    pub seminorm: T,
    pub fit_r2: T,
    pub window: (T, T),
    pub samples: usize,
    /// Every difference fell below the resolution floor; `alpha` is then
    /// reported as 1 without a fit.
    pub unresolved: bool,
}

/// Values whose pairwise differences enter a Hölder quotient.
pub trait HolderValue<T> {
    fn distance(&self, other: &Self) -> T;
}

impl HolderValue<f64> for f64 {
    fn distance(&self, other: &Self) -> f64 {
        (self - other).abs()
    }
}

impl HolderValue<f32> for f32 {
    fn distance(&self, other: &Self) -> f32 {
        (self - other).abs()
    }
}

impl<T: Real> HolderValue<T> for Complex<T> {
    fn distance(&self, other: &Self) -> T {
        (self - other).norm()
    }
}

impl<T: Real, const N: usize> HolderValue<T> for [T; N] {
    fn distance(&self, other: &Self) -> T {
        self.iter()
            .zip(other)
            .map(|(a, b)| (*a - *b) * (*a - *b))
            .sum::<T>()
            .sqrt()
    }
}

impl<T: Real> HolderValue<T> for Vec<T> {
    fn distance(&self, other: &Self) -> T {
        self.iter()
            .zip(other)
            .map(|(a, b)| (*a - *b) * (*a - *b))
            .sum::<T>()
            .sqrt()
    }
}

/// Minimum number of sample pairs inside the window.
pub const MIN_PAIRS: usize = 10;

/// Pairwise supremum of `|f(w1) - f(w2)| / |w1 - w2|^alpha` over pairs whose
/// distance lies in `window = (lo, hi)`.
pub fn holder_norm<T: Real, V: HolderValue<T>>(
    samples: &[(Complex<T>, V)],
    alpha: T,
    window: (T, T),
) -> Result<T> {
    let (lo, hi) = window;
    let mut sup = T::zero();
    let mut pairs = 0usize;
    for (i, (wi, fi)) in samples.iter().enumerate() {
        for (wj, fj) in &samples[i + 1..] {
            let d = (wi - wj).norm();
            if d < lo || d > hi || d.is_zero() {
                continue;
            }
            pairs += 1;
            sup = sup.max(fi.distance(fj) / d.powf(alpha));
        }
    }
    if pairs < MIN_PAIRS {
        return Err(Error::InvalidInput(format!(
            "{pairs} sample pairs in distance window [{}, {}], need {MIN_PAIRS}",
            lo.to_f64_lossy(),
            hi.to_f64_lossy()
        )));
    }
    Ok(sup)
}
