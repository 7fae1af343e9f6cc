use num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// Tail ratio above which boundary data is reported as rough.
pub const TAIL_WARNING: f64 = 1e-3;

/// Holomorphic polynomial `f(w) = sum c_k w^k` whose imaginary part on the
/// unit circle interpolates the sampled boundary data.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct HolomorphicSeries<T> {
    pub coeffs: Vec<Complex<T>>,
    /// Largest coefficient in the upper quarter of modes over the largest
    /// coefficient overall.
    pub tail_ratio: T,
}

impl<T: Real> HolomorphicSeries<T> {
    pub fn eval(&self, w: Complex<T>) -> Complex<T> {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex::new(T::zero(), T::zero()), |acc, &c| acc * w + c)
    }

    pub fn modes(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }
}

/// Conjugate Fourier series of real samples `h(2 pi j / N)`, `j = 0..N`.
///
/// With `h = a_0 + sum a_k cos(k t) + b_k sin(k t)` the result is
/// `i a_0 + sum (b_k + i a_k) w^k`, whose real part has zero mean.
pub fn schwarz_series<T: Real>(h: &[T], modes: usize) -> Result<HolomorphicSeries<T>> {
    let n = h.len();
    if n == 0 {
        return Err(Error::InvalidInput("empty boundary data".into()));
    }
    if h.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite boundary sample".into()));
    }
    let mut buf: Vec<Complex<T>> = h.iter().map(|&v| Complex::new(v, T::zero())).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let scale = T::one() / T::from_usize_lossy(n);
    let kmax = modes.min((n - 1) / 2);
    let mut coeffs = Vec::with_capacity(kmax + 1);
    coeffs.push(Complex::new(T::zero(), buf[0].re * scale));
    let two = lit::<T>(2.0) * scale;
    for hk in buf.iter().take(kmax + 1).skip(1) {
        let (a, b) = (hk.re * two, -hk.im * two);
        coeffs.push(Complex::new(b, a));
    }
    let top = coeffs.iter().map(|c| c.norm()).fold(T::zero(), T::max);
    let tail_start = (3 * kmax).div_ceil(4).max(1);
    let tail = coeffs
        .iter()
        .skip(tail_start)
        .map(|c| c.norm())
        .fold(T::zero(), T::max);
    let tail_ratio = if top.is_zero() { T::zero() } else { tail / top };
    if kmax >= 4 && tail_ratio > lit(TAIL_WARNING) {
        log::warn!(
            "boundary data has a slowly decaying Fourier tail (ratio {:.3e}); Schwarz solution limited by truncation",
            tail_ratio.to_f64_lossy()
        );
    }
    Ok(HolomorphicSeries { coeffs, tail_ratio })
}
