//! Small dense helpers.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn solve_dense<T: Real>(mut a: Vec<Vec<T>>, mut b: Vec<T>) -> Result<Vec<T>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        if !(a[piv][col].abs() > T::min_positive_value()) {
            return Err(Error::Singular(format!("zero pivot in column {col}")));
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f.is_zero() {
                continue;
            }
            for c in col..n {
                let v = a[col][c];
                a[r][c] -= f * v;
            }
            let v = b[col];
            b[r] -= f * v;
        }
    }
    for r in (0..n).rev() {
        let mut s = b[r];
        for c in r + 1..n {
            s -= a[r][c] * b[c];
        }
        b[r] = s / a[r][r];
    }
    Ok(b)
}

/// Inverse of a complex 3x3 matrix by Gauss–Jordan elimination with partial
/// pivoting.
pub fn inverse3<T: Real>(m: &[[Complex<T>; 3]; 3]) -> Result<[[Complex<T>; 3]; 3]> {
    let zero = Complex::new(T::zero(), T::zero());
    let one = Complex::new(T::one(), T::zero());
    let mut a = *m;
    let mut inv = [[zero; 3]; 3];
    for (i, row) in inv.iter_mut().enumerate() {
        row[i] = one;
    }
    for col in 0..3 {
        let piv = (col..3)
            .max_by(|&i, &j| a[i][col].norm().partial_cmp(&a[j][col].norm()).unwrap())
            .unwrap();
        if !(a[piv][col].norm() > T::min_positive_value()) {
            return Err(Error::Singular("matrix is singular".into()));
        }
        a.swap(col, piv);
        inv.swap(col, piv);
        let d = a[col][col];
        for c in 0..3 {
            a[col][c] = a[col][c] / d;
            inv[col][c] = inv[col][c] / d;
        }
        for r in 0..3 {
            if r != col {
                let f = a[r][col];
                for c in 0..3 {
                    let (ac, ic) = (a[col][c], inv[col][c]);
                    a[r][c] = a[r][c] - f * ac;
                    inv[r][c] = inv[r][c] - f * ic;
                }
            }
        }
    }
    Ok(inv)
}

/// Least-squares line `y = intercept + slope x` with its coefficient of
/// determination.
pub fn fit_line<T: Real>(x: &[T], y: &[T]) -> Result<(T, T, T)> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return Err(Error::InvalidInput("line fit needs at least two points".into()));
    }
    let nf = T::from_usize_lossy(n);
    let mx = x.iter().copied().sum::<T>() / nf;
    let my = y.iter().copied().sum::<T>() / nf;
    let (mut sxx, mut sxy, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&a, &b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
        syy += (b - my) * (b - my);
    }
    if !(sxx > T::zero()) {
        return Err(Error::InvalidInput("line fit needs distinct abscissae".into()));
    }
    let slope = sxy / sxx;
    let r2 = if syy > T::zero() {
        (sxy * sxy / (sxx * syy)).min(T::one())
    } else {
        T::one()
    };
    Ok((my - slope * mx, slope, r2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_solve() {
        let a = vec![vec![0.0, 2.0, 1.0], vec![1.0, 1.0, 0.0], vec![3.0, 0.0, 1.0]];
        let x = solve_dense(a.clone(), vec![5.0, 3.0, 6.0]).unwrap();
        for (row, b) in a.iter().zip([5.0, 3.0, 6.0]) {
            let r: f64 = row.iter().zip(&x).map(|(p, q)| p * q).sum();
            assert!((r - b).abs() < 1e-14);
        }
        assert!(solve_dense(vec![vec![1.0, 2.0], vec![2.0, 4.0]], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn complex_inverse() {
        let c = |a: f64, b: f64| Complex::new(a, b);
        let m = [
            [c(0.0, 0.0), c(0.0, 0.0), c(0.0, 1.0)],
            [c(1.0, 0.0), c(0.5, -0.2), c(0.0, 0.0)],
            [c(0.3, 0.1), c(1.0, 0.0), c(2.0, 0.0)],
        ];
        let inv = inverse3(&m).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let s: Complex<f64> = (0..3).map(|k| m[i][k] * inv[k][j]).sum();
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((s - c(e, 0.0)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn line_fit() {
        let x = [1.0f64, 2.0, 3.0, 4.0];
        let y = x.map(|v| 0.5 - 2.0 * v);
        let (i, s, r2) = fit_line(&x, &y).unwrap();
        assert!((i - 0.5).abs() < 1e-14 && (s + 2.0).abs() < 1e-14 && (r2 - 1.0).abs() < 1e-14);
    }
}
