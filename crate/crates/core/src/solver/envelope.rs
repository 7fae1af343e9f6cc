//! Symmetric positive definite matrices in envelope (skyline) storage with
//! an in-place Cholesky factorization.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Lower triangle stored row by row from the first structurally nonzero
/// column of each row to the diagonal.
#[derive(Debug, Clone)]
pub struct EnvelopeMatrix<T> {
    first: Vec<usize>,
    offset: Vec<usize>,
    data: Vec<T>,
    factored: bool,
}

impl<T: Real> EnvelopeMatrix<T> {
    /// `first[i] <= i` is the first stored column of row `i`.
    pub fn with_profile(first: Vec<usize>) -> Self {
        let mut offset = Vec::with_capacity(first.len() + 1);
        let mut total = 0;
        for (i, &f) in first.iter().enumerate() {
            assert!(f <= i, "profile column beyond diagonal");
            offset.push(total);
            total += i - f + 1;
        }
        offset.push(total);
        Self {
            first,
            offset,
            data: vec![T::zero(); total],
            factored: false,
        }
    }

    /// Profile from a list of structurally nonzero `(row, col)` pairs.
    pub fn from_pattern(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut first: Vec<usize> = (0..n).collect();
        for (i, j) in pairs {
            let (r, c) = if i >= j { (i, j) } else { (j, i) };
            first[r] = first[r].min(c);
        }
        Self::with_profile(first)
    }

    pub fn dim(&self) -> usize {
        self.first.len()
    }

    pub fn stored(&self) -> usize {
        self.data.len()
    }

    fn idx(&self, i: usize, j: usize) -> Option<usize> {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        (c >= self.first[r]).then(|| self.offset[r] + c - self.first[r])
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.idx(i, j).map_or(T::zero(), |k| self.data[k])
    }

    /// Adds to the symmetric pair `(i, j), (j, i)`; entries outside the
    /// profile are an error.
    pub fn add(&mut self, i: usize, j: usize, v: T) -> Result<()> {
        let k = self
            .idx(i, j)
            .ok_or_else(|| Error::InvalidInput(format!("entry ({i}, {j}) outside profile")))?;
        self.data[k] += v;
        Ok(())
    }

    pub fn add_diagonal(&mut self, shift: T) {
        for i in 0..self.dim() {
            let k = self.offset[i] + i - self.first[i];
            self.data[k] += shift;
        }
    }

    pub fn max_diagonal(&self) -> T {
        (0..self.dim()).fold(T::zero(), |m, i| m.max(self.get(i, i).abs()))
    }

    /// Overwrites the matrix with its Cholesky factor `L`.
    pub fn factor(&mut self) -> Result<()> {
        if self.factored {
            return Err(Error::InvalidInput("matrix already factored".into()));
        }
        let n = self.dim();
        for i in 0..n {
            let fi = self.first[i];
            for j in fi..=i {
                let fj = self.first[j];
                let start = fi.max(fj);
                let mut s = self.data[self.offset[i] + j - fi];
                let ri = self.offset[i] + start - fi;
                let rj = self.offset[j] + start - fj;
                for k in 0..(j - start) {
                    s -= self.data[ri + k] * self.data[rj + k];
                }
                if j < i {
                    let d = self.data[self.offset[j] + j - fj];
                    self.data[self.offset[i] + j - fi] = s / d;
                } else {
                    if !(s > T::zero()) {
                        return Err(Error::Singular(format!("pivot {i} is {s}")));
                    }
                    self.data[self.offset[i] + i - fi] = s.sqrt();
                }
            }
        }
        self.factored = true;
        Ok(())
    }

    /// Solves `A x = b` with a factored matrix.
    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        if !self.factored {
            return Err(Error::InvalidInput("matrix not factored".into()));
        }
        let n = self.dim();
        let mut y = b.to_vec();
        for i in 0..n {
            let fi = self.first[i];
            let mut s = y[i];
            for j in fi..i {
                s -= self.data[self.offset[i] + j - fi] * y[j];
            }
            y[i] = s / self.data[self.offset[i] + i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            y[i] /= self.data[self.offset[i] + i - fi];
            let yi = y[i];
            for j in fi..i {
                y[j] -= self.data[self.offset[i] + j - fi] * yi;
            }
        }
        Ok(y)
    }
}
