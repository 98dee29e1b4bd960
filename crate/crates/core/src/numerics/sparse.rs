//! Compressed-row sparse matrices.

use crate::error::{Error, Result};

/// Square sparse matrix in compressed-row form with sorted, unique column
/// indices per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSystem {
    dim: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
    symmetric: bool,
}

/// Accumulates `(row, col, value)` contributions; duplicates are summed.
#[derive(Debug, Clone, Default)]
pub struct TripletBuilder {
    dim: usize,
    entries: Vec<(u64, f64)>,
}

impl TripletBuilder {
    pub fn new(dim: usize) -> Self {
        TripletBuilder {
            dim,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(dim: usize, cap: usize) -> Self {
        TripletBuilder {
            dim,
            entries: Vec::with_capacity(cap),
        }
    }

    #[inline]
    pub fn add(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.dim && col < self.dim);
        self.entries.push((((row as u64) << 32) | col as u64, value));
    }

    /// Builds the matrix. With `symmetric` set, the assembled values are
    /// checked against their transpose.
    pub fn build(mut self, symmetric: bool) -> Result<SparseSystem> {
        // Stable sort keeps summation order fixed for identical inputs.
        self.entries.sort_by_key(|e| e.0);
        let mut row_offsets = vec![0usize; self.dim + 1];
        let mut col_indices = Vec::with_capacity(self.entries.len() / 2);
        let mut values: Vec<f64> = Vec::with_capacity(self.entries.len() / 2);
        let mut last = u64::MAX;
        for &(key, v) in &self.entries {
            if key == last {
                *values.last_mut().unwrap() += v;
            } else {
                let row = (key >> 32) as usize;
                row_offsets[row + 1] += 1;
                col_indices.push((key & 0xffff_ffff) as usize);
                values.push(v);
                last = key;
            }
        }
        for r in 0..self.dim {
            row_offsets[r + 1] += row_offsets[r];
        }
        let m = SparseSystem {
            dim: self.dim,
            row_offsets,
            col_indices,
            values,
            symmetric,
        };
        if symmetric {
            let asym = m.asymmetry();
            let scale = m.max_abs();
            if asym > 1e-12 * scale {
                return Err(Error::invalid(format!(
                    "matrix flagged symmetric but |M - M^T|_max = {asym:e} (|M|_max = {scale:e})"
                )));
            }
        }
        Ok(m)
    }
}

impl SparseSystem {
    pub fn identity(dim: usize) -> Self {
        SparseSystem {
            dim,
            row_offsets: (0..=dim).collect(),
            col_indices: (0..dim).collect(),
            values: vec![1.0; dim],
            symmetric: true,
        }
    }

    /// Builds from a dense row-major matrix, dropping exact zeros.
    pub fn from_dense(rows: &[Vec<f64>], symmetric: bool) -> Result<Self> {
        let n = rows.len();
        let mut b = TripletBuilder::new(n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    b.add(i, j, v);
                }
            }
        }
        b.build(symmetric)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        let range = self.row_offsets[row]..self.row_offsets[row + 1];
        match self.col_indices[range.clone()].binary_search(&col) {
            Ok(pos) => self.values[range.start + pos],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    /// `y = M x`
    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.dim) {
            let mut s = 0.0;
            for p in self.row_offsets[i]..self.row_offsets[i + 1] {
                s += self.values[p] * x[self.col_indices[p]];
            }
            *yi = s;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |M - M^T|` over stored entries.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for p in self.row_offsets[i]..self.row_offsets[i + 1] {
                let j = self.col_indices[p];
                worst = worst.max((self.values[p] - self.get(j, i)).abs());
            }
        }
        worst
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Removes the mean so that `v` is orthogonal to the constants.
pub(crate) fn project_mean_zero(v: &mut [f64]) {
    if v.is_empty() {
        return;
    }
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= mean);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed() {
        let mut b = TripletBuilder::new(2);
        b.add(0, 0, 1.0);
        b.add(0, 0, 2.0);
        b.add(1, 0, 4.0);
        b.add(0, 1, 4.0);
        let m = b.build(true).unwrap();
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.get(0, 0), 3.0);
        assert_eq!(m.get(1, 1), 0.0);
        assert_eq!(m.mul_vec(&[1.0, 1.0]), vec![7.0, 4.0]);
    }

    #[test]
    fn symmetric_flag_is_checked() {
        let rows = vec![vec![2.0, 1.0], vec![0.0, 2.0]];
        assert!(SparseSystem::from_dense(&rows, true).is_err());
        let m = SparseSystem::from_dense(&rows, false).unwrap();
        assert_eq!(m.asymmetry(), 1.0);
    }
}
