use crate::error::{Error, Result};
use crate::vec3::{Vec3, ZERO};

/// Square sparse matrix in compressed sparse row form.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from `(row, col, value)` triplets, summing duplicates.
    /// Duplicates are summed in insertion order, so equal input gives
    /// bitwise-equal output.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0; n + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..n {
            row_ptr[r + 1] += row_ptr[r];
        }
        CsrMatrix {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[span.clone()].binary_search(&j) {
            Ok(k) => self.values[span.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.row(i).map(|(_, v)| v).sum()
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        check_len(self.n, x.len())?;
        check_len(self.n, y.len())?;
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).map(|(j, a)| a * x[j]).sum();
        }
        Ok(())
    }

    /// Block-diagonal action on a 3-vector field: each component is
    /// multiplied independently.
    pub fn apply3(&self, x: &[Vec3], y: &mut [Vec3]) -> Result<()> {
        check_len(self.n, x.len())?;
        check_len(self.n, y.len())?;
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = ZERO;
            for (j, a) in self.row(i) {
                let xj = x[j];
                acc[0] += a * xj[0];
                acc[1] += a * xj[1];
                acc[2] += a * xj[2];
            }
            *yi = acc;
        }
        Ok(())
    }

    /// `sum_c x_c^T A y_c` over the three components.
    pub fn bilinear3(&self, x: &[Vec3], y: &[Vec3]) -> Result<f64> {
        check_len(self.n, x.len())?;
        check_len(self.n, y.len())?;
        let mut total = 0.0;
        for (i, xi) in x.iter().enumerate() {
            for (j, a) in self.row(i) {
                total += a * crate::vec3::dot(*xi, y[j]);
            }
        }
        Ok(total)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut dense = vec![vec![0.0; self.n]; self.n];
        for (i, row) in dense.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        dense
    }
}

fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch { expected, actual });
    }
    Ok(())
}
