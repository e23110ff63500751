use crate::error::{Error, Result};

/// Square sparse matrix in compressed-sparse-row layout with sorted columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseOperator {
    pub fn from_csr(row_offsets: Vec<usize>, col_indices: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let n = row_offsets.len().checked_sub(1).ok_or(Error::DimensionMismatch { expected: 1, found: 0 })?;
        if row_offsets[0] != 0 || row_offsets[n] != col_indices.len() || col_indices.len() != values.len() {
            return Err(Error::DimensionMismatch { expected: col_indices.len(), found: values.len() });
        }
        for row in 0..n {
            let cols = &col_indices[row_offsets[row]..row_offsets[row + 1]];
            if cols.windows(2).any(|w| w[0] >= w[1]) || cols.iter().any(|&c| c >= n) {
                return Err(Error::DimensionMismatch { expected: n, found: cols.last().copied().unwrap_or(0) });
            }
        }
        Ok(SparseOperator { row_offsets, col_indices, values })
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        SparseOperator {
            row_offsets: (0..=diag.len()).collect(),
            col_indices: (0..diag.len()).collect(),
            values: diag.to_vec(),
        }
    }

    pub fn dimension(&self) -> usize {
        self.row_offsets.len() - 1
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

    pub fn row(&self, row: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_offsets[row]..self.row_offsets[row + 1];
        self.col_indices[range.clone()].iter().copied().zip(self.values[range].iter().copied())
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.row(row).find(|&(c, _)| c == col).map_or(0.0, |(_, v)| v)
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.dimension()).map(|r| self.get(r, r)).collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dimension();
        let mut dense = vec![vec![0.0; n]; n];
        for (r, row) in dense.iter_mut().enumerate() {
            for (c, v) in self.row(r) {
                row[c] = v;
            }
        }
        dense
    }

    /// `out = self * x` on raw slices.
    pub fn mul_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dimension());
        for (r, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_offsets[r]..self.row_offsets[r + 1] {
                acc += self.values[k] * x[self.col_indices[k]];
            }
            *o = acc;
        }
    }

    pub fn mul(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dimension() {
            return Err(Error::DimensionMismatch { expected: self.dimension(), found: x.len() });
        }
        let mut out = vec![0.0; x.len()];
        self.mul_into(x, &mut out);
        Ok(out)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.dimension()).all(|r| self.row(r).all(|(c, v)| (self.get(c, r) - v).abs() <= tol * v.abs().max(1.0)))
    }

    /// Positive diagonal, nonpositive off-diagonal, and row surplus
    /// `a_ii - Σ|a_ij|` of at least `min_surplus` in every row.
    pub fn is_m_matrix(&self, min_surplus: f64) -> bool {
        (0..self.dimension()).all(|r| {
            let mut diag = 0.0;
            let mut off = 0.0;
            for (c, v) in self.row(r) {
                if c == r {
                    diag = v;
                } else if v > 0.0 {
                    return false;
                } else {
                    off += -v;
                }
            }
            // the surplus is a difference of two sums of size diag
            diag > 0.0 && diag - off >= min_surplus - 64.0 * f64::EPSILON * diag.max(min_surplus)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csr_validation() {
        assert!(SparseOperator::from_csr(vec![0, 1, 2], vec![0, 1], vec![1.0, 2.0]).is_ok());
        assert!(SparseOperator::from_csr(vec![0, 2, 2], vec![1, 0], vec![1.0, 2.0]).is_err());
        assert!(SparseOperator::from_csr(vec![0, 1, 2], vec![0, 2], vec![1.0, 2.0]).is_err());
        assert!(SparseOperator::from_csr(vec![0, 1, 3], vec![0, 1], vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn mul_checks_dimension() {
        let op = SparseOperator::diagonal(&[1.0, 2.0]);
        assert_eq!(op.mul(&[3.0, 4.0]).unwrap(), vec![3.0, 8.0]);
        assert!(matches!(op.mul(&[1.0]), Err(Error::DimensionMismatch { expected: 2, found: 1 })));
    }
}
