//! Block-sparse matrices with dense blocks of per-cell size.

use nalgebra::DMatrix;
use rayon::prelude::*;

/// Block CSR matrix. Row block `i` covers unknowns `offsets[i]..offsets[i+1]`;
/// columns use the same partition.
#[derive(Clone, Debug)]
pub struct BlockSparse {
    pub offsets: Vec<usize>,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub blocks: Vec<DMatrix<f64>>,
}

impl BlockSparse {
    /// Zero matrix with the given (sorted, deduplicated) column lists per row.
    pub fn with_pattern(offsets: Vec<usize>, pattern: &[Vec<usize>]) -> Self {
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut blocks = Vec::new();
        for (i, row) in pattern.iter().enumerate() {
            let ni = offsets[i + 1] - offsets[i];
            for &j in row {
                cols.push(j);
                blocks.push(DMatrix::zeros(ni, offsets[j + 1] - offsets[j]));
            }
            row_ptr.push(cols.len());
        }
        BlockSparse { offsets, row_ptr, cols, blocks }
    }

    pub fn n_block_rows(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn block_index(&self, row: usize, col: usize) -> Option<usize> {
        let r = self.row_ptr[row]..self.row_ptr[row + 1];
        self.cols[r.clone()].binary_search(&col).ok().map(|p| r.start + p)
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let rows: Vec<Vec<f64>> = (0..self.n_block_rows())
            .into_par_iter()
            .map(|i| {
                let mut yi = vec![0.0; self.offsets[i + 1] - self.offsets[i]];
                for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                    let j = self.cols[p];
                    let b = &self.blocks[p];
                    let xj = &x[self.offsets[j]..self.offsets[j + 1]];
                    for c in 0..b.ncols() {
                        let v = xj[c];
                        if v != 0.0 {
                            for (r, y) in yi.iter_mut().enumerate() {
                                *y += b[(r, c)] * v;
                            }
                        }
                    }
                }
                yi
            })
            .collect();
        rows.concat()
    }

    /// Nonzero entries as `(row, col, value)` triplets in row-major order.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for i in 0..self.n_block_rows() {
            for r in 0..self.offsets[i + 1] - self.offsets[i] {
                for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                    let j = self.cols[p];
                    let b = &self.blocks[p];
                    for c in 0..b.ncols() {
                        if b[(r, c)] != 0.0 {
                            out.push((self.offsets[i] + r, self.offsets[j] + c, b[(r, c)]));
                        }
                    }
                }
            }
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for (r, c, v) in self.triplets() {
            m[(r, c)] = v;
        }
        m
    }
}
