//! Block incomplete LU factorization with zero fill-in.

use nalgebra::{DMatrix, DVector};

use super::sparse::BlockSparse;
use crate::error::{Error, Result};

/// `L` (unit block-lower, stored as `A_ik U_kk^{-1}`) and `U` on the sparsity
/// pattern of the input matrix, plus inverted diagonal blocks of `U`.
pub struct BlockIlu {
    factors: BlockSparse,
    diag_inv: Vec<DMatrix<f64>>,
}

impl BlockIlu {
    pub fn new(a: &BlockSparse) -> Result<Self> {
        let mut f = a.clone();
        let n = f.n_block_rows();
        let mut diag_inv: Vec<DMatrix<f64>> = Vec::with_capacity(n);
        for i in 0..n {
            let range = f.row_ptr[i]..f.row_ptr[i + 1];
            for p in range.clone() {
                let k = f.cols[p];
                if k >= i {
                    break;
                }
                f.blocks[p] = &f.blocks[p] * &diag_inv[k];
                for q in range.clone() {
                    let j = f.cols[q];
                    if j <= k {
                        continue;
                    }
                    if let Some(kj) = f.block_index(k, j) {
                        let upd = &f.blocks[p] * &f.blocks[kj];
                        f.blocks[q] -= upd;
                    }
                }
            }
            let d = f.block_index(i, i).ok_or(Error::SingularBlock(i))?;
            let inv = f.blocks[d].clone().try_inverse().ok_or(Error::SingularBlock(i))?;
            if inv.iter().any(|v| !v.is_finite()) {
                return Err(Error::SingularBlock(i));
            }
            diag_inv.push(inv);
        }
        Ok(BlockIlu { factors: f, diag_inv })
    }

    /// Apply `(LU)^{-1}` to `b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let f = &self.factors;
        let n = f.n_block_rows();
        let mut y = b.to_vec();
        for i in 0..n {
            let (o0, o1) = (f.offsets[i], f.offsets[i + 1]);
            for p in f.row_ptr[i]..f.row_ptr[i + 1] {
                let k = f.cols[p];
                if k >= i {
                    break;
                }
                let b = &f.blocks[p];
                for c in 0..b.ncols() {
                    let v = y[f.offsets[k] + c];
                    if v != 0.0 {
                        for r in 0..(o1 - o0) {
                            y[o0 + r] -= b[(r, c)] * v;
                        }
                    }
                }
            }
        }
        for i in (0..n).rev() {
            let (o0, o1) = (f.offsets[i], f.offsets[i + 1]);
            let mut rhs = DVector::from_column_slice(&y[o0..o1]);
            for p in f.row_ptr[i]..f.row_ptr[i + 1] {
                let j = f.cols[p];
                if j <= i {
                    continue;
                }
                rhs -= &f.blocks[p] * DVector::from_column_slice(&y[f.offsets[j]..f.offsets[j + 1]]);
            }
            let x = &self.diag_inv[i] * rhs;
            y[o0..o1].copy_from_slice(x.as_slice());
        }
        y
    }
}
