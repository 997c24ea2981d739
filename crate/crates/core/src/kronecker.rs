//! Dense Kronecker products and the small helpers used to assemble structured
//! covariance matrices.

use nalgebra::{DMatrix, DVector};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Kronecker product `A ⊗ B`: block `(i, j)` of the result is `a_ij * B`.
pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let (m, n) = a.shape();
    let (p, q) = b.shape();
    let mut out = Matrix::zeros(m * p, n * q);
    for j in 0..n {
        for i in 0..m {
            let aij = a[(i, j)];
            if aij == 0.0 {
                continue;
            }
            for l in 0..q {
                for k in 0..p {
                    out[(i * p + k, j * q + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// `1_n` as an `n x 1` matrix.
pub fn ones_vector(n: usize) -> Matrix {
    Matrix::from_element(n, 1, 1.0)
}

/// `I_n`.
pub fn identity(n: usize) -> Matrix {
    Matrix::identity(n, n)
}

/// `1_n 1_n^T`.
pub fn ones_matrix(n: usize) -> Matrix {
    Matrix::from_element(n, n, 1.0)
}

/// `e_k e_k^T` of size `n` (0-based `k`).
pub fn unit_projector(n: usize, k: usize) -> Matrix {
    let mut m = Matrix::zeros(n, n);
    m[(k, k)] = 1.0;
    m
}

/// Symmetrizes in place: `S <- (S + S^T) / 2`.
pub fn symmetrize(s: &mut Matrix) {
    let n = s.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (s[(i, j)] + s[(j, i)]);
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
    }
}

/// Block-diagonal matrix from a list of blocks.
pub fn block_diag(blocks: &[Matrix]) -> Matrix {
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Matrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), b.shape()).copy_from(b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

/// Horizontal concatenation `[A B ...]`; all blocks must share a row count.
pub fn hcat(blocks: &[&Matrix]) -> Matrix {
    let rows = blocks.first().map_or(0, |b| b.nrows());
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Matrix::zeros(rows, cols);
    let mut c = 0;
    for b in blocks {
        assert_eq!(b.nrows(), rows, "hcat: row counts differ");
        out.view_mut((0, c), b.shape()).copy_from(b);
        c += b.ncols();
    }
    out
}

/// Trace of `A B` without forming the product.
pub fn trace_of_product(a: &Matrix, b: &Matrix) -> f64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(a.nrows(), b.ncols());
    let mut t = 0.0;
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            t += a[(i, k)] * b[(k, i)];
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_kron_identity() {
        assert_eq!(kron(&identity(2), &identity(3)), identity(6));
    }

    #[test]
    fn scalar_kron_is_scaling() {
        let b = Matrix::from_row_slice(2, 3, &[1.0, -2.0, 3.0, 4.0, 5.0, 6.5]);
        assert_eq!(kron(&Matrix::from_element(1, 1, 2.0), &b), &b * 2.0);
    }

    #[test]
    fn expanded_example() {
        let a = Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]);
        let b = Matrix::from_row_slice(2, 2, &[3.0, 4.0, 5.0, 6.0]);
        let expected = Matrix::from_row_slice(
            4,
            4,
            &[
                3.0, 4.0, 0.0, 0.0, //
                5.0, 6.0, 0.0, 0.0, //
                0.0, 0.0, 6.0, 8.0, //
                0.0, 0.0, 10.0, 12.0,
            ],
        );
        assert_eq!(kron(&a, &b), expected);
    }

    #[test]
    fn ones_and_identity() {
        assert_eq!(ones_vector(1), Matrix::from_element(1, 1, 1.0));
        let x = Matrix::from_row_slice(2, 1, &[3.0, -1.0]);
        assert_eq!(&identity(2) * &x, x);
        let stacked = kron(&ones_vector(2), &identity(2));
        let expected = Matrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0]);
        assert_eq!(stacked, expected);
    }

    #[test]
    fn block_diag_and_hcat() {
        let a = Matrix::from_element(1, 2, 1.0);
        let b = Matrix::from_element(2, 1, 2.0);
        let d = block_diag(&[a.clone(), b]);
        assert_eq!(d.shape(), (3, 3));
        assert_eq!(d[(2, 2)], 2.0);
        assert_eq!(d[(1, 0)], 0.0);
        let h = hcat(&[&identity(2), &ones_vector(2)]);
        assert_eq!(h.shape(), (2, 3));
        assert_eq!(h[(1, 2)], 1.0);
    }

    #[test]
    fn trace_of_product_matches_dense() {
        let a = Matrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let b = Matrix::from_row_slice(3, 2, &[0.5, -1.0, 2.0, 0.0, 1.0, 3.0]);
        assert!((trace_of_product(&a, &b) - (&a * &b).trace()).abs() < 1e-12);
    }
}
