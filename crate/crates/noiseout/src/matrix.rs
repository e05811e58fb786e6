//! Dense row-major matrices and the small set of operations the rest of the
//! crate is built on: products, row/column surgery, and column statistics.
//!
//! Everything is `f64`. Operations never mutate their inputs; they return new
//! values. Weight matrices elsewhere in the crate are stored `out_dim x in_dim`,
//! so a neuron is a row in its own layer and a column in the next layer's
//! weights, which makes removing or merging a neuron plain row/column surgery.

use crate::error::{Error, Result};

/// Dense row-major matrix of 64-bit reals.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// All-zero matrix of the given shape.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Build from row-major data; the length must equal `rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DataLength {
                rows,
                cols,
                len: data.len(),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Build from a slice of equal-length rows. Handy in tests and fixtures.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let ncols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * ncols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != ncols {
                return Err(Error::DataLength {
                    rows: i,
                    cols: ncols,
                    len: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix {
            rows: rows.len(),
            cols: ncols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Row-major backing slice.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c] = v;
    }

    /// Borrow row `r` as a slice.
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Copy column `c` out as a vector.
    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(c, r, self.get(r, c));
            }
        }
        out
    }

    /// Gather the given rows, in the given order, into a new matrix.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Matrix> {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            if i >= self.rows {
                return Err(Error::IndexOutOfRange {
                    axis: "row",
                    index: i,
                    len: self.rows,
                });
            }
            data.extend_from_slice(self.row(i));
        }
        Ok(Matrix {
            rows: indices.len(),
            cols: self.cols,
            data,
        })
    }

    /// Matrix product `self * other`.
    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::ShapeMismatch {
                op: "matmul",
                lhs_rows: self.rows,
                lhs_cols: self.cols,
                rhs_rows: other.rows,
                rhs_cols: other.cols,
            });
        }
        let mut out = vec![0.0; self.rows * other.cols];
        // i-k-j order: the inner loop runs over contiguous rows of `other`
        // and of the output, which lets it vectorize.
        for i in 0..self.rows {
            let a_row = self.row(i);
            let out_row = &mut out[i * other.cols..(i + 1) * other.cols];
            for (k, &a_ik) in a_row.iter().enumerate() {
                let b_row = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, &b_kj) in out_row.iter_mut().zip(b_row) {
                    *o += a_ik * b_kj;
                }
            }
        }
        Ok(Matrix {
            rows: self.rows,
            cols: other.cols,
            data: out,
        })
    }

    /// Copy of the matrix with row `r` removed.
    pub fn delete_row(&self, r: usize) -> Result<Matrix> {
        if r >= self.rows {
            return Err(Error::IndexOutOfRange {
                axis: "row",
                index: r,
                len: self.rows,
            });
        }
        let mut data = Vec::with_capacity((self.rows - 1) * self.cols);
        data.extend_from_slice(&self.data[..r * self.cols]);
        data.extend_from_slice(&self.data[(r + 1) * self.cols..]);
        Ok(Matrix {
            rows: self.rows - 1,
            cols: self.cols,
            data,
        })
    }

    /// Copy of the matrix with column `c` removed.
    pub fn delete_column(&self, c: usize) -> Result<Matrix> {
        if c >= self.cols {
            return Err(Error::IndexOutOfRange {
                axis: "column",
                index: c,
                len: self.cols,
            });
        }
        let mut data = Vec::with_capacity(self.rows * (self.cols - 1));
        for r in 0..self.rows {
            let row = self.row(r);
            data.extend_from_slice(&row[..c]);
            data.extend_from_slice(&row[c + 1..]);
        }
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols - 1,
            data,
        })
    }

    /// Per-column mean and population standard deviation (divide by `rows`).
    ///
    /// A standard deviation of exactly zero marks a constant column.
    pub fn column_stats(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        if self.rows == 0 {
            return Err(Error::TooFewRows {
                required: 1,
                got: 0,
            });
        }
        let n = self.rows as f64;
        let mut means = vec![0.0; self.cols];
        for r in 0..self.rows {
            for (m, &v) in means.iter_mut().zip(self.row(r)) {
                *m += v;
            }
        }
        for m in &mut means {
            *m /= n;
        }
        let mut vars = vec![0.0; self.cols];
        for r in 0..self.rows {
            for ((v, &x), &m) in vars.iter_mut().zip(self.row(r)).zip(&means) {
                let d = x - m;
                *v += d * d;
            }
        }
        let sds = vars.iter().map(|v| (v / n).sqrt()).collect();
        Ok((means, sds))
    }

    /// Column update `col[dst] += alpha * col[src]`; everything else unchanged.
    pub fn axpy_column(&self, dst: usize, src: usize, alpha: f64) -> Result<Matrix> {
        if dst >= self.cols {
            return Err(Error::IndexOutOfRange {
                axis: "column",
                index: dst,
                len: self.cols,
            });
        }
        if src >= self.cols {
            return Err(Error::IndexOutOfRange {
                axis: "column",
                index: src,
                len: self.cols,
            });
        }
        let mut out = self.clone();
        for r in 0..self.rows {
            let v = out.get(r, dst) + alpha * out.get(r, src);
            out.set(r, dst, v);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn approx_eq(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    /// Independent triple-loop product used to check `matmul`.
    fn matmul_oracle(a: &Matrix, b: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(a.rows(), b.cols());
        for i in 0..a.rows() {
            for j in 0..b.cols() {
                let mut s = 0.0;
                for k in 0..a.cols() {
                    s += a.get(i, k) * b.get(k, j);
                }
                out.set(i, j, s);
            }
        }
        out
    }

    fn rand_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
        // Small deterministic LCG; keeps the oracle tests free of crate deps.
        let mut state = seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(1);
        let mut next = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        let data = (0..rows * cols).map(|_| next()).collect();
        Matrix::from_vec(rows, cols, data).unwrap()
    }

    #[test]
    fn matmul_identity() {
        let i2 = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let b = Matrix::from_rows(&[vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap();
        assert_eq!(i2.matmul(&b).unwrap(), b);
    }

    #[test]
    fn matmul_dot_product() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
        let b = Matrix::from_rows(&[vec![3.0], vec![4.0]]).unwrap();
        let c = a.matmul(&b).unwrap();
        assert_eq!((c.rows(), c.cols()), (1, 1));
        assert_eq!(c.get(0, 0), 11.0);
    }

    #[test]
    fn matmul_matches_triple_loop_oracle() {
        let a = rand_matrix(3, 4, 7);
        let b = rand_matrix(4, 2, 8);
        let got = a.matmul(&b).unwrap();
        let want = matmul_oracle(&a, &b);
        for (x, y) in got.data().iter().zip(want.data()) {
            assert!(approx_eq(*x, *y, 1e-12), "{x} vs {y}");
        }
    }

    #[test]
    fn matmul_shape_mismatch_names_both_shapes() {
        let a = Matrix::zeros(2, 3);
        let b = Matrix::zeros(2, 2);
        let err = a.matmul(&b).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("2x3") && msg.contains("2x2"), "{msg}");
    }

    #[test]
    fn delete_row_middle() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap();
        let got = m.delete_row(1).unwrap();
        let want = Matrix::from_rows(&[vec![1.0, 2.0], vec![5.0, 6.0]]).unwrap();
        assert_eq!(got, want);
    }

    #[test]
    fn delete_only_row_leaves_empty() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
        let got = m.delete_row(0).unwrap();
        assert_eq!((got.rows(), got.cols()), (0, 2));
    }

    #[test]
    fn delete_row_matches_filter_oracle() {
        let m = rand_matrix(6, 3, 21);
        for r in 0..6 {
            let got = m.delete_row(r).unwrap();
            let kept: Vec<Vec<f64>> = (0..6)
                .filter(|&i| i != r)
                .map(|i| m.row(i).to_vec())
                .collect();
            assert_eq!(got, Matrix::from_rows(&kept).unwrap());
        }
    }

    #[test]
    fn delete_row_out_of_range() {
        let m = Matrix::zeros(2, 2);
        assert!(m.delete_row(2).is_err());
    }

    #[test]
    fn delete_column_first() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0, 3.0]]).unwrap();
        let got = m.delete_column(0).unwrap();
        assert_eq!(got, Matrix::from_rows(&[vec![2.0, 3.0]]).unwrap());
    }

    #[test]
    fn delete_column_second() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let got = m.delete_column(1).unwrap();
        assert_eq!(got, Matrix::from_rows(&[vec![1.0], vec![3.0]]).unwrap());
    }

    #[test]
    fn delete_column_matches_filter_oracle() {
        let m = rand_matrix(4, 5, 33);
        for c in 0..5 {
            let got = m.delete_column(c).unwrap();
            let kept: Vec<Vec<f64>> = (0..4)
                .map(|r| {
                    m.row(r)
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| *j != c)
                        .map(|(_, &v)| v)
                        .collect()
                })
                .collect();
            assert_eq!(got, Matrix::from_rows(&kept).unwrap());
        }
    }

    #[test]
    fn column_stats_two_rows() {
        let m = Matrix::from_rows(&[vec![1.0], vec![3.0]]).unwrap();
        let (means, sds) = m.column_stats().unwrap();
        assert_eq!(means, vec![2.0]);
        assert_eq!(sds, vec![1.0]);
    }

    #[test]
    fn column_stats_constant_column_has_zero_sd() {
        let m = Matrix::from_rows(&[vec![5.0], vec![5.0], vec![5.0]]).unwrap();
        let (means, sds) = m.column_stats().unwrap();
        assert_eq!(means, vec![5.0]);
        assert_eq!(sds, vec![0.0]);
    }

    #[test]
    fn column_stats_matches_two_pass_oracle() {
        let m = rand_matrix(7, 3, 55);
        let (means, sds) = m.column_stats().unwrap();
        for c in 0..3 {
            let col = m.column(c);
            let mean = col.iter().sum::<f64>() / 7.0;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 7.0;
            assert!(approx_eq(means[c], mean, 1e-12));
            assert!(approx_eq(sds[c], var.sqrt(), 1e-12));
        }
    }

    #[test]
    fn column_stats_empty_errors() {
        let m = Matrix::zeros(0, 3);
        assert!(m.column_stats().is_err());
    }

    #[test]
    fn axpy_column_basic() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let got = m.axpy_column(0, 1, 1.0).unwrap();
        assert_eq!(got, Matrix::from_rows(&[vec![3.0, 2.0], vec![7.0, 4.0]]).unwrap());
    }

    #[test]
    fn axpy_column_zero_alpha_is_identity() {
        let m = rand_matrix(3, 3, 70);
        assert_eq!(m.axpy_column(2, 0, 0.0).unwrap(), m);
    }

    #[test]
    fn axpy_column_matches_elementwise_oracle() {
        let m = rand_matrix(5, 4, 71);
        let alpha = 0.37;
        let got = m.axpy_column(1, 3, alpha).unwrap();
        for r in 0..5 {
            for c in 0..4 {
                let want = if c == 1 {
                    m.get(r, 1) + alpha * m.get(r, 3)
                } else {
                    m.get(r, c)
                };
                assert!(approx_eq(got.get(r, c), want, 1e-12));
            }
        }
    }

    #[test]
    fn select_rows_gathers_in_order() {
        let m = Matrix::from_rows(&[vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        let got = m.select_rows(&[2, 0]).unwrap();
        assert_eq!(got, Matrix::from_rows(&[vec![3.0], vec![1.0]]).unwrap());
        assert!(m.select_rows(&[3]).is_err());
    }

    #[test]
    fn from_vec_rejects_bad_length() {
        assert!(Matrix::from_vec(2, 2, vec![1.0, 2.0, 3.0]).is_err());
    }

    proptest! {
        #[test]
        fn matmul_is_associative(seed in 0u64..1000) {
            let a = rand_matrix(3, 4, seed);
            let b = rand_matrix(4, 5, seed.wrapping_add(1));
            let c = rand_matrix(5, 2, seed.wrapping_add(2));
            let left = a.matmul(&b).unwrap().matmul(&c).unwrap();
            let right = a.matmul(&b.matmul(&c).unwrap()).unwrap();
            for (x, y) in left.data().iter().zip(right.data()) {
                let scale = x.abs().max(y.abs()).max(1.0);
                prop_assert!((x - y).abs() / scale < 1e-9);
            }
        }

        #[test]
        fn delete_row_and_column_commute(seed in 0u64..1000, r in 0usize..4, c in 0usize..5) {
            let m = rand_matrix(4, 5, seed);
            let rc = m.delete_row(r).unwrap().delete_column(c).unwrap();
            let cr = m.delete_column(c).unwrap().delete_row(r).unwrap();
            prop_assert_eq!(rc, cr);
        }

        #[test]
        fn axpy_column_round_trips(seed in 0u64..1000, alpha in -10.0f64..10.0) {
            let m = rand_matrix(4, 3, seed);
            let back = m
                .axpy_column(0, 2, alpha).unwrap()
                .axpy_column(0, 2, -alpha).unwrap();
            for (x, y) in back.data().iter().zip(m.data()) {
                prop_assert!((x - y).abs() <= 1e-12);
            }
        }

        #[test]
        fn column_sd_is_scale_covariant(seed in 0u64..1000, k in 0.001f64..100.0) {
            let m = rand_matrix(5, 2, seed);
            let (_, sds) = m.column_stats().unwrap();
            let mut scaled = m.clone();
            for r in 0..5 {
                scaled.set(r, 0, k * m.get(r, 0));
            }
            let (_, scaled_sds) = scaled.column_stats().unwrap();
            let scale = (k * sds[0]).abs().max(1e-300);
            prop_assert!((scaled_sds[0] - k * sds[0]).abs() / scale < 1e-12);
            prop_assert_eq!(scaled_sds[1], sds[1]);
        }

        #[test]
        fn operations_keep_entries_finite(seed in 0u64..200) {
            let a = rand_matrix(3, 3, seed);
            let b = rand_matrix(3, 3, seed.wrapping_add(9));
            let prod = a.matmul(&b).unwrap();
            prop_assert!(prod.data().iter().all(|v| v.is_finite()));
            let (means, sds) = prod.column_stats().unwrap();
            prop_assert!(means.iter().chain(&sds).all(|v| v.is_finite()));
        }
    }
}
