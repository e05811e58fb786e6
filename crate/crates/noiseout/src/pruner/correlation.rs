//! Activation sampling, Pearson correlation, pair selection, and the
//! least-squares fit that turns a correlated pair into merge parameters.

use super::{CandidatePair, MergeParams};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::net::Network;
use rand::Rng;

/// Post-activation values of one hidden layer on a random `sample_size`-row
/// subset of `x` (the whole of `x`, in order, when `sample_size == x.rows`).
pub fn collect_activations<R: Rng>(
    net: &Network,
    x: &Matrix,
    layer: usize,
    sample_size: usize,
    rng: &mut R,
) -> Result<Matrix> {
    if sample_size > x.rows() {
        return Err(Error::SampleTooLarge {
            requested: sample_size,
            available: x.rows(),
        });
    }
    if sample_size == x.rows() {
        return net.hidden_up_to(x, layer);
    }
    let sample = sample_rows(x, sample_size, rng)?;
    net.hidden_up_to(&sample, layer)
}

/// Seeded row subset, kept in ascending row order.
pub(crate) fn sample_rows<R: Rng>(x: &Matrix, sample_size: usize, rng: &mut R) -> Result<Matrix> {
    let mut indices = rand::seq::index::sample(rng, x.rows(), sample_size).into_vec();
    indices.sort_unstable();
    x.select_rows(&indices)
}

/// Pairwise Pearson correlations of the columns of `acts`.
///
/// Zero-variance columns have no defined correlation; they are listed in the
/// returned index set and their off-diagonal entries are 0. The diagonal is
/// exactly 1 and every entry is clamped into [-1, 1].
pub fn correlation_matrix(acts: &Matrix) -> Result<(Matrix, Vec<usize>)> {
    if acts.rows() < 2 {
        return Err(Error::TooFewRows {
            required: 2,
            got: acts.rows(),
        });
    }
    let (n, w) = (acts.rows(), acts.cols());
    let (means, sds) = acts.column_stats()?;
    let constant_cols: Vec<usize> = (0..w).filter(|&c| sds[c] == 0.0).collect();

    let mut centered = acts.clone();
    for r in 0..n {
        let row = &mut centered.data_mut()[r * w..(r + 1) * w];
        for (v, &m) in row.iter_mut().zip(&means) {
            *v -= m;
        }
    }
    // cov * n; the 1/n factors cancel against the population sds below.
    let gram = centered.transpose().matmul(&centered)?;
    let nf = n as f64;

    let mut corr = Matrix::zeros(w, w);
    for i in 0..w {
        corr.set(i, i, 1.0);
        for j in 0..i {
            let r = if sds[i] == 0.0 || sds[j] == 0.0 {
                0.0
            } else {
                (gram.get(i, j) / nf / (sds[i] * sds[j])).clamp(-1.0, 1.0)
            };
            corr.set(i, j, r);
            corr.set(j, i, r);
        }
    }
    Ok((corr, constant_cols))
}

/// The off-diagonal pair with the largest |r|, excluding anything touching a
/// constant column. Ties go to the lexicographically smallest (i, j); the
/// higher index becomes `a` (removed) and the lower `b` (kept). `None` when
/// no valid pair exists.
pub fn find_most_correlated_pair(
    corr: &Matrix,
    constant_cols: &[usize],
    layer: usize,
) -> Option<CandidatePair> {
    debug_assert_eq!(corr.rows(), corr.cols());
    let w = corr.rows();
    let mut excluded = vec![false; w];
    for &c in constant_cols {
        if c < w {
            excluded[c] = true;
        }
    }
    let mut best: Option<CandidatePair> = None;
    for i in 0..w {
        if excluded[i] {
            continue;
        }
        for j in i + 1..w {
            if excluded[j] {
                continue;
            }
            let abs_r = corr.get(i, j).abs();
            if best.is_none_or(|p| abs_r > p.abs_r) {
                best = Some(CandidatePair {
                    layer,
                    a: j,
                    b: i,
                    abs_r,
                });
            }
        }
    }
    best
}

/// Least-squares fit `col_a ≈ alpha * col_b + beta`.
///
/// A constant `col_a` against any `col_b` gives `alpha = 0, beta = mean(a)`.
/// A constant `col_b` with a varying `col_a` has no fit; the caller must swap
/// roles or skip the pair.
pub fn estimate_merge_params(col_a: &[f64], col_b: &[f64]) -> Result<MergeParams> {
    if col_a.len() != col_b.len() {
        return Err(Error::ShapeMismatch {
            op: "estimate_merge_params",
            lhs_rows: col_a.len(),
            lhs_cols: 1,
            rhs_rows: col_b.len(),
            rhs_cols: 1,
        });
    }
    if col_a.len() < 2 {
        return Err(Error::TooFewRows {
            required: 2,
            got: col_a.len(),
        });
    }
    let n = col_a.len() as f64;
    let mean_a = col_a.iter().sum::<f64>() / n;
    let mean_b = col_b.iter().sum::<f64>() / n;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    let mut cov = 0.0;
    for (&a, &b) in col_a.iter().zip(col_b) {
        let (da, db) = (a - mean_a, b - mean_b);
        var_a += da * da;
        var_b += db * db;
        cov += da * db;
    }
    if var_b == 0.0 {
        if var_a == 0.0 {
            return Ok(MergeParams {
                alpha: 0.0,
                beta: mean_a,
            });
        }
        return Err(Error::DegenerateRegressor);
    }
    let alpha = cov / var_b;
    let beta = mean_a - alpha * mean_b;
    if !alpha.is_finite() || !beta.is_finite() {
        return Err(Error::DegenerateRegressor);
    }
    Ok(MergeParams { alpha, beta })
}
