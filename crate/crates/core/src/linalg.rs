//! Dense complex linear algebra helpers shared by every module.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Safety factor applied on top of the floating point floor when splitting
/// singular values into kernel and range.
pub const RANK_SAFETY: f64 = 1e3;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn trace(m: &CMatrix) -> Complex64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)]).sum()
}

pub fn hermitian_residual(m: &CMatrix) -> f64 {
    if m.nrows() != m.ncols() {
        return f64::INFINITY;
    }
    max_abs(&(m - m.adjoint()))
}

/// Eigenvalues (ascending) and matching orthonormal eigenvectors of a
/// Hermitian matrix. Only the lower triangle is trusted, so the input is
/// symmetrized first.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    let sym = (m + m.adjoint()).scale(0.5);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, k| eig.eigenvectors[(r, order[k])]);
    (values, vectors)
}

pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let sym = (m + m.adjoint()).scale(0.5);
    let mut v: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Singular values in descending order; empty for degenerate shapes.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut v: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

pub fn operator_norm(m: &CMatrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Rebuilds `V diag(f(λ)) V†`.
pub fn spectral_function(values: &[f64], vectors: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let n = vectors.nrows();
    let mut scaled = vectors.clone();
    for (k, &lambda) in values.iter().enumerate() {
        let fk = f(lambda);
        for r in 0..n {
            scaled[(r, k)] *= fk;
        }
    }
    scaled * vectors.adjoint()
}

/// Outcome of splitting a singular spectrum into a numerical kernel and range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankSplit {
    pub rank: usize,
    pub nullity: usize,
    pub conullity: usize,
    /// Smallest retained singular value over the largest discarded one (or the
    /// floating point floor when nothing was discarded).
    pub gap_ratio: f64,
}

/// Thresholded rank of a `rows x cols` matrix from its singular values.
///
/// The cut is `max(rows, cols) * eps * sigma_max * RANK_SAFETY`.
pub fn rank_split(sigma: &[f64], rows: usize, cols: usize) -> RankSplit {
    let smax = sigma.first().copied().unwrap_or(0.0);
    rank_split_scaled(sigma, rows, cols, rows.max(cols), smax)
}

/// As [`rank_split`], with the size and the reference scale supplied by the
/// caller (used when one matrix is a block of a larger realization).
pub fn rank_split_scaled(sigma: &[f64], rows: usize, cols: usize, size: usize, scale: f64) -> RankSplit {
    let smax = sigma.first().copied().unwrap_or(0.0);
    let scale = scale.max(smax);
    let floor = size.max(1) as f64 * f64::EPSILON * scale.max(f64::MIN_POSITIVE);
    let cut = floor * RANK_SAFETY;
    let rank = sigma.iter().filter(|&&s| s > cut).count();
    let kept_min = if rank > 0 { sigma[rank - 1] } else { f64::INFINITY };
    let dropped_max = sigma.get(rank).copied().unwrap_or(0.0);
    let gap_ratio = if rank == 0 {
        if dropped_max <= floor {
            f64::INFINITY
        } else {
            cut / dropped_max
        }
    } else {
        kept_min / dropped_max.max(floor)
    };
    RankSplit {
        rank,
        nullity: cols - rank,
        conullity: rows - rank,
        gap_ratio,
    }
}

pub fn matrix_rank(m: &CMatrix) -> RankSplit {
    rank_split(&singular_values(m), m.nrows(), m.ncols())
}

pub fn require_gap(split: &RankSplit, threshold: f64) -> Result<()> {
    if split.gap_ratio < threshold {
        return Err(Error::AmbiguousRank {
            gap_ratio: split.gap_ratio,
            threshold,
        });
    }
    Ok(())
}

/// Orthonormal basis (columns) of the numerical null space.
pub fn null_space(m: &CMatrix) -> CMatrix {
    let cols = m.ncols();
    if cols == 0 {
        return CMatrix::zeros(0, 0);
    }
    if m.nrows() == 0 {
        return CMatrix::identity(cols, cols);
    }
    // Null space of M equals the eigenspace of M†M at zero; the SVD in
    // nalgebra only returns thin factors, so use the Hermitian route on the
    // Gram matrix with the singular-value cut.
    let split = matrix_rank(m);
    let gram = m.adjoint() * m;
    let (_, vectors) = hermitian_eigen(&gram);
    vectors.columns(0, split.nullity).into_owned()
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    CMatrix::from_fn(ar * br, ac * bc, |r, k| a[(r / br, k / bc)] * b[(r % br, k % bc)])
}

pub fn real_diagonal(values: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        values.len(),
        values.iter().map(|&v| c(v, 0.0)),
    ))
}
