//! Dense linear-algebra kernels.
//!
//! `nalgebra` is the carrier for all real dense matrices. Nonsymmetric
//! eigenproblems go through `faer` (forced single-threaded so results are
//! bitwise reproducible); everything else stays in `nalgebra`.

use std::sync::Once;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Mat = DMatrix<f64>;
pub type ColVec = DVector<f64>;
pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

static FAER_SETUP: Once = Once::new();

fn faer_single_threaded() {
    FAER_SETUP.call_once(|| {
        faer::set_global_parallelism(faer::Parallelism::None);
    });
}

/// Reject NaN/Inf entries.
pub fn validate_finite(m: &Mat) -> Result<()> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if !m[(i, j)].is_finite() {
                return Err(Error::NonFinite { row: i, col: j });
            }
        }
    }
    Ok(())
}

pub fn ensure_square(m: &Mat, what: &str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::dim(format!(
            "{what} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// Relative deviation from symmetry, `max|A - A^T| / max(1, max|A|)`.
pub fn asymmetry(m: &Mat) -> f64 {
    let mut num = 0.0f64;
    let mut scale = 1.0f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            scale = scale.max(m[(i, j)].abs());
            if j > i {
                num = num.max((m[(i, j)] - m[(j, i)]).abs());
            }
        }
    }
    num / scale
}

pub const SYMMETRY_TOL: f64 = 1e-12;

pub fn is_symmetric(m: &Mat, tol: f64) -> bool {
    m.nrows() == m.ncols() && asymmetry(m) <= tol
}

pub fn require_symmetric(m: &Mat, tol: f64) -> Result<()> {
    ensure_square(m, "matrix")?;
    let a = asymmetry(m);
    if a > tol {
        return Err(Error::NotSymmetric { asymmetry: a });
    }
    Ok(())
}

/// Max absolute column sum.
pub fn norm_one(m: &Mat) -> f64 {
    (0..m.ncols())
        .map(|j| (0..m.nrows()).map(|i| m[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Max absolute entry.
pub fn norm_max(m: &Mat) -> f64 {
    m.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
}

/// Eigen-decomposition of a symmetric matrix, eigenvalues ascending.
///
/// Symmetrizes the input first so callers may pass matrices that are
/// symmetric only up to roundoff.
pub fn sym_eigen(m: &Mat) -> Result<(Vec<f64>, Mat)> {
    ensure_square(m, "matrix")?;
    let s = (m + m.transpose()) * 0.5;
    let se = nalgebra::SymmetricEigen::new(s);
    let mut order: Vec<usize> = (0..se.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let vals: Vec<f64> = order.iter().map(|&k| se.eigenvalues[k]).collect();
    let n = m.nrows();
    let mut vecs = Mat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &se.eigenvectors.column(src));
    }
    Ok((vals, vecs))
}

/// All eigenvalues of a real square matrix (complex in general).
pub fn general_eigenvalues(m: &Mat) -> Result<Vec<Complex64>> {
    ensure_square(m, "matrix")?;
    validate_finite(m)?;
    faer_single_threaded();
    let fm = faer::Mat::<f64>::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)]);
    let evs: Vec<faer::complex_native::c64> = fm.eigenvalues();
    Ok(evs.into_iter().map(|z| Complex64::new(z.re, z.im)).collect())
}

/// Eigenvector matrix and eigenvalues of a real square matrix.
pub fn general_eigendecomposition(m: &Mat) -> Result<(CMat, Vec<Complex64>)> {
    ensure_square(m, "matrix")?;
    validate_finite(m)?;
    faer_single_threaded();
    let n = m.nrows();
    let fm = faer::Mat::<f64>::from_fn(n, n, |i, j| m[(i, j)]);
    let evd = fm.eigendecomposition::<faer::complex_native::c64>();
    let u = evd.u();
    let s = evd.s().column_vector();
    let p = CMat::from_fn(n, n, |i, j| {
        let z = u.read(i, j);
        Complex64::new(z.re, z.im)
    });
    let vals = (0..n)
        .map(|k| {
            let z = s.read(k);
            Complex64::new(z.re, z.im)
        })
        .collect();
    Ok((p, vals))
}

/// Largest singular value.
pub fn sigma_max(m: &Mat) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

/// Smallest singular value.
pub fn sigma_min(m: &Mat) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.min()
}

/// All singular values, descending.
pub fn singular_values(m: &Mat) -> Vec<f64> {
    let sv = m.clone().svd(false, false).singular_values;
    let mut v: Vec<f64> = sv.iter().copied().collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// Smallest singular value of the complex matrix `re + i*im`, computed on the
/// real 2n x 2n embedding (its singular values are those of the complex
/// matrix, doubled in multiplicity).
pub fn sigma_min_complex(re: &Mat, im: &Mat) -> Result<f64> {
    if re.shape() != im.shape() {
        return Err(Error::dim("real and imaginary parts differ in shape"));
    }
    let (r, c) = re.shape();
    let mut e = Mat::zeros(2 * r, 2 * c);
    e.view_mut((0, 0), (r, c)).copy_from(re);
    e.view_mut((0, c), (r, c)).copy_from(&(-im));
    e.view_mut((r, 0), (r, c)).copy_from(im);
    e.view_mut((r, c), (r, c)).copy_from(re);
    Ok(sigma_min(&e))
}

/// LU solve A X = B for possibly many right-hand sides.
pub fn solve(a: &Mat, b: &Mat) -> Result<Mat> {
    ensure_square(a, "coefficient matrix")?;
    if a.nrows() != b.nrows() {
        return Err(Error::dim(format!(
            "solve: lhs is {}x{} but rhs has {} rows",
            a.nrows(),
            a.ncols(),
            b.nrows()
        )));
    }
    a.clone()
        .lu()
        .solve(b)
        .ok_or_else(|| Error::Singular("LU solve failed (singular matrix)".into()))
}

pub fn inverse(a: &Mat) -> Result<Mat> {
    ensure_square(a, "matrix")?;
    a.clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular("matrix not invertible".into()))
}

/// Crude 1-norm condition estimate via explicit inverse; desk scale only.
pub fn cond_one(a: &Mat) -> Result<f64> {
    let inv = inverse(a)?;
    Ok(norm_one(a) * norm_one(&inv))
}

/// Solve the complex system (RE + i IM) X = B for complex B.
pub fn solve_complex(re: &Mat, im: &Mat, b: &CMat) -> Result<CMat> {
    if re.shape() != im.shape() {
        return Err(Error::dim("complex solve: shape mismatch"));
    }
    let n = re.nrows();
    let a = CMat::from_fn(n, n, |i, j| Complex64::new(re[(i, j)], im[(i, j)]));
    a.lu()
        .solve(b)
        .ok_or_else(|| Error::Singular("complex LU solve failed".into()))
}

pub fn to_complex(m: &Mat) -> CMat {
    CMat::from_fn(m.nrows(), m.ncols(), |i, j| Complex64::new(m[(i, j)], 0.0))
}

pub fn max_imag_part(m: &CMat) -> f64 {
    m.iter().fold(0.0f64, |acc, z| acc.max(z.im.abs()))
}

pub fn real_part(m: &CMat) -> Mat {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)].re)
}

/// Assemble a block matrix from a rectangular grid of blocks.
/// `None` stands for a zero block; its size is inferred from the other blocks
/// in the same row and column, which must therefore not all be `None`.
pub fn block_grid(grid: &[Vec<Option<&Mat>>]) -> Result<Mat> {
    let brows = grid.len();
    if brows == 0 {
        return Err(Error::dim("empty block grid"));
    }
    let bcols = grid[0].len();
    if grid.iter().any(|r| r.len() != bcols) {
        return Err(Error::dim("ragged block grid"));
    }
    let mut row_dims = vec![None; brows];
    let mut col_dims = vec![None; bcols];
    for (i, row) in grid.iter().enumerate() {
        for (j, blk) in row.iter().enumerate() {
            if let Some(m) = blk {
                match row_dims[i] {
                    None => row_dims[i] = Some(m.nrows()),
                    Some(r) if r == m.nrows() => {}
                    Some(r) => {
                        return Err(Error::dim(format!(
                            "block ({i},{j}) has {} rows, expected {r}",
                            m.nrows()
                        )))
                    }
                }
                match col_dims[j] {
                    None => col_dims[j] = Some(m.ncols()),
                    Some(c) if c == m.ncols() => {}
                    Some(c) => {
                        return Err(Error::dim(format!(
                            "block ({i},{j}) has {} cols, expected {c}",
                            m.ncols()
                        )))
                    }
                }
            }
        }
    }
    let row_dims: Vec<usize> = row_dims
        .into_iter()
        .enumerate()
        .map(|(i, d)| d.ok_or_else(|| Error::dim(format!("block row {i} has no sized block"))))
        .collect::<Result<_>>()?;
    let col_dims: Vec<usize> = col_dims
        .into_iter()
        .enumerate()
        .map(|(j, d)| d.ok_or_else(|| Error::dim(format!("block col {j} has no sized block"))))
        .collect::<Result<_>>()?;
    let total_r: usize = row_dims.iter().sum();
    let total_c: usize = col_dims.iter().sum();
    let mut out = Mat::zeros(total_r, total_c);
    let mut roff = 0;
    for (i, row) in grid.iter().enumerate() {
        let mut coff = 0;
        for (j, blk) in row.iter().enumerate() {
            if let Some(m) = blk {
                out.view_mut((roff, coff), (row_dims[i], col_dims[j])).copy_from(*m);
            }
            coff += col_dims[j];
        }
        roff += row_dims[i];
    }
    Ok(out)
}

pub fn block_2x2(a: &Mat, b: &Mat, c: &Mat, d: &Mat) -> Result<Mat> {
    block_grid(&[vec![Some(a), Some(b)], vec![Some(c), Some(d)]])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sym_eigen_sorts_and_reconstructs() {
        let m = Mat::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 3.0, 0.5, 0.0, 0.5, 1.0]);
        let (vals, vecs) = sym_eigen(&m).unwrap();
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        let lam = Mat::from_diagonal(&ColVec::from_vec(vals.clone()));
        let rec = &vecs * lam * vecs.transpose();
        assert!(norm_max(&(&rec - &m)) < 1e-12);
    }

    #[test]
    fn rotation_eigenvalues_are_imaginary() {
        let m = Mat::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let mut evs = general_eigenvalues(&m).unwrap();
        evs.sort_by(|a, b| a.im.total_cmp(&b.im));
        assert!((evs[0].re).abs() < 1e-14 && (evs[0].im + 1.0).abs() < 1e-14);
        assert!((evs[1].re).abs() < 1e-14 && (evs[1].im - 1.0).abs() < 1e-14);
    }

    #[test]
    fn complex_embedding_sigma_min() {
        // (i - [[0,1],[-1,0]]) is singular: i is an eigenvalue.
        let re = Mat::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let im = Mat::identity(2, 2);
        let s = sigma_min_complex(&re, &im).unwrap();
        assert!(s < 1e-12, "sigma_min = {s}");
    }

    #[test]
    fn block_grid_infers_zero_blocks() {
        let a = Mat::identity(2, 2);
        let d = Mat::from_element(3, 3, 2.0);
        let m = block_grid(&[vec![Some(&a), None], vec![None, Some(&d)]]).unwrap();
        assert_eq!(m.shape(), (5, 5));
        assert_eq!(m[(0, 0)], 1.0);
        assert_eq!(m[(2, 2)], 2.0);
        assert_eq!(m[(0, 2)], 0.0);
    }

    #[test]
    fn nonfinite_rejected() {
        let mut m = Mat::zeros(2, 2);
        m[(1, 0)] = f64::NAN;
        assert!(matches!(
            validate_finite(&m),
            Err(Error::NonFinite { row: 1, col: 0 })
        ));
    }
}
