//! Finite-dimensional spaces with a weighted inner product.

use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::linalg::{self, ColVec, Mat};

/// Maximum allowed condition number of a weight matrix.
pub const WEIGHT_COND_CAP: f64 = 1e12;

/// A space `R^dim` with norm `||x||^2 = x^T G x` for a symmetric positive
/// definite weight `G`. Models L^2-, H^1-, graph- and Kisynski-type norms.
#[derive(Clone, Debug)]
pub struct GradedSpace {
    dim: usize,
    weight: Mat,
    label: String,
    factors: Arc<OnceLock<(Mat, Mat)>>,
}

impl GradedSpace {
    /// Build a space from its weight; rejects nonsymmetric, indefinite or
    /// badly conditioned weights.
    ///
    /// Small weights are checked with an exact eigendecomposition. Large ones
    /// use Cholesky for definiteness and a short power iteration on `G` and
    /// `G^{-1}` to estimate the condition number, which is all the 1e12 guard
    /// needs.
    pub fn new(label: impl Into<String>, weight: Mat) -> Result<Self> {
        linalg::validate_finite(&weight)?;
        linalg::require_symmetric(&weight, linalg::SYMMETRY_TOL)?;
        if weight.nrows() < 1 {
            return Err(Error::dim("weight must be at least 1x1"));
        }
        let n = weight.nrows();
        if n <= 600 {
            let (vals, _) = linalg::sym_eigen(&weight)?;
            let min = vals[0];
            let max = vals[vals.len() - 1];
            if min <= 0.0 {
                return Err(Error::NotDefinite {
                    expected: "positive definite",
                    eigenvalue: min,
                });
            }
            if max / min > WEIGHT_COND_CAP {
                return Err(Error::IllConditioned {
                    cond: max / min,
                    max: WEIGHT_COND_CAP,
                });
            }
        } else {
            let chol = nalgebra::Cholesky::new(weight.clone()).ok_or(Error::NotDefinite {
                expected: "positive definite",
                eigenvalue: f64::NEG_INFINITY,
            })?;
            let mut hi = ColVec::from_element(n, 1.0) / (n as f64).sqrt();
            let mut lo = hi.clone();
            let mut lam_hi = 0.0;
            let mut lam_lo = 0.0;
            for _ in 0..30 {
                let w = &weight * &hi;
                lam_hi = w.dot(&hi);
                hi = &w / w.norm();
                let v = chol.solve(&lo);
                lam_lo = v.dot(&lo);
                lo = &v / v.norm();
            }
            let cond = lam_hi * lam_lo; // lam_lo estimates 1/lambda_min
            if cond > WEIGHT_COND_CAP {
                return Err(Error::IllConditioned {
                    cond,
                    max: WEIGHT_COND_CAP,
                });
            }
        }
        Ok(GradedSpace {
            dim: weight.nrows(),
            weight,
            label: label.into(),
            factors: Arc::new(OnceLock::new()),
        })
    }

    /// Euclidean space (identity weight).
    pub fn euclidean(label: impl Into<String>, dim: usize) -> Self {
        GradedSpace::new(label, Mat::identity(dim, dim)).expect("identity weight is SPD")
    }

    /// Uniformly scaled Euclidean space, e.g. a discrete L^2 with cell weight `c`.
    pub fn scaled(label: impl Into<String>, dim: usize, c: f64) -> Result<Self> {
        GradedSpace::new(label, Mat::identity(dim, dim) * c)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn weight(&self) -> &Mat {
        &self.weight
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn norm(&self, x: &ColVec) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::dim(format!(
                "vector of length {} in space {} of dim {}",
                x.len(),
                self.label,
                self.dim
            )));
        }
        Ok((&self.weight * x).dot(x).max(0.0).sqrt())
    }

    pub fn inner(&self, x: &ColVec, y: &ColVec) -> Result<f64> {
        if x.len() != self.dim || y.len() != self.dim {
            return Err(Error::dim(format!("inner product in {}", self.label)));
        }
        Ok((&self.weight * y).dot(x))
    }

    /// `(G^{1/2}, G^{-1/2})`, computed once via the symmetric eigendecomposition.
    pub fn sqrt_factors(&self) -> &(Mat, Mat) {
        self.factors.get_or_init(|| {
            let (vals, vecs) = linalg::sym_eigen(&self.weight).expect("weight validated at build");
            let half = Mat::from_diagonal(&ColVec::from_iterator(
                vals.len(),
                vals.iter().map(|v| v.max(0.0).sqrt()),
            ));
            let inv_half = Mat::from_diagonal(&ColVec::from_iterator(
                vals.len(),
                vals.iter().map(|v| 1.0 / v.max(f64::MIN_POSITIVE).sqrt()),
            ));
            let g_half = &vecs * half * vecs.transpose();
            let g_inv_half = &vecs * inv_half * vecs.transpose();
            (g_half, g_inv_half)
        })
    }

    /// Product space with block-diagonal weight, factors in the given order.
    pub fn product(label: impl Into<String>, factors: &[&GradedSpace]) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::dim("product of no factors"));
        }
        let dim: usize = factors.iter().map(|s| s.dim).sum();
        let mut weight = Mat::zeros(dim, dim);
        let mut off = 0;
        for s in factors {
            weight.view_mut((off, off), (s.dim, s.dim)).copy_from(&s.weight);
            off += s.dim;
        }
        GradedSpace::new(label, weight)
    }

    /// Graph-norm space of an operator `a` acting out of this space:
    /// `||u||^2 + ||A u||^2` (plus `||L u||^2` when a boundary operator is given),
    /// the quadratic version of the graph norm.
    pub fn graph_space(
        label: impl Into<String>,
        base: &GradedSpace,
        a: &Mat,
        codomain: &GradedSpace,
        boundary: Option<(&Mat, &GradedSpace)>,
    ) -> Result<Self> {
        if a.ncols() != base.dim || a.nrows() != codomain.dim {
            return Err(Error::dim("graph_space: operator shape"));
        }
        let mut w = base.weight.clone() + a.transpose() * &codomain.weight * a;
        if let Some((l, bspace)) = boundary {
            if l.ncols() != base.dim || l.nrows() != bspace.dim {
                return Err(Error::dim("graph_space: boundary operator shape"));
            }
            w += l.transpose() * &bspace.weight * l;
        }
        GradedSpace::new(label, w)
    }
}
