//! Spans of finitely many tangent vectors, with SVD-based rank reports.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};

/// Relative singular-value threshold used when none is given.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// An ordered family of vectors together with the numerical rank of its span.
///
/// A singular value counts toward the rank when it exceeds `tol * sigma_max`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubspaceBasis {
    pub vectors: Vec<Vec<f64>>,
    pub singular_values: Vec<f64>,
    pub rank: usize,
    pub tol: f64,
    pub ambient_dim: usize,
    #[serde(skip)]
    range: DMatrix<f64>,
}

impl SubspaceBasis {
    pub fn new(vectors: &[DVector<f64>], ambient_dim: usize, tol: f64) -> Result<Self> {
        if let Some(v) = vectors.iter().find(|v| v.len() != ambient_dim) {
            return Err(Error::Dimension {
                expected: ambient_dim,
                got: v.len(),
            });
        }
        if !(tol >= 0.0) {
            return Err(Error::invalid("rank tolerance must be non-negative"));
        }
        let plain = vectors.iter().map(|v| v.as_slice().to_vec()).collect();
        if vectors.is_empty() {
            return Ok(Self {
                vectors: plain,
                singular_values: Vec::new(),
                rank: 0,
                tol,
                ambient_dim,
                range: DMatrix::zeros(ambient_dim, 0),
            });
        }
        let a = DMatrix::from_columns(vectors);
        let svd = a.svd(true, false);
        let u = svd.u.expect("requested U");
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
        let singular_values: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
        let sigma_max = singular_values.first().copied().unwrap_or(0.0);
        let rank = if sigma_max > 0.0 {
            singular_values.iter().filter(|&&s| s > tol * sigma_max).count()
        } else {
            0
        };
        let range = if rank == 0 {
            DMatrix::zeros(ambient_dim, 0)
        } else {
            DMatrix::from_columns(&order[..rank].iter().map(|&i| u.column(i).into_owned()).collect::<Vec<_>>())
        };
        Ok(Self {
            vectors: plain,
            singular_values,
            rank,
            tol,
            ambient_dim,
            range,
        })
    }

    pub fn is_full(&self) -> bool {
        self.rank == self.ambient_dim
    }

    /// Orthonormal basis of the numerical span, one column per rank.
    pub fn orthonormal(&self) -> &DMatrix<f64> {
        &self.range
    }

    /// Distance from `w` to the numerical span.
    pub fn residual(&self, w: &DVector<f64>) -> f64 {
        let q = &self.range;
        (w - q * (q.transpose() * w)).norm()
    }

    /// sigma_max / sigma_min over the retained singular values.
    pub fn condition_number(&self) -> f64 {
        match (self.singular_values.first(), self.rank) {
            (Some(&max), r) if r > 0 => max / self.singular_values[r - 1],
            _ => f64::INFINITY,
        }
    }
}

/// Minimum-norm least-squares solution of `a x = b`, plus the residual norm.
pub fn least_squares(a: &DMatrix<f64>, b: &DVector<f64>, tol: f64) -> Result<(DVector<f64>, f64)> {
    if a.nrows() != b.len() {
        return Err(Error::Dimension {
            expected: a.nrows(),
            got: b.len(),
        });
    }
    if a.ncols() == 0 {
        return Ok((DVector::zeros(0), b.norm()));
    }
    let svd = a.clone().svd(true, true);
    let sigma_max = svd.singular_values.max();
    let eps = (tol * sigma_max).max(f64::MIN_POSITIVE);
    let x = svd
        .solve(b, eps)
        .map_err(|e| Error::invalid(format!("least squares failed: {e}")))?;
    let residual = (a * &x - b).norm();
    Ok((x, residual))
}
