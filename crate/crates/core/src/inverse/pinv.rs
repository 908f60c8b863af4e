use nalgebra::{DMatrix, DVector};

use crate::error::{check_len, Error, Result};

pub const DEFAULT_TAU: f64 = 1e-3;

/// Truncated-SVD pseudoinverse keeping singular values `>= tau * sigma_max`.
#[derive(Debug, Clone)]
pub struct RegularizedPseudoinverse {
    u: DMatrix<f64>,
    sigma: Vec<f64>,
    v: DMatrix<f64>,
    all_singular_values: Vec<f64>,
    tau: f64,
}

impl RegularizedPseudoinverse {
    pub fn new(matrix: &DMatrix<f64>, tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau < 1.0) {
            return Err(Error::Config(format!("tau must lie in (0, 1), got {tau}")));
        }
        if matrix.is_empty() || matrix.iter().any(|x| !x.is_finite()) {
            return Err(Error::Degenerate("matrix is empty or not finite".into()));
        }
        let svd = matrix.clone().svd(true, true);
        let u_all = svd.u.expect("requested");
        let vt_all = svd.v_t.expect("requested");
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        let all: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
        let smax = all[0];
        if !(smax > 0.0) {
            return Err(Error::Degenerate("matrix is identically zero".into()));
        }
        let keep: Vec<usize> = order
            .iter()
            .copied()
            .filter(|&i| svd.singular_values[i] >= tau * smax)
            .collect();
        let u = DMatrix::from_fn(matrix.nrows(), keep.len(), |r, c| u_all[(r, keep[c])]);
        let v = DMatrix::from_fn(matrix.ncols(), keep.len(), |r, c| vt_all[(keep[c], r)]);
        let sigma = keep.iter().map(|&i| svd.singular_values[i]).collect();
        Ok(Self {
            u,
            sigma,
            v,
            all_singular_values: all,
            tau,
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    /// Spectral norm of the pseudoinverse, `1 / sigma_min` over retained values.
    pub fn norm(&self) -> f64 {
        1.0 / self.sigma.last().copied().expect("rank >= 1")
    }

    pub fn retained(&self) -> &[f64] {
        &self.sigma
    }

    /// All singular values of the original matrix, descending.
    pub fn singular_values(&self) -> &[f64] {
        &self.all_singular_values
    }

    /// Retained right singular vectors as columns.
    pub fn right_vectors(&self) -> &DMatrix<f64> {
        &self.v
    }

    pub fn input_dim(&self) -> usize {
        self.u.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.v.nrows()
    }

    /// `V diag(1/sigma) U^T data`.
    pub fn apply(&self, data: &[f64]) -> Result<Vec<f64>> {
        check_len(self.u.nrows(), data.len())?;
        let d = DVector::from_column_slice(data);
        let mut coef = self.u.tr_mul(&d);
        for (c, s) in coef.iter_mut().zip(&self.sigma) {
            *c /= s;
        }
        Ok((&self.v * coef).as_slice().to_vec())
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        let mut vs = self.v.clone();
        for (j, s) in self.sigma.iter().enumerate() {
            vs.column_mut(j).scale_mut(1.0 / s);
        }
        vs * self.u.transpose()
    }
}
