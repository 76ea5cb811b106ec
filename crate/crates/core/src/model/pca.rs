//! Two-component principal component analysis.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const N_COMPONENTS: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// `N_COMPONENTS` orthonormal rows.
    pub components: Vec<Vec<f64>>,
    /// Variance along each component (denominator `n - 1`).
    pub explained_variance: Vec<f64>,
    pub explained_variance_ratio: Vec<f64>,
}

/// Fit from the eigendecomposition of the sample covariance, which has the
/// same leading vectors as the SVD of the centred data. Each component is
/// signed so its largest-magnitude loading is positive.
pub fn fit_pca(x: ArrayView2<f64>) -> Result<PcaModel> {
    let (n, d) = x.dim();
    if n <= N_COMPONENTS {
        return Err(Error::Model(format!("PCA needs more than {N_COMPONENTS} rows, got {n}")));
    }
    if d < N_COMPONENTS {
        return Err(Error::Model(format!("PCA needs at least {N_COMPONENTS} columns, got {d}")));
    }
    let mean: Array1<f64> = x.mean_axis(Axis(0)).expect("non-empty");
    let centred = &x - &mean;
    let cov: Array2<f64> = centred.t().dot(&centred) / (n - 1) as f64;
    let eig = SymmetricEigen::new(DMatrix::from_fn(d, d, |i, j| cov[[i, j]]));

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let total: f64 = eig.eigenvalues.iter().map(|v| v.max(0.0)).sum();
    let top = eig.eigenvalues[order[0]];
    let second = eig.eigenvalues[order[1]];
    if !(top > 0.0) || second <= top * 1e-12 {
        return Err(Error::Model("data has rank < 2; PCA projection is undefined".into()));
    }

    let mut components = Vec::with_capacity(N_COMPONENTS);
    let mut explained_variance = Vec::with_capacity(N_COMPONENTS);
    for &k in &order[..N_COMPONENTS] {
        let mut v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
        let pivot = v.iter().cloned().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
        if pivot < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        components.push(v);
        explained_variance.push(eig.eigenvalues[k]);
    }
    let explained_variance_ratio = explained_variance.iter().map(|v| v / total).collect();
    Ok(PcaModel {
        mean: mean.to_vec(),
        components,
        explained_variance,
        explained_variance_ratio,
    })
}

impl PcaModel {
    /// Coordinates of each row, `n × N_COMPONENTS`.
    pub fn project(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.mean.len() {
            return Err(Error::SchemaMismatch {
                expected: format!("{} columns", self.mean.len()),
                found: format!("{} columns", x.ncols()),
            });
        }
        let mut out = Array2::zeros((x.nrows(), self.components.len()));
        for (r, row) in x.axis_iter(Axis(0)).enumerate() {
            for (k, comp) in self.components.iter().enumerate() {
                out[[r, k]] = row.iter().zip(&self.mean).zip(comp).map(|((v, m), c)| (v - m) * c).sum();
            }
        }
        Ok(out)
    }
}
