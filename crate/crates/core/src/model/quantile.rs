//! Per-column uniform quantile transform.

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::stats::sorted_quantile;

/// Reference points per column: quantiles at 0, 0.01, ..., 1.
pub const N_REFERENCES: usize = 101;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileTransform {
    /// `references[c]` holds the [`N_REFERENCES`] non-decreasing reference values of column `c`.
    pub references: Vec<Vec<f64>>,
}

fn probability(k: usize) -> f64 {
    k as f64 / (N_REFERENCES - 1) as f64
}

pub fn fit_quantile(x: ArrayView2<f64>) -> Result<QuantileTransform> {
    if x.nrows() < 2 {
        return Err(Error::Model(format!("quantile transform needs at least 2 rows, got {}", x.nrows())));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Model("quantile transform input contains non-finite values".into()));
    }
    let references = (0..x.ncols())
        .into_par_iter()
        .map(|c| {
            let mut sorted = x.column(c).to_vec();
            sorted.sort_by(f64::total_cmp);
            let mut refs: Vec<f64> = (0..N_REFERENCES).map(|k| sorted_quantile(&sorted, probability(k))).collect();
            // Interpolation can break monotonicity by one ulp; restore it.
            for k in 1..refs.len() {
                if refs[k] < refs[k - 1] {
                    refs[k] = refs[k - 1];
                }
            }
            refs
        })
        .collect();
    Ok(QuantileTransform { references })
}

/// Piecewise-linear map of `x` through `refs`, averaging the left- and
/// right-continuous versions so runs of tied references map to the middle
/// of their probability span. Values at or beyond the ends clip to 0 and 1;
/// a constant column maps to 0.
pub fn transform_value(refs: &[f64], x: f64) -> f64 {
    let (lo, hi) = (refs[0], refs[refs.len() - 1]);
    if lo == hi || x <= lo {
        return 0.0;
    }
    if x >= hi {
        return 1.0;
    }
    let step = probability(1);
    // Largest j with refs[j] <= x.
    let j = refs.partition_point(|&r| r <= x) - 1;
    let forward = probability(j) + step * (x - refs[j]) / (refs[j + 1] - refs[j]);
    // Smallest j with refs[j] >= x.
    let j = refs.partition_point(|&r| r < x);
    let backward = probability(j) - step * (refs[j] - x) / (refs[j] - refs[j - 1]);
    (0.5 * (forward + backward)).clamp(0.0, 1.0)
}

impl QuantileTransform {
    pub fn n_columns(&self) -> usize {
        self.references.len()
    }

    pub fn apply(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.n_columns() {
            return Err(Error::SchemaMismatch {
                expected: format!("{} columns", self.n_columns()),
                found: format!("{} columns", x.ncols()),
            });
        }
        let mut out = vec![0.0; x.len()];
        if x.ncols() > 0 {
            out.par_chunks_mut(x.ncols()).enumerate().for_each(|(r, row_out)| {
                for (c, o) in row_out.iter_mut().enumerate() {
                    *o = transform_value(&self.references[c], x[[r, c]]);
                }
            });
        }
        Ok(Array2::from_shape_vec(x.raw_dim(), out).expect("shape"))
    }
}
