//! Column-wise z-score standardization.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Per-column mean and population standard deviation. Constant columns carry
/// a standard deviation of 1 so they transform to zeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: ArrayView2<f64>) -> Result<Self> {
        if x.nrows() == 0 {
            return Err(Error::Dimension("cannot fit standardization on zero rows".into()));
        }
        let mean: Array1<f64> = x.mean_axis(Axis(0)).expect("non-empty");
        let std = x.var_axis(Axis(0), 0.0).mapv(|v| {
            let s = v.sqrt();
            if s > 0.0 && s.is_finite() {
                s
            } else {
                1.0
            }
        });
        Ok(Self { mean: mean.to_vec(), std: std.to_vec() })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn transform(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check(x.ncols())?;
        let mut out = x.to_owned();
        for mut row in out.rows_mut() {
            for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.std) {
                *v = (*v - m) / s;
            }
        }
        Ok(out)
    }

    pub fn inverse(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check(x.ncols())?;
        let mut out = x.to_owned();
        for mut row in out.rows_mut() {
            for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.std) {
                *v = *v * s + m;
            }
        }
        Ok(out)
    }

    fn check(&self, cols: usize) -> Result<()> {
        if cols != self.dim() {
            return Err(Error::Dimension(format!(
                "matrix has {cols} columns, standardizer expects {}",
                self.dim()
            )));
        }
        Ok(())
    }
}

/// Fits on `x` when `stats` is `None`, otherwise applies the given stats
/// without refitting.
pub fn standardize(x: ArrayView2<f64>, stats: Option<&Standardizer>) -> Result<(Array2<f64>, Standardizer)> {
    let stats = match stats {
        Some(s) => s.clone(),
        None => Standardizer::fit(x)?,
    };
    Ok((stats.transform(x)?, stats))
}
