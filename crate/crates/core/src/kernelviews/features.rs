use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Samples × features matrix with unique identifiers on both axes.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    values: Matrix,
    sample_ids: Vec<String>,
    feature_ids: Vec<String>,
}

fn check_unique(ids: &[String], what: &str) -> Result<()> {
    let mut seen = HashSet::with_capacity(ids.len());
    for id in ids {
        if !seen.insert(id.as_str()) {
            return Err(Error::InvalidInput(format!("duplicate {what} id `{id}`")));
        }
    }
    Ok(())
}

impl FeatureMatrix {
    pub fn new(values: Matrix, sample_ids: Vec<String>, feature_ids: Vec<String>) -> Result<Self> {
        if values.nrows() != sample_ids.len() || values.ncols() != feature_ids.len() {
            return Err(Error::Dimension(format!(
                "feature matrix is {}x{} but has {} sample ids and {} feature ids",
                values.nrows(),
                values.ncols(),
                sample_ids.len(),
                feature_ids.len()
            )));
        }
        check_unique(&sample_ids, "sample")?;
        check_unique(&feature_ids, "feature")?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("feature matrix has non-finite values".into()));
        }
        Ok(FeatureMatrix {
            values,
            sample_ids,
            feature_ids,
        })
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    pub fn feature_ids(&self) -> &[String] {
        &self.feature_ids
    }

    pub fn n_samples(&self) -> usize {
        self.values.nrows()
    }

    /// Columns for `ids`, in the order given.
    pub fn select_features(&self, ids: &[String]) -> Result<Matrix> {
        let index: HashMap<&str, usize> = self
            .feature_ids
            .iter()
            .enumerate()
            .map(|(i, f)| (f.as_str(), i))
            .collect();
        let cols = ids
            .iter()
            .map(|id| {
                index
                    .get(id.as_str())
                    .copied()
                    .ok_or_else(|| Error::InvalidInput(format!("unknown feature `{id}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self.values.select_columns(&cols))
    }

    /// Rows for `ids`, in the order given.
    pub fn select_samples(&self, ids: &[String]) -> Result<FeatureMatrix> {
        let index: HashMap<&str, usize> = self
            .sample_ids
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i))
            .collect();
        let rows = ids
            .iter()
            .map(|id| {
                index
                    .get(id.as_str())
                    .copied()
                    .ok_or_else(|| Error::InvalidInput(format!("unknown sample `{id}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        FeatureMatrix::new(self.values.select_rows(&rows), ids.to_vec(), self.feature_ids.clone())
    }

    /// Per-feature z-scoring. Constant features are centred only.
    pub fn standardized(&self) -> FeatureMatrix {
        self.standardized_against(self)
            .expect("a matrix shares its own feature ids")
    }

    /// Z-scores every feature with the mean and standard deviation of the same
    /// feature in `reference`, so new samples land on the training scale.
    pub fn standardized_against(&self, reference: &FeatureMatrix) -> Result<FeatureMatrix> {
        let ref_values = reference.select_features(&self.feature_ids)?;
        let n = ref_values.nrows() as f64;
        let mut values = self.values.clone();
        for (mut col, rcol) in values.column_iter_mut().zip(ref_values.column_iter()) {
            let mean = rcol.sum() / n;
            let var = rcol.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
            let sd = var.sqrt();
            let sd = if sd > 1e-12 { sd } else { 1.0 };
            for v in col.iter_mut() {
                *v = (*v - mean) / sd;
            }
        }
        Ok(FeatureMatrix {
            values,
            sample_ids: self.sample_ids.clone(),
            feature_ids: self.feature_ids.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(prefix: &str, n: usize) -> Vec<String> {
        (0..n).map(|i| format!("{prefix}{i}")).collect()
    }

    #[test]
    fn rejects_duplicate_ids() {
        let err = FeatureMatrix::new(Matrix::zeros(2, 2), vec!["a".into(), "a".into()], ids("g", 2));
        assert!(err.is_err());
    }

    #[test]
    fn rejects_non_finite() {
        let mut v = Matrix::zeros(2, 2);
        v[(1, 1)] = f64::NAN;
        assert!(FeatureMatrix::new(v, ids("s", 2), ids("g", 2)).is_err());
    }

    #[test]
    fn selects_columns_by_id() {
        let v = Matrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let f = FeatureMatrix::new(v, ids("s", 2), ids("g", 3)).unwrap();
        let sel = f.select_features(&["g2".into(), "g0".into()]).unwrap();
        assert_eq!(sel, Matrix::from_row_slice(2, 2, &[3.0, 1.0, 6.0, 4.0]));
        assert!(f.select_features(&["nope".into()]).is_err());
    }

    #[test]
    fn standardization_gives_unit_variance() {
        let v = Matrix::from_row_slice(3, 2, &[1.0, 5.0, 2.0, 5.0, 3.0, 5.0]);
        let f = FeatureMatrix::new(v, ids("s", 3), ids("g", 2)).unwrap().standardized();
        let c0: Vec<f64> = f.values().column(0).iter().copied().collect();
        assert_eq!(c0, vec![-1.0, 0.0, 1.0]);
        assert!(f.values().column(1).iter().all(|v| *v == 0.0));
    }
}
