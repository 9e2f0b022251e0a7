//! Serde adapters writing dense matrices as `{rows, cols, data}` with `data`
//! in row-major order.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::linalg::Matrix;

#[derive(Serialize, Deserialize)]
struct RowMajor {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl From<&Matrix> for RowMajor {
    fn from(m: &Matrix) -> Self {
        RowMajor {
            rows: m.nrows(),
            cols: m.ncols(),
            data: m.transpose().iter().copied().collect(),
        }
    }
}

impl RowMajor {
    fn into_matrix<E: serde::de::Error>(self) -> Result<Matrix, E> {
        if self.data.len() != self.rows * self.cols {
            return Err(E::custom(format!(
                "matrix {}x{} has {} values",
                self.rows,
                self.cols,
                self.data.len()
            )));
        }
        Ok(Matrix::from_row_slice(self.rows, self.cols, &self.data))
    }
}

pub fn serialize<S: Serializer>(m: &Matrix, s: S) -> Result<S::Ok, S::Error> {
    RowMajor::from(m).serialize(s)
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Matrix, D::Error> {
    RowMajor::deserialize(d)?.into_matrix()
}

pub mod vec {
    use super::*;

    pub fn serialize<S: Serializer>(ms: &[Matrix], s: S) -> Result<S::Ok, S::Error> {
        ms.iter().map(RowMajor::from).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Matrix>, D::Error> {
        Vec::<RowMajor>::deserialize(d)?
            .into_iter()
            .map(RowMajor::into_matrix)
            .collect()
    }
}
