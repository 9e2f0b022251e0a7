//! Variational mean-field inference for kernelized Bayesian matrix
//! factorization with component-wise multiple kernel learning.
//!
//! Generative model, for each side (`x` rows, `z` columns) with `P` kernels
//! `K_m` of size `N x N` and `R` components:
//!
//! ```text
//! lambda[i,s] ~ Gamma(alpha_lambda, beta_lambda)        (shape, scale)
//! a[i,s]      ~ N(0, 1 / lambda[i,s])
//! g_m[i,s]    ~ N(a_s^T k_{m,i}, sigma_g^2)
//! eta[m,s]    ~ Gamma(alpha_eta, beta_eta)
//! e[m,s]      ~ N(0, 1 / eta[m,s])
//! h[i,s]      ~ N(sum_m e[m,s] g_m[i,s], sigma_h^2)
//! y[i,j]      ~ N(h_x[i]^T h_z[j], sigma_y^2)               (observed only)
//! ```
//!
//! In [`WeightMode::SharedAcrossComponents`] the weights are tied,
//! `e[m,s] = e[m]` with a single `eta[m]` per view, which is the classic
//! single-weight-per-kernel formulation.
//!
//! The variational family factorises as
//! `q(lambda) q(A) prod_m q(G_m) q(eta) q(e) q(H)` per side. `q(A)` has one
//! full `N x N` covariance per component, `q(G_m)` one variance per
//! (view, component) shared by all rows, `q(e)` one `P x P` covariance per
//! component and `q(H)` one `R x R` covariance per row.

mod elbo;
mod model;
mod problem;
mod state;
mod updates;

pub use model::{fit, ColumnNormalization, FittedModel, KernelWeights, ZScoreRule};
pub use problem::VariationalProblem;
pub use state::{Factor, Side, SideState, VariationalState};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Prior hyperparameters. Gamma distributions use the shape/scale convention.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparameters {
    pub alpha_eta: f64,
    pub beta_eta: f64,
    pub alpha_lambda: f64,
    pub beta_lambda: f64,
    pub sigma_g: f64,
    pub sigma_h: f64,
    pub sigma_y: f64,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Hyperparameters {
            alpha_eta: 1.0,
            beta_eta: 1.0,
            alpha_lambda: 1.0,
            beta_lambda: 1.0,
            sigma_g: 0.1,
            sigma_h: 0.1,
            sigma_y: 1.0,
        }
    }
}

impl Hyperparameters {
    pub fn validate(&self) -> Result<()> {
        let all = [
            ("alpha_eta", self.alpha_eta),
            ("beta_eta", self.beta_eta),
            ("alpha_lambda", self.alpha_lambda),
            ("beta_lambda", self.beta_lambda),
            ("sigma_g", self.sigma_g),
            ("sigma_h", self.sigma_h),
            ("sigma_y", self.sigma_y),
        ];
        for (name, v) in all {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "hyperparameter {name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WeightMode {
    /// One kernel weight per (view, component).
    ComponentWise,
    /// One kernel weight per view, shared by all components.
    SharedAcrossComponents,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub components: usize,
    pub max_sweeps: usize,
    pub elbo_rel_tol: f64,
    pub seed: u64,
    pub weight_mode: WeightMode,
    pub hyper: Hyperparameters,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            components: 10,
            max_sweeps: 200,
            elbo_rel_tol: 1e-6,
            seed: 0,
            weight_mode: WeightMode::ComponentWise,
            hyper: Hyperparameters::default(),
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.components == 0 {
            return Err(Error::InvalidInput("number of components must be at least 1".into()));
        }
        if self.max_sweeps == 0 {
            return Err(Error::InvalidInput("max_sweeps must be at least 1".into()));
        }
        if self.elbo_rel_tol.is_nan() || self.elbo_rel_tol < 0.0 {
            return Err(Error::InvalidInput("elbo_rel_tol must be non-negative".into()));
        }
        self.hyper.validate()
    }
}

/// Response matrix with an observation mask (`true` = observed).
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseMatrix {
    pub values: Matrix,
    pub mask: Vec<bool>,
    pub row_ids: Vec<String>,
    pub col_ids: Vec<String>,
}

impl ResponseMatrix {
    /// `mask` is row-major, `rows * cols` long.
    pub fn new(values: Matrix, mask: Vec<bool>, row_ids: Vec<String>, col_ids: Vec<String>) -> Result<Self> {
        let (r, c) = values.shape();
        if mask.len() != r * c || row_ids.len() != r || col_ids.len() != c {
            return Err(Error::Dimension(format!(
                "response matrix {r}x{c} with mask of {} and {}x{} ids",
                mask.len(),
                row_ids.len(),
                col_ids.len()
            )));
        }
        let m = ResponseMatrix {
            values,
            mask,
            row_ids,
            col_ids,
        };
        if m.n_observed() == 0 {
            return Err(Error::InvalidInput("response matrix has no observed entries".into()));
        }
        for (i, j) in m.observed() {
            if !m.values[(i, j)].is_finite() {
                return Err(Error::InvalidInput(format!(
                    "observed response ({i}, {j}) is not finite"
                )));
            }
        }
        Ok(m)
    }

    /// Fully observed matrix with generated ids.
    pub fn dense(values: Matrix) -> Result<Self> {
        let (r, c) = values.shape();
        ResponseMatrix::new(
            values,
            vec![true; r * c],
            (0..r).map(|i| format!("row{i}")).collect(),
            (0..c).map(|j| format!("col{j}")).collect(),
        )
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    pub fn is_observed(&self, i: usize, j: usize) -> bool {
        self.mask[i * self.ncols() + j]
    }

    pub fn n_observed(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }

    /// Observed `(row, col)` pairs in row-major order.
    pub fn observed(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let c = self.ncols();
        self.mask
            .iter()
            .enumerate()
            .filter(|(_, m)| **m)
            .map(move |(k, _)| (k / c, k % c))
    }

    pub fn select_rows(&self, rows: &[usize]) -> Result<ResponseMatrix> {
        let c = self.ncols();
        let mask = rows
            .iter()
            .flat_map(|&i| self.mask[i * c..(i + 1) * c].iter().copied())
            .collect();
        ResponseMatrix::new(
            self.values.select_rows(rows),
            mask,
            rows.iter().map(|&i| self.row_ids[i].clone()).collect(),
            self.col_ids.clone(),
        )
    }

    /// Same values, new mask.
    pub fn with_mask(&self, mask: Vec<bool>) -> Result<ResponseMatrix> {
        ResponseMatrix::new(self.values.clone(), mask, self.row_ids.clone(), self.col_ids.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_hyperparameters() {
        let h = Hyperparameters::default();
        assert_eq!(
            (h.alpha_eta, h.beta_eta, h.alpha_lambda, h.beta_lambda),
            (1.0, 1.0, 1.0, 1.0)
        );
        assert_eq!((h.sigma_g, h.sigma_h, h.sigma_y), (0.1, 0.1, 1.0));
    }

    #[test]
    fn default_stopping_rule() {
        let c = ModelConfig::default();
        assert_eq!(c.max_sweeps, 200);
        assert_eq!(c.elbo_rel_tol, 1e-6);
    }

    #[test]
    fn invalid_config_rejected() {
        let c = ModelConfig {
            components: 0,
            ..ModelConfig::default()
        };
        assert!(c.validate().is_err());
        let mut c = ModelConfig::default();
        c.hyper.sigma_y = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn response_requires_an_observation() {
        let v = Matrix::zeros(2, 2);
        assert!(ResponseMatrix::new(
            v.clone(),
            vec![false; 4],
            vec!["a".into(), "b".into()],
            vec!["c".into(), "d".into()]
        )
        .is_err());
        let mut w = v.clone();
        w[(0, 0)] = f64::NAN;
        // NaN at an unobserved entry is fine.
        assert!(ResponseMatrix::new(
            w.clone(),
            vec![false, true, true, true],
            vec!["a".into(), "b".into()],
            vec!["c".into(), "d".into()]
        )
        .is_ok());
        assert!(ResponseMatrix::dense(w).is_err());
    }

    #[test]
    fn observed_iterates_row_major() {
        let y = ResponseMatrix::new(
            Matrix::zeros(2, 3),
            vec![true, false, true, false, true, false],
            vec!["a".into(), "b".into()],
            vec!["x".into(), "y".into(), "z".into()],
        )
        .unwrap();
        let obs: Vec<_> = y.observed().collect();
        assert_eq!(obs, vec![(0, 0), (0, 2), (1, 1)]);
        let sub = y.select_rows(&[1]).unwrap();
        assert_eq!(sub.mask, vec![false, true, false]);
    }
}
