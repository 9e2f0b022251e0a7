use std::path::Path;

use serde::{Deserialize, Serialize};

use super::problem::VariationalProblem;
use super::state::{Side, VariationalState};
use super::{ModelConfig, ResponseMatrix, WeightMode};
use crate::error::{Error, Result};
use crate::kernelviews::{Kernel, KernelSet, View};
use crate::linalg::Matrix;

const MODEL_FORMAT: &str = "cwkbmf-model";
const MODEL_VERSION: u32 = 1;

/// Relative tolerance when comparing a cross-kernel width to the training width.
const WIDTH_TOL: f64 = 1e-9;

/// Per-column standardisation of the training responses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnNormalization {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl ColumnNormalization {
    /// Mean and population standard deviation of the observed entries of each
    /// column. Columns with standard deviation below `1e-12` (or fewer than one
    /// observation) are given a scale of one and reported in the warnings.
    pub fn from_observed(y: &ResponseMatrix) -> (ColumnNormalization, Vec<String>) {
        let c = y.ncols();
        let mut sum = vec![0.0; c];
        let mut count = vec![0usize; c];
        for (i, j) in y.observed() {
            sum[j] += y.values[(i, j)];
            count[j] += 1;
        }
        let mean: Vec<f64> = (0..c)
            .map(|j| if count[j] > 0 { sum[j] / count[j] as f64 } else { 0.0 })
            .collect();
        let mut ss = vec![0.0; c];
        for (i, j) in y.observed() {
            ss[j] += (y.values[(i, j)] - mean[j]).powi(2);
        }
        let mut warnings = Vec::new();
        let std = (0..c)
            .map(|j| {
                let sd = if count[j] > 0 {
                    (ss[j] / count[j] as f64).sqrt()
                } else {
                    0.0
                };
                if sd < 1e-12 {
                    let msg = format!(
                        "column `{}` has zero variance over {} observed entries; scale set to 1",
                        y.col_ids[j], count[j]
                    );
                    log::warn!("{msg}");
                    warnings.push(msg);
                    1.0
                } else {
                    sd
                }
            })
            .collect();
        (ColumnNormalization { mean, std }, warnings)
    }

    pub fn apply(&self, y: &ResponseMatrix) -> Result<ResponseMatrix> {
        let mut values = y.values.clone();
        for (j, mut col) in values.column_iter_mut().enumerate() {
            for v in col.iter_mut() {
                *v = (*v - self.mean[j]) / self.std[j];
            }
        }
        y.with_values(values)
    }

    /// Maps normalised predictions back to the response scale, in place.
    pub fn invert(&self, m: &mut Matrix) {
        for (j, mut col) in m.column_iter_mut().enumerate() {
            for v in col.iter_mut() {
                *v = *v * self.std[j] + self.mean[j];
            }
        }
    }
}

impl ResponseMatrix {
    fn with_values(&self, values: Matrix) -> Result<ResponseMatrix> {
        ResponseMatrix::new(values, self.mask.clone(), self.row_ids.clone(), self.col_ids.clone())
    }
}

/// How posterior kernel weights are turned into activity z-scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum ZScoreRule {
    /// `|E[e]|` divided by the prior standard deviation of `e` with `eta` at
    /// its prior mean.
    #[default]
    Prior,
    /// `|E[e] - mean| / sd` with mean and sd taken over all entries of the
    /// `P x R` weight matrix.
    Empirical,
}

/// Posterior kernel-weight summaries for one side, both `P x R`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelWeights {
    pub means: Matrix,
    pub zscores: Matrix,
}

/// Identity of one training view kept with the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewInfo {
    pub name: String,
    pub width: Option<f64>,
    /// Feature ids of the view when it was built from a feature matrix.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub feature_ids: Vec<String>,
}

fn view_infos(k: &KernelSet) -> Vec<ViewInfo> {
    k.names()
        .iter()
        .zip(k.kernels())
        .map(|(name, kern)| ViewInfo {
            name: name.clone(),
            width: kern.width,
            feature_ids: Vec::new(),
        })
        .collect()
}

/// Converged model, immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    config: ModelConfig,
    normalization: ColumnNormalization,
    row_ids: Vec<String>,
    col_ids: Vec<String>,
    x_views: Vec<ViewInfo>,
    z_views: Vec<ViewInfo>,
    warnings: Vec<String>,
    state: VariationalState,
}

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    format: String,
    version: u32,
    #[serde(flatten)]
    model: FittedModel,
}

/// Normalises the observed responses per column, initialises, and runs
/// coordinate ascent until convergence or `max_sweeps`.
pub fn fit(config: &ModelConfig, kx: &KernelSet, kz: &KernelSet, y: &ResponseMatrix) -> Result<FittedModel> {
    let (normalization, warnings) = ColumnNormalization::from_observed(y);
    let y_norm = normalization.apply(y)?;
    let problem = VariationalProblem::new(config, kx, kz, &y_norm)?;
    let mut state = problem.initialize();
    problem.run(&mut state)?;
    Ok(FittedModel {
        config: config.clone(),
        normalization,
        row_ids: y.row_ids.clone(),
        col_ids: y.col_ids.clone(),
        x_views: view_infos(kx),
        z_views: view_infos(kz),
        warnings,
        state,
    })
}

impl FittedModel {
    /// Assembles a model from an externally produced state (used to inject
    /// known parameters).
    pub fn from_parts(
        config: ModelConfig,
        state: VariationalState,
        normalization: ColumnNormalization,
        kx: &KernelSet,
        kz: &KernelSet,
        row_ids: Vec<String>,
        col_ids: Vec<String>,
    ) -> Result<FittedModel> {
        let (nx, nz) = (state.x.n_samples(), state.z.n_samples());
        if row_ids.len() != nx
            || col_ids.len() != nz
            || normalization.mean.len() != nz
            || normalization.std.len() != nz
            || kx.n_views() != state.x.n_views()
            || kz.n_views() != state.z.n_views()
        {
            return Err(Error::Dimension("model parts have inconsistent shapes".into()));
        }
        Ok(FittedModel {
            config,
            normalization,
            row_ids,
            col_ids,
            x_views: view_infos(kx),
            z_views: view_infos(kz),
            warnings: Vec::new(),
            state,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn state(&self) -> &VariationalState {
        &self.state
    }

    pub fn normalization(&self) -> &ColumnNormalization {
        &self.normalization
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn row_ids(&self) -> &[String] {
        &self.row_ids
    }

    pub fn col_ids(&self) -> &[String] {
        &self.col_ids
    }

    pub fn elbo_trace(&self) -> &[f64] {
        &self.state.elbo_trace
    }

    pub fn view_names(&self, side: Side) -> Vec<String> {
        self.views(side).iter().map(|v| v.name.clone()).collect()
    }

    pub fn views(&self, side: Side) -> &[ViewInfo] {
        match side {
            Side::X => &self.x_views,
            Side::Z => &self.z_views,
        }
    }

    /// Records the feature ids of each x-side view so that new samples can be
    /// kernelised against the training samples later.
    pub fn with_x_view_features(mut self, views: &[View]) -> Result<FittedModel> {
        if views.len() != self.x_views.len() {
            return Err(Error::Dimension(format!(
                "{} view definitions for {} model views",
                views.len(),
                self.x_views.len()
            )));
        }
        for (info, view) in self.x_views.iter_mut().zip(views) {
            if info.name != view.name {
                return Err(Error::InvalidInput(format!(
                    "view `{}` does not match model view `{}`",
                    view.name, info.name
                )));
            }
            info.feature_ids = view.feature_ids.clone();
        }
        Ok(self)
    }

    /// `E[H_x] E[H_z]^T` on the response scale, `N_x x N_z`.
    pub fn predict_in_matrix(&self) -> Matrix {
        let mut pred = self.state.mean_prediction();
        self.normalization.invert(&mut pred);
        pred
    }

    /// Latent representation of new rows, `M x R`:
    /// `h^s = sum_m E[e_m^s] (E[A]^T k_m)^s`.
    pub fn project_new_rows(&self, cross: &[Kernel]) -> Result<Matrix> {
        let x = &self.state.x;
        if cross.len() != x.n_views() {
            return Err(Error::Dimension(format!(
                "{} cross kernels for {} x-side views",
                cross.len(),
                x.n_views()
            )));
        }
        let m_new = cross[0].values.ncols();
        let r = x.n_components();
        let mut h = Matrix::zeros(m_new, r);
        for (m, (k, info)) in cross.iter().zip(&self.x_views).enumerate() {
            if k.values.nrows() != x.n_samples() || k.values.ncols() != m_new {
                return Err(Error::Dimension(format!(
                    "cross kernel {m} is {}x{}, expected {}x{m_new}",
                    k.values.nrows(),
                    k.values.ncols(),
                    x.n_samples()
                )));
            }
            if let (Some(w_new), Some(w_train)) = (k.width, info.width) {
                if ((w_new - w_train) / w_train).abs() > WIDTH_TOL {
                    return Err(Error::InvalidInput(format!(
                        "cross kernel for `{}` has width {w_new}, training width is {w_train}",
                        info.name
                    )));
                }
            }
            let g = k.values.transpose() * &x.a_mean;
            for s in 0..r {
                h.column_mut(s).axpy(x.e_mean[(m, s)], &g.column(s), 1.0);
            }
        }
        Ok(h)
    }

    /// Predictions for new rows given one `N_x x M` cross kernel per x-view.
    pub fn predict_new_rows(&self, cross: &[Kernel]) -> Result<Matrix> {
        let h = self.project_new_rows(cross)?;
        let mut pred = h * self.state.z.h_mean.transpose();
        self.normalization.invert(&mut pred);
        Ok(pred)
    }

    /// Posterior means of the kernel weights and their activity z-scores.
    pub fn posterior_kernel_weights(&self, side: Side, rule: ZScoreRule) -> KernelWeights {
        let means = self.state.side(side).e_mean.clone();
        let zscores = match rule {
            ZScoreRule::Prior => {
                let hp = &self.config.hyper;
                // e | eta ~ N(0, 1/eta) with eta at its prior mean alpha * beta.
                let prior_sd = 1.0 / (hp.alpha_eta * hp.beta_eta).sqrt();
                means.map(|v| v.abs() / prior_sd)
            }
            ZScoreRule::Empirical => {
                let n = means.len() as f64;
                let mu = means.sum() / n;
                let sd = (means.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / n).sqrt();
                let sd = if sd > 0.0 { sd } else { 1.0 };
                means.map(|v| ((v - mu) / sd).abs())
            }
        };
        KernelWeights { means, zscores }
    }

    pub fn weight_mode(&self) -> WeightMode {
        self.config.weight_mode
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = ModelDocument {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            model: self.clone(),
        };
        Ok(serde_json::to_string(&doc)?)
    }

    pub fn from_json(s: &str) -> Result<FittedModel> {
        let doc: ModelDocument = serde_json::from_str(s)?;
        if doc.format != MODEL_FORMAT {
            return Err(Error::InvalidInput(format!(
                "not a model document: format `{}`",
                doc.format
            )));
        }
        if doc.version != MODEL_VERSION {
            return Err(Error::InvalidInput(format!(
                "unsupported model version {} (expected {MODEL_VERSION})",
                doc.version
            )));
        }
        Ok(doc.model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<FittedModel> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        FittedModel::from_json(&s).map_err(|e| Error::parse(path, e.to_string()))
    }
}
