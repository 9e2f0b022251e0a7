//! Resolved run configurations. Each subcommand starts from the defaults (or
//! a JSON file given with `--config`), applies its command-line overrides and
//! writes the result to `config.json` in the output directory.

use std::path::{Path, PathBuf};

use cwkbmf::associations::{DEFAULT_THRESHOLD, DEFAULT_TOP_K};
use cwkbmf::inference::{Hyperparameters, ModelConfig, WeightMode, ZScoreRule};
use cwkbmf::synthetic::SyntheticSpec;
use cwkbmf::{Error, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub const CONFIG_ECHO: &str = "config.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Common {
    pub seed: u64,
    pub out: PathBuf,
    /// Worker threads; 0 lets the runtime decide.
    pub jobs: usize,
}

impl Default for Common {
    fn default() -> Self {
        Common {
            seed: 0,
            out: PathBuf::from("out"),
            jobs: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DataConfig {
    /// Genes x cell lines.
    pub expression: Option<PathBuf>,
    /// Cell lines x drugs.
    pub responses: Option<PathBuf>,
    pub gene_sets: Option<PathBuf>,
    /// Pathway names to use as views, one per line.
    pub pathways: Option<PathBuf>,
    /// Target names, one per line; pathways whose names mention a target are
    /// used as views. Ignored when `pathways` is set.
    pub targets: Option<PathBuf>,
    /// Features x drugs. Without it the drug side uses an identity kernel.
    pub drug_features: Option<PathBuf>,
    pub standardize_features: bool,
    pub trace_normalize: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelSettings {
    pub components: usize,
    pub max_sweeps: usize,
    pub elbo_rel_tol: f64,
    pub weight_mode: WeightMode,
    pub hyper: Hyperparameters,
}

impl Default for ModelSettings {
    fn default() -> Self {
        let d = ModelConfig::default();
        ModelSettings {
            components: d.components,
            max_sweeps: d.max_sweeps,
            elbo_rel_tol: d.elbo_rel_tol,
            weight_mode: d.weight_mode,
            hyper: d.hyper,
        }
    }
}

impl ModelSettings {
    pub fn model_config(&self, seed: u64) -> ModelConfig {
        ModelConfig {
            components: self.components,
            max_sweeps: self.max_sweeps,
            elbo_rel_tol: self.elbo_rel_tol,
            seed,
            weight_mode: self.weight_mode,
            hyper: self.hyper,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    #[serde(flatten)]
    pub common: Common,
    pub data: DataConfig,
    pub model: ModelSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CvConfig {
    #[serde(flatten)]
    pub common: Common,
    pub data: DataConfig,
    pub model: ModelSettings,
    pub folds: usize,
    pub repeats: usize,
    pub methods: Vec<String>,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            common: Common::default(),
            data: DataConfig::default(),
            model: ModelSettings::default(),
            folds: 5,
            repeats: 10,
            methods: cwkbmf::evaluation::Method::ALL
                .iter()
                .map(|m| m.label().to_string())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PredictConfig {
    #[serde(flatten)]
    pub common: Common,
    pub model: Option<PathBuf>,
    /// Expression the model was trained on (genes x cell lines).
    pub train_expression: Option<PathBuf>,
    /// Expression of the cell lines to predict (genes x cell lines).
    pub expression: Option<PathBuf>,
    pub standardize_features: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    #[serde(flatten)]
    pub common: Common,
    pub spec: SyntheticSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    #[serde(flatten)]
    pub common: Common,
    /// `p_x` and `seed` are set per dataset.
    pub spec: SyntheticSpec,
    pub p_values: Vec<usize>,
    pub datasets: usize,
    pub max_sweeps: usize,
    pub hyper: Hyperparameters,
    pub threshold: f64,
    pub zscore_rule: ZScoreRule,
}

impl Default for BenchConfig {
    fn default() -> Self {
        let spec = SyntheticSpec::default();
        BenchConfig {
            common: Common::default(),
            p_values: vec![spec.p_x],
            spec,
            datasets: 100,
            max_sweeps: ModelConfig::default().max_sweeps,
            hyper: Hyperparameters::default(),
            threshold: DEFAULT_THRESHOLD,
            zscore_rule: ZScoreRule::Prior,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AssocConfig {
    #[serde(flatten)]
    pub common: Common,
    pub model: Option<PathBuf>,
    pub top_k: usize,
    pub threshold: f64,
    pub zscore_rule: ZScoreRule,
    /// Drug-target TSV used to order components by target consistency.
    pub drug_targets: Option<PathBuf>,
}

impl Default for AssocConfig {
    fn default() -> Self {
        AssocConfig {
            common: Common::default(),
            model: None,
            top_k: DEFAULT_TOP_K,
            threshold: DEFAULT_THRESHOLD,
            zscore_rule: ZScoreRule::Prior,
            drug_targets: None,
        }
    }
}

/// Defaults, or the contents of `path` on top of the defaults.
pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            serde_json::from_str(&text).map_err(|e| Error::parse(p, e.to_string()))
        }
    }
}

/// Creates the output directory and writes the resolved configuration.
pub fn echo<T: Serialize>(config: &T, out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let path = out.join(CONFIG_ECHO);
    let mut text = serde_json::to_string_pretty(config)?;
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

pub fn require<'a>(p: &'a Option<PathBuf>, what: &str) -> Result<&'a Path> {
    p.as_deref()
        .ok_or_else(|| Error::InvalidInput(format!("missing required input: {what}")))
}
