//! Repeated generate-fit-score runs over several view counts, comparing
//! component-wise and shared kernel weights.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{generate, recovery_accuracy_with, Matching, RecoveryAccuracy, SyntheticSpec};
use crate::associations::{activity_matrix_with, DEFAULT_THRESHOLD};
use crate::error::{Error, Result};
use crate::evaluation::{mean, Method};
use crate::inference::{fit, ModelConfig, WeightMode, ZScoreRule};
use crate::rng::{derive_seed, indexed_seed};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkOptions {
    /// Template for every dataset; `p_x` and `seed` are overridden per run.
    pub spec: SyntheticSpec,
    pub p_values: Vec<usize>,
    pub datasets: usize,
    /// `components` is taken from `spec`; `weight_mode` and `seed` are set
    /// per fit.
    pub model: ModelConfig,
    pub threshold: f64,
    pub rule: ZScoreRule,
    pub seed: u64,
    /// Worker threads; `0` uses rayon's default.
    pub jobs: usize,
}

impl Default for BenchmarkOptions {
    fn default() -> Self {
        let spec = SyntheticSpec::default();
        BenchmarkOptions {
            p_values: vec![spec.p_x],
            model: ModelConfig {
                components: spec.components,
                ..ModelConfig::default()
            },
            spec,
            datasets: 100,
            threshold: DEFAULT_THRESHOLD,
            rule: ZScoreRule::Prior,
            seed: 0,
            jobs: 0,
        }
    }
}

/// Result of fitting one weight mode on one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub p_x: usize,
    pub dataset: usize,
    pub method: String,
    pub mse: f64,
    pub accuracy: RecoveryAccuracy,
}

/// Means and standard errors over datasets for one `(p_x, method)` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub px: usize,
    pub method: String,
    pub mse_mean: f64,
    pub mse_se: f64,
    pub acc_shared: f64,
    pub acc_specific: f64,
    pub acc_empty: f64,
    pub acc_shared_se: f64,
    pub acc_specific_se: f64,
    pub acc_empty_se: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkResult {
    pub runs: Vec<RunOutcome>,
    pub rows: Vec<BenchmarkRow>,
}

/// Standard error of the mean with the `n - 1` variance; zero for `n < 2`.
pub fn standard_error(v: &[f64]) -> f64 {
    let n = v.len();
    if n < 2 {
        return 0.0;
    }
    let mu = mean(v);
    let var = v.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

const MODES: [WeightMode; 2] = [WeightMode::ComponentWise, WeightMode::SharedAcrossComponents];

fn method_label(mode: WeightMode) -> &'static str {
    match mode {
        WeightMode::ComponentWise => Method::CwKbmf.label(),
        WeightMode::SharedAcrossComponents => Method::SharedKbmf.label(),
    }
}

/// Dataset `d` uses the same generator seed for every `p_x`.
pub fn dataset_spec(options: &BenchmarkOptions, p_x: usize, d: usize) -> SyntheticSpec {
    SyntheticSpec {
        p_x,
        seed: indexed_seed(derive_seed(options.seed, "synth"), &[d as u64]),
        ..options.spec.clone()
    }
}

fn run_one(options: &BenchmarkOptions, p_x: usize, d: usize) -> Result<Vec<RunOutcome>> {
    let data = generate(&dataset_spec(options, p_x, d))?;
    let matching = if options.spec.components > super::MAX_EXHAUSTIVE_COMPONENTS {
        Matching::Greedy
    } else {
        Matching::Exhaustive
    };
    MODES
        .iter()
        .map(|&mode| {
            let cfg = ModelConfig {
                components: options.spec.components,
                weight_mode: mode,
                seed: indexed_seed(derive_seed(options.seed, "fit"), &[p_x as u64, d as u64]),
                ..options.model.clone()
            };
            let model = fit(&cfg, &data.kernels_x, &data.kernels_z, &data.y)?;
            let active = activity_matrix_with(&model, options.threshold, options.rule);
            Ok(RunOutcome {
                p_x,
                dataset: d,
                method: method_label(mode).to_string(),
                mse: data.test_mse(&model.predict_in_matrix()),
                accuracy: recovery_accuracy_with(&data.truth, &active, matching)?,
            })
        })
        .collect()
}

/// Runs every `(p_x, dataset)` pair, in parallel, and summarises per
/// `(p_x, method)`. Results are ordered by `p_x`, dataset, then method,
/// independent of scheduling.
pub fn run_benchmark(options: &BenchmarkOptions) -> Result<BenchmarkResult> {
    if options.datasets == 0 || options.p_values.is_empty() {
        return Err(Error::InvalidInput(
            "benchmark needs at least one dataset and one p_x".into(),
        ));
    }
    let tasks: Vec<(usize, usize)> = options
        .p_values
        .iter()
        .flat_map(|&p| (0..options.datasets).map(move |d| (p, d)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.jobs)
        .build()
        .map_err(|e| Error::InvalidInput(format!("cannot start worker pool: {e}")))?;
    let runs: Vec<RunOutcome> = pool
        .install(|| {
            tasks
                .par_iter()
                .map(|&(p, d)| run_one(options, p, d))
                .collect::<Result<Vec<_>>>()
        })?
        .into_iter()
        .flatten()
        .collect();

    let mut rows = Vec::new();
    for &p in &options.p_values {
        for mode in MODES {
            let label = method_label(mode);
            let sel: Vec<&RunOutcome> = runs.iter().filter(|r| r.p_x == p && r.method == label).collect();
            let col = |f: &dyn Fn(&RunOutcome) -> f64| sel.iter().map(|r| f(r)).collect::<Vec<f64>>();
            let mse = col(&|r| r.mse);
            let sh = col(&|r| r.accuracy.shared);
            let sp = col(&|r| r.accuracy.specific);
            let em = col(&|r| r.accuracy.empty);
            rows.push(BenchmarkRow {
                px: p,
                method: label.to_string(),
                mse_mean: mean(&mse),
                mse_se: standard_error(&mse),
                acc_shared: mean(&sh),
                acc_specific: mean(&sp),
                acc_empty: mean(&em),
                acc_shared_se: standard_error(&sh),
                acc_specific_se: standard_error(&sp),
                acc_empty_se: standard_error(&em),
                n: sel.len(),
            });
        }
    }
    Ok(BenchmarkResult { runs, rows })
}

impl BenchmarkResult {
    pub fn row(&self, px: usize, method: Method) -> Option<&BenchmarkRow> {
        self.rows.iter().find(|r| r.px == px && r.method == method.label())
    }

    /// `px, method, mse_mean, mse_se, acc_shared, acc_specific, acc_empty`
    /// followed by the accuracy standard errors and the dataset count.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from(
            "px\tmethod\tmse_mean\tmse_se\tacc_shared\tacc_specific\tacc_empty\t\
             acc_shared_se\tacc_specific_se\tacc_empty_se\tn\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{}\t{}\t{:?}\t{:?}\t{:?}\t{:?}\t{:?}\t{:?}\t{:?}\t{:?}\t{}\n",
                r.px,
                r.method,
                r.mse_mean,
                r.mse_se,
                r.acc_shared,
                r.acc_specific,
                r.acc_empty,
                r.acc_shared_se,
                r.acc_specific_se,
                r.acc_empty_se,
                r.n
            ));
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
