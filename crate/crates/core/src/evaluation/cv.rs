use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::spearman::spearman;
use crate::error::{Error, Result};
use crate::inference::{fit, ModelConfig, ResponseMatrix, WeightMode};
use crate::kernelviews::KernelSet;
use crate::linalg::Matrix;
use crate::rng::{derive_seed, indexed_rng, indexed_seed};

/// Repeated k-fold partition of the sample (row) axis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CvPlan {
    pub n_samples: usize,
    pub k_folds: usize,
    pub n_repeats: usize,
    pub seed: u64,
    /// `folds[repeat][fold]`, sorted sample indices.
    pub folds: Vec<Vec<Vec<usize>>>,
}

impl CvPlan {
    /// Indices of every sample outside `folds[repeat][fold]`.
    pub fn training(&self, repeat: usize, fold: usize) -> Vec<usize> {
        let mut held = vec![false; self.n_samples];
        for &i in &self.folds[repeat][fold] {
            held[i] = true;
        }
        (0..self.n_samples).filter(|&i| !held[i]).collect()
    }
}

/// Shuffles `0..n` once per repeat and slices the shuffle into `k` folds whose
/// sizes differ by at most one (the larger folds come first).
pub fn make_cv_plan(n: usize, k: usize, repeats: usize, seed: u64) -> Result<CvPlan> {
    if k < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 folds, got {k}")));
    }
    if n < k {
        return Err(Error::InvalidInput(format!("{n} samples cannot fill {k} folds")));
    }
    if repeats == 0 {
        return Err(Error::InvalidInput("need at least one repeat".into()));
    }
    let root = derive_seed(seed, "cv-plan");
    let folds = (0..repeats)
        .map(|r| {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut indexed_rng(root, &[r as u64]));
            let (base, extra) = (n / k, n % k);
            let mut start = 0;
            (0..k)
                .map(|f| {
                    let len = base + usize::from(f < extra);
                    let mut fold = order[start..start + len].to_vec();
                    fold.sort_unstable();
                    start += len;
                    fold
                })
                .collect()
        })
        .collect();
    Ok(CvPlan {
        n_samples: n,
        k_folds: k,
        n_repeats: repeats,
        seed,
        folds,
    })
}

/// Per-column mean of the observed training responses, repeated for `n_test`
/// rows.
pub fn baseline_predict(train_y: &ResponseMatrix, n_test: usize) -> Result<Matrix> {
    let c = train_y.ncols();
    let mut sum = vec![0.0; c];
    let mut count = vec![0usize; c];
    for (i, j) in train_y.observed() {
        sum[j] += train_y.values[(i, j)];
        count[j] += 1;
    }
    if let Some(j) = count.iter().position(|&n| n == 0) {
        return Err(Error::InvalidInput(format!(
            "column `{}` has no observed training entries",
            train_y.col_ids[j]
        )));
    }
    Ok(Matrix::from_fn(n_test, c, |_, j| sum[j] / count[j] as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "cwKBMF")]
    CwKbmf,
    #[serde(rename = "sharedKBMF")]
    SharedKbmf,
    #[serde(rename = "baseline")]
    Baseline,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::CwKbmf, Method::SharedKbmf, Method::Baseline];

    pub fn label(self) -> &'static str {
        match self {
            Method::CwKbmf => "cwKBMF",
            Method::SharedKbmf => "sharedKBMF",
            Method::Baseline => "baseline",
        }
    }

    pub fn parse(s: &str) -> Result<Method> {
        Method::ALL
            .into_iter()
            .find(|m| m.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidInput(format!("unknown method `{s}`")))
    }

    fn weight_mode(self) -> Option<WeightMode> {
        match self {
            Method::CwKbmf => Some(WeightMode::ComponentWise),
            Method::SharedKbmf => Some(WeightMode::SharedAcrossComponents),
            Method::Baseline => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrugRho {
    pub drug: String,
    /// Mean over repeats; undefined repeats count as zero.
    pub rho: f64,
    pub per_repeat: Vec<f64>,
    /// Repeats whose correlation was undefined (constant predictions or
    /// responses, or fewer than two observations).
    pub undefined_repeats: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldMse {
    pub repeat: usize,
    pub fold: usize,
    /// Over the observed held-out entries; `None` if the fold has none.
    pub mse: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub method: Method,
    pub per_drug: Vec<DrugRho>,
    pub cumulative_rho: f64,
    pub per_fold_mse: Vec<FoldMse>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub plan: CvPlan,
    pub reports: Vec<EvaluationReport>,
}

impl CvResult {
    pub fn report(&self, method: Method) -> Option<&EvaluationReport> {
        self.reports.iter().find(|r| r.method == method)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One `method, drug, rho` line per method and drug, with a header.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("method\tdrug\trho\n");
        for r in &self.reports {
            for d in &r.per_drug {
                out.push_str(&format!("{}\t{}\t{}\n", r.method.label(), d.drug, d.rho));
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct CvOptions {
    pub methods: Vec<Method>,
    /// Worker threads for the fold jobs; `0` uses rayon's default.
    pub jobs: usize,
}

impl Default for CvOptions {
    fn default() -> Self {
        CvOptions {
            methods: Method::ALL.to_vec(),
            jobs: 0,
        }
    }
}

/// Mean of `v`, summed left to right.
pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

struct Job {
    method: Method,
    repeat: usize,
    fold: usize,
}

fn run_job(
    job: &Job,
    kx: &KernelSet,
    kz: &KernelSet,
    y: &ResponseMatrix,
    config: &ModelConfig,
    plan: &CvPlan,
) -> Result<Matrix> {
    let test = &plan.folds[job.repeat][job.fold];
    let train = plan.training(job.repeat, job.fold);
    let y_train = y.select_rows(&train)?;
    match job.method.weight_mode() {
        None => baseline_predict(&y_train, test.len()),
        Some(mode) => {
            let cfg = ModelConfig {
                seed: indexed_seed(config.seed, &[job.repeat as u64, job.fold as u64]),
                weight_mode: mode,
                ..config.clone()
            };
            let model = fit(&cfg, &kx.restrict(&train), kz, &y_train)?;
            model.predict_new_rows(&kx.cross(&train, test))
        }
    }
}

/// Held-out evaluation of each method over every repeat and fold of `plan`.
///
/// Rows of `y` (and of the x-side kernels) are the samples being held out;
/// the z side is shared by all folds. Each repeat's held-out predictions are
/// pooled into one full matrix before the per-drug Spearman correlations are
/// taken; correlations are then averaged over repeats.
pub fn cross_validate(
    kx: &KernelSet,
    kz: &KernelSet,
    y: &ResponseMatrix,
    config: &ModelConfig,
    plan: &CvPlan,
    options: &CvOptions,
) -> Result<CvResult> {
    if kx.n_samples() != y.nrows() || kz.n_samples() != y.ncols() || plan.n_samples != y.nrows() {
        return Err(Error::Dimension(format!(
            "kernels cover {}x{} samples, plan {} rows, responses are {}x{}",
            kx.n_samples(),
            kz.n_samples(),
            plan.n_samples,
            y.nrows(),
            y.ncols()
        )));
    }
    config.validate()?;
    let jobs: Vec<Job> = options
        .methods
        .iter()
        .flat_map(|&method| {
            (0..plan.n_repeats).flat_map(move |repeat| (0..plan.k_folds).map(move |fold| Job { method, repeat, fold }))
        })
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.jobs)
        .build()
        .map_err(|e| Error::InvalidInput(format!("cannot start worker pool: {e}")))?;
    let predictions: Vec<Matrix> = pool.install(|| {
        jobs.par_iter()
            .map(|job| run_job(job, kx, kz, y, config, plan))
            .collect::<Result<Vec<_>>>()
    })?;

    let per_method = plan.n_repeats * plan.k_folds;
    let reports = options
        .methods
        .iter()
        .enumerate()
        .map(|(mi, &method)| assemble_report(method, &predictions[mi * per_method..(mi + 1) * per_method], y, plan))
        .collect();
    Ok(CvResult {
        plan: plan.clone(),
        reports,
    })
}

/// `preds` holds one held-out block per (repeat, fold), repeat-major.
fn assemble_report(method: Method, preds: &[Matrix], y: &ResponseMatrix, plan: &CvPlan) -> EvaluationReport {
    let (n, c) = (y.nrows(), y.ncols());
    let mut per_fold_mse = Vec::new();
    let mut rho = vec![Vec::with_capacity(plan.n_repeats); c];
    let mut undefined = vec![0usize; c];
    for repeat in 0..plan.n_repeats {
        let mut full = Matrix::zeros(n, c);
        for fold in 0..plan.k_folds {
            let block = &preds[repeat * plan.k_folds + fold];
            let (mut se, mut count) = (0.0, 0usize);
            for (t, &i) in plan.folds[repeat][fold].iter().enumerate() {
                for j in 0..c {
                    full[(i, j)] = block[(t, j)];
                    if y.is_observed(i, j) {
                        se += (block[(t, j)] - y.values[(i, j)]).powi(2);
                        count += 1;
                    }
                }
            }
            per_fold_mse.push(FoldMse {
                repeat,
                fold,
                mse: (count > 0).then(|| se / count as f64),
            });
        }
        for j in 0..c {
            let (truth, pred): (Vec<f64>, Vec<f64>) = (0..n)
                .filter(|&i| y.is_observed(i, j))
                .map(|i| (y.values[(i, j)], full[(i, j)]))
                .unzip();
            match spearman(&pred, &truth) {
                Ok(r) => rho[j].push(r),
                Err(_) => {
                    undefined[j] += 1;
                    rho[j].push(0.0);
                }
            }
        }
    }
    let per_drug: Vec<DrugRho> = (0..c)
        .map(|j| DrugRho {
            drug: y.col_ids[j].clone(),
            rho: mean(&rho[j]),
            per_repeat: rho[j].clone(),
            undefined_repeats: undefined[j],
        })
        .collect();
    let cumulative_rho = mean(&per_drug.iter().map(|d| d.rho).collect::<Vec<_>>());
    EvaluationReport {
        method,
        per_drug,
        cumulative_rho,
        per_fold_mse,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_by_five() {
        let plan = make_cv_plan(10, 5, 2, 1).unwrap();
        for folds in &plan.folds {
            assert!(folds.iter().all(|f| f.len() == 2));
            let mut all: Vec<usize> = folds.concat();
            all.sort_unstable();
            assert_eq!(all, (0..10).collect::<Vec<_>>());
        }
        assert_eq!(plan, make_cv_plan(10, 5, 2, 1).unwrap());
        assert_ne!(plan.folds[0], plan.folds[1]);
    }

    #[test]
    fn fold_sizes_124() {
        let plan = make_cv_plan(124, 5, 1, 0).unwrap();
        let sizes: Vec<usize> = plan.folds[0].iter().map(|f| f.len()).collect();
        assert_eq!(sizes, vec![25, 25, 25, 25, 24]);
    }

    #[test]
    fn bad_plans() {
        assert!(make_cv_plan(10, 1, 1, 0).is_err());
        assert!(make_cv_plan(3, 5, 1, 0).is_err());
        assert!(make_cv_plan(10, 2, 0, 0).is_err());
    }

    #[test]
    fn training_complements_fold() {
        let plan = make_cv_plan(7, 3, 1, 4).unwrap();
        let train = plan.training(0, 1);
        assert_eq!(train.len() + plan.folds[0][1].len(), 7);
        assert!(train.iter().all(|i| !plan.folds[0][1].contains(i)));
    }

    #[test]
    fn baseline_means() {
        let y = ResponseMatrix::dense(Matrix::from_column_slice(3, 1, &[1.0, 2.0, 3.0])).unwrap();
        assert_eq!(baseline_predict(&y, 2).unwrap(), Matrix::from_element(2, 1, 2.0));

        let y = ResponseMatrix::dense(Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0])).unwrap();
        let p = baseline_predict(&y, 3).unwrap();
        for i in 0..3 {
            assert_eq!((p[(i, 0)], p[(i, 1)]), (0.5, -0.5));
        }
    }

    #[test]
    fn baseline_rejects_unobserved_column() {
        let y = ResponseMatrix::new(
            Matrix::zeros(2, 2),
            vec![true, false, true, false],
            vec!["a".into(), "b".into()],
            vec!["d1".into(), "d2".into()],
        )
        .unwrap();
        let err = baseline_predict(&y, 1).unwrap_err();
        assert!(err.to_string().contains("d2"));
    }

    #[test]
    fn method_labels_round_trip() {
        for m in Method::ALL {
            assert_eq!(Method::parse(m.label()).unwrap(), m);
        }
        assert!(Method::parse("bmtmkl").is_err());
    }
}
