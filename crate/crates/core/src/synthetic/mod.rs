//! Synthetic data with a known view/component activity pattern.
//!
//! Every view gets its own latent features and Gaussian kernel. Each
//! component's row factor is the sum of the kernel projections of the views
//! active in it, so the generated data follow the model's own assumptions and
//! the activity pattern is recoverable in principle.

mod bench;

pub use bench::{
    dataset_spec, run_benchmark, standard_error, BenchmarkOptions, BenchmarkResult, BenchmarkRow, RunOutcome,
};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::ResponseMatrix;
use crate::kernelviews::{gaussian_kernel, Kernel, KernelSet};
use crate::linalg::Matrix;
use crate::rng::{derive_seed, indexed_rng, stream_rng};

/// Largest component count for which all column permutations are searched.
pub const MAX_EXHAUSTIVE_COMPONENTS: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub n_x: usize,
    pub n_z: usize,
    pub components: usize,
    pub p_x: usize,
    pub view_dim: usize,
    pub noise_y: f64,
    /// Standard deviation of the noise added to the row factors and to each
    /// view's projection.
    pub noise_h: f64,
    pub missing_fraction: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_x: 100,
            n_z: 100,
            components: 3,
            p_x: 10,
            view_dim: 20,
            noise_y: 1.0,
            noise_h: 0.1,
            missing_fraction: 0.01,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_x < 2 || self.n_z < 2 {
            return Err(Error::InvalidInput(
                "synthetic data needs at least 2 rows and columns".into(),
            ));
        }
        if self.components == 0 || self.view_dim == 0 {
            return Err(Error::InvalidInput("components and view_dim must be positive".into()));
        }
        if self.p_x < self.components + 2 {
            return Err(Error::InvalidInput(format!(
                "canonical pattern needs p_x >= components + 2 ({} < {})",
                self.p_x,
                self.components + 2
            )));
        }
        if !(self.noise_y >= 0.0 && self.noise_h >= 0.0) {
            return Err(Error::InvalidInput("noise levels must be non-negative".into()));
        }
        if !(0.0..1.0).contains(&self.missing_fraction) {
            return Err(Error::InvalidInput("missing_fraction must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ViewCategory {
    Shared,
    Specific(usize),
    Empty,
}

/// Which views are active in which components.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivityMask {
    /// Row-major `P x R`.
    pub active: Vec<Vec<bool>>,
    pub categories: Vec<ViewCategory>,
}

impl ActivityMask {
    pub fn n_views(&self) -> usize {
        self.active.len()
    }

    pub fn n_components(&self) -> usize {
        self.active.first().map_or(0, |r| r.len())
    }
}

/// View 0 is shared by every component; the remaining views are dealt
/// round-robin to `Specific(0), ..., Specific(R-1), Empty`.
pub fn canonical_activity(p_x: usize, components: usize) -> Result<ActivityMask> {
    if components == 0 || p_x < components + 2 {
        return Err(Error::InvalidInput(format!(
            "canonical pattern needs p_x >= components + 2, got p_x = {p_x}, R = {components}"
        )));
    }
    let mut categories = vec![ViewCategory::Shared];
    for v in 0..p_x - 1 {
        let c = v % (components + 1);
        categories.push(if c < components {
            ViewCategory::Specific(c)
        } else {
            ViewCategory::Empty
        });
    }
    let active = categories
        .iter()
        .map(|cat| {
            (0..components)
                .map(|s| match cat {
                    ViewCategory::Shared => true,
                    ViewCategory::Specific(t) => *t == s,
                    ViewCategory::Empty => false,
                })
                .collect()
        })
        .collect();
    Ok(ActivityMask { active, categories })
}

#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub kernels_x: KernelSet,
    pub kernels_z: KernelSet,
    /// Observed = training entries; test entries are masked out.
    pub y: ResponseMatrix,
    /// Row-major `n_x * n_z`, `true` for held-out test entries.
    pub test_mask: Vec<bool>,
    pub truth: ActivityMask,
    pub true_h_x: Matrix,
    pub true_h_z: Matrix,
}

impl SyntheticDataset {
    /// `(row, col)` of every test entry, row-major.
    pub fn test_entries(&self) -> Vec<(usize, usize)> {
        let c = self.y.ncols();
        self.test_mask
            .iter()
            .enumerate()
            .filter(|(_, t)| **t)
            .map(|(k, _)| (k / c, k % c))
            .collect()
    }

    /// Mean squared error of `pred` over the test entries.
    pub fn test_mse(&self, pred: &Matrix) -> f64 {
        let entries = self.test_entries();
        if entries.is_empty() {
            return f64::NAN;
        }
        entries
            .iter()
            .map(|&(i, j)| (pred[(i, j)] - self.y.values[(i, j)]).powi(2))
            .sum::<f64>()
            / entries.len() as f64
    }
}

fn normal_matrix<R: Rng>(rng: &mut R, r: usize, c: usize, sd: f64) -> Matrix {
    Matrix::from_fn(r, c, |_, _| sd * rng.sample::<f64, _>(StandardNormal))
}

/// Generates one dataset. Each random ingredient has its own stream, so e.g.
/// changing `missing_fraction` changes only the test mask.
pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticDataset> {
    spec.validate()?;
    let truth = canonical_activity(spec.p_x, spec.components)?;
    let (nx, nz, r) = (spec.n_x, spec.n_z, spec.components);
    let root = derive_seed(spec.seed, "synth");

    // One projection shared by all views.
    let projection = normal_matrix(&mut stream_rng(root, "projection"), nx, r, 1.0);
    let mut names = Vec::with_capacity(spec.p_x);
    let mut kernels = Vec::with_capacity(spec.p_x);
    let mut h_x = Matrix::zeros(nx, r);
    for (m, row) in truth.active.iter().enumerate() {
        let mut rng = indexed_rng(root, &[0, m as u64]);
        let features = normal_matrix(&mut rng, nx, spec.view_dim, 1.0);
        let kernel = gaussian_kernel(&features)?;
        let g = &kernel.values * &projection + normal_matrix(&mut rng, nx, r, spec.noise_h);
        for (s, on) in row.iter().enumerate() {
            if *on {
                h_x.column_mut(s).axpy(1.0, &g.column(s), 1.0);
            }
        }
        names.push(format!("view{m}"));
        kernels.push(kernel);
    }
    let mut rng = stream_rng(root, "h");
    h_x += normal_matrix(&mut rng, nx, r, spec.noise_h);
    let h_z = normal_matrix(&mut rng, nz, r, 1.0);

    let mut rng = stream_rng(root, "z-view");
    let z_features = normal_matrix(&mut rng, nz, spec.view_dim, 1.0);
    let kz: Kernel = gaussian_kernel(&z_features)?;

    let mut rng = stream_rng(root, "y-noise");
    let values = &h_x * h_z.transpose() + normal_matrix(&mut rng, nx, nz, spec.noise_y);

    let total = nx * nz;
    let n_test = (spec.missing_fraction * total as f64).round() as usize;
    let mut order: Vec<usize> = (0..total).collect();
    order.shuffle(&mut stream_rng(root, "mask"));
    let mut test_mask = vec![false; total];
    for &k in &order[..n_test] {
        test_mask[k] = true;
    }
    let mask = test_mask.iter().map(|t| !t).collect();
    let y = ResponseMatrix::new(
        values,
        mask,
        (0..nx).map(|i| format!("row{i}")).collect(),
        (0..nz).map(|j| format!("col{j}")).collect(),
    )?;
    Ok(SyntheticDataset {
        kernels_x: KernelSet::new(names, kernels)?,
        kernels_z: KernelSet::new(vec!["z".into()], vec![kz])?,
        y,
        test_mask,
        truth,
        true_h_x: h_x,
        true_h_z: h_z,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Matching {
    /// All `R!` column permutations (`R <= 8`).
    #[default]
    Exhaustive,
    /// Repeatedly pairs the truth/inferred columns with the largest agreement.
    Greedy,
}

/// Fraction of correctly recovered cells per view category.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoveryAccuracy {
    pub shared: f64,
    pub specific: f64,
    pub empty: f64,
}

fn agreement(truth: &ActivityMask, inferred: &[Vec<bool>], t: usize, i: usize) -> usize {
    truth.active.iter().zip(inferred).filter(|(a, b)| a[t] == b[i]).count()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for k in 0..used.len() {
            if !used[k] {
                used[k] = true;
                prefix.push(k);
                rec(prefix, used, out);
                prefix.pop();
                used[k] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(n), &mut vec![false; n], &mut out);
    out
}

/// Per-category recovery under the column permutation of `inferred` that
/// agrees with `truth` on the most cells.
pub fn recovery_accuracy(truth: &ActivityMask, inferred: &[Vec<bool>]) -> Result<RecoveryAccuracy> {
    recovery_accuracy_with(truth, inferred, Matching::Exhaustive)
}

pub fn recovery_accuracy_with(
    truth: &ActivityMask,
    inferred: &[Vec<bool>],
    matching: Matching,
) -> Result<RecoveryAccuracy> {
    let r = truth.n_components();
    if inferred.len() != truth.n_views() || inferred.iter().any(|row| row.len() != r) {
        return Err(Error::Dimension(
            "inferred activity does not match the truth shape".into(),
        ));
    }
    // perm[t] = inferred column matched to truth column t
    let perm: Vec<usize> = match matching {
        Matching::Exhaustive => {
            if r > MAX_EXHAUSTIVE_COMPONENTS {
                return Err(Error::InvalidInput(format!(
                    "exhaustive matching supports at most {MAX_EXHAUSTIVE_COMPONENTS} components \
                     (got {r}); use greedy matching instead"
                )));
            }
            let score: Vec<Vec<usize>> = (0..r)
                .map(|t| (0..r).map(|i| agreement(truth, inferred, t, i)).collect())
                .collect();
            permutations(r)
                .into_iter()
                .max_by_key(|p| p.iter().enumerate().map(|(t, &i)| score[t][i]).sum::<usize>())
                .expect("at least one permutation")
        }
        Matching::Greedy => {
            let mut perm = vec![usize::MAX; r];
            let mut used = vec![false; r];
            for _ in 0..r {
                let mut best = (0usize, 0usize, 0usize);
                let mut found = false;
                for t in (0..r).filter(|&t| perm[t] == usize::MAX) {
                    for i in (0..r).filter(|&i| !used[i]) {
                        let a = agreement(truth, inferred, t, i);
                        if !found || a > best.0 {
                            best = (a, t, i);
                            found = true;
                        }
                    }
                }
                perm[best.1] = best.2;
                used[best.2] = true;
            }
            perm
        }
    };

    let mut hits = [0usize; 3];
    let mut cells = [0usize; 3];
    for (m, cat) in truth.categories.iter().enumerate() {
        let k = match cat {
            ViewCategory::Shared => 0,
            ViewCategory::Specific(_) => 1,
            ViewCategory::Empty => 2,
        };
        for t in 0..r {
            cells[k] += 1;
            if truth.active[m][t] == inferred[m][perm[t]] {
                hits[k] += 1;
            }
        }
    }
    let frac = |k: usize| {
        if cells[k] == 0 {
            f64::NAN
        } else {
            hits[k] as f64 / cells[k] as f64
        }
    };
    Ok(RecoveryAccuracy {
        shared: frac(0),
        specific: frac(1),
        empty: frac(2),
    })
}
