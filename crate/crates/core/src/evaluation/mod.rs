//! Repeated k-fold cross-validation over samples, drug-wise Spearman
//! correlation and the training-mean baseline.

mod cv;
mod spearman;

pub use cv::{
    baseline_predict, cross_validate, make_cv_plan, mean, CvOptions, CvPlan, CvResult, DrugRho, EvaluationReport,
    FoldMse, Method,
};
pub use spearman::{average_ranks, pearson, spearman};
