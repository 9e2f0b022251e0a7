//! Side-data views and their Gaussian kernels.
//!
//! A view is a group of features (for expression data: the genes of one
//! pathway, plus a catch-all view of every remaining gene). Each view is turned
//! into a Gaussian kernel whose width defaults to the view's dimensionality.

mod features;
mod kernel;
mod pathways;

pub use features::FeatureMatrix;
pub use kernel::{cross_kernel, gaussian_kernel, gaussian_kernel_with_width, Kernel, KernelSet};
pub use pathways::{build_view_partition, select_target_pathways, GeneSet, View, ViewPartition, OTHER_GENES_VIEW};

use crate::error::Result;

/// Options controlling how feature views are turned into kernels.
#[derive(Debug, Clone, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct KernelOptions {
    /// Standardise every feature to zero mean, unit variance before computing
    /// kernels.
    pub standardize_features: bool,
    /// Divide every kernel by the mean of its diagonal.
    pub trace_normalize: bool,
    /// Override the width rule (width = view dimensionality).
    pub width_override: Option<f64>,
}

/// Builds one training kernel per view of `partition`.
pub fn view_kernels(features: &FeatureMatrix, partition: &ViewPartition, options: &KernelOptions) -> Result<KernelSet> {
    let source = if options.standardize_features {
        features.standardized()
    } else {
        features.clone()
    };
    let mut names = Vec::with_capacity(partition.views.len());
    let mut kernels = Vec::with_capacity(partition.views.len());
    for view in &partition.views {
        let values = source.select_features(&view.feature_ids)?;
        let width = options.width_override.unwrap_or(view.feature_ids.len() as f64);
        let mut k = gaussian_kernel_with_width(&values, width)?;
        if options.trace_normalize {
            k.trace_normalize();
        }
        names.push(view.name.clone());
        kernels.push(k);
    }
    KernelSet::new(names, kernels)
}
