use std::path::Path;

use cwkbmf::inference::ResponseMatrix;
use cwkbmf::io;
use cwkbmf::kernelviews::{
    build_view_partition, gaussian_kernel, select_target_pathways, FeatureMatrix, KernelOptions, KernelSet, View,
};
use cwkbmf::{Error, Result};

use crate::config::{require, DataConfig};

pub struct Inputs {
    pub kx: KernelSet,
    pub kz: KernelSet,
    pub y: ResponseMatrix,
    pub views: Vec<View>,
}

/// Rows of `features` reordered to `ids`; every id must be present.
fn align(features: &FeatureMatrix, ids: &[String], path: &Path, what: &str) -> Result<FeatureMatrix> {
    if let Some(missing) = ids.iter().find(|id| !features.sample_ids().contains(id)) {
        return Err(Error::parse(
            path,
            format!("{what} `{missing}` from the responses is not present"),
        ));
    }
    features.select_samples(ids)
}

fn selected_pathways(cfg: &DataConfig, names: &[String]) -> Result<Vec<String>> {
    if let Some(p) = &cfg.pathways {
        return io::read_name_list(p);
    }
    if let Some(p) = &cfg.targets {
        let targets = io::read_name_list(p)?;
        if targets.is_empty() {
            return Err(Error::parse(p, "no target names"));
        }
        return select_target_pathways(names, &targets);
    }
    Ok(names.to_vec())
}

/// Reads responses and side data and builds both sides' kernels.
pub fn load_inputs(cfg: &DataConfig) -> Result<Inputs> {
    let y_path = require(&cfg.responses, "responses")?;
    let x_path = require(&cfg.expression, "expression")?;
    let y = io::read_response_csv(y_path)?;
    let expression = align(&io::read_expression_csv(x_path)?, &y.row_ids, x_path, "cell line")?;

    let (gene_sets, selected) = match &cfg.gene_sets {
        Some(p) => {
            let sets = io::read_gmt(p)?;
            let names: Vec<String> = sets.iter().map(|g| g.name.clone()).collect();
            let selected = selected_pathways(cfg, &names)?;
            (sets, selected)
        }
        None => (Vec::new(), Vec::new()),
    };
    let partition = build_view_partition(&expression, &gene_sets, &selected)?;
    let options = KernelOptions {
        standardize_features: cfg.standardize_features,
        trace_normalize: cfg.trace_normalize,
        width_override: None,
    };
    let kx = cwkbmf::kernelviews::view_kernels(&expression, &partition, &options)?;
    log::info!("{} cell-line views over {} cell lines", kx.n_views(), kx.n_samples());

    let kz = match &cfg.drug_features {
        Some(p) => {
            let mut f = align(&io::read_expression_csv(p)?, &y.col_ids, p, "drug")?;
            if cfg.standardize_features {
                f = f.standardized();
            }
            let k = gaussian_kernel(f.values())?;
            KernelSet::new(vec!["drug_features".into()], vec![k])?
        }
        None => KernelSet::identity(y.ncols()),
    };
    Ok(Inputs {
        kx,
        kz,
        y,
        views: partition.views,
    })
}
