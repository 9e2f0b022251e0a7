use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};

use super::FeatureMatrix;

/// Name of the catch-all view holding every feature outside the selected sets.
pub const OTHER_GENES_VIEW: &str = "other_genes";

/// One gene set as read from a GMT file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneSet {
    pub name: String,
    pub description: String,
    pub genes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct View {
    pub name: String,
    pub feature_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ViewPartition {
    pub views: Vec<View>,
    pub leftover_view_index: Option<usize>,
    /// Selected gene sets that shared no feature with the matrix.
    pub dropped: Vec<String>,
}

fn tokens(s: &str) -> impl Iterator<Item = String> + '_ {
    s.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
}

/// Pathways whose name contains any token of any target name (case-insensitive).
///
/// Target names are split on non-alphanumeric characters, so `"MEK1/2"`
/// contributes the tokens `mek1` and `2`. Tokens shorter than two characters
/// are ignored. Output keeps the order of `pathway_names`, without duplicates.
pub fn select_target_pathways(pathway_names: &[String], target_names: &[String]) -> Result<Vec<String>> {
    if pathway_names.is_empty() || target_names.is_empty() {
        return Err(Error::InvalidInput(
            "pathway and target lists must both be non-empty".into(),
        ));
    }
    if pathway_names.iter().chain(target_names).any(|s| s.trim().is_empty()) {
        return Err(Error::InvalidInput("pathway and target names must be non-empty".into()));
    }
    let target_tokens: Vec<String> = {
        let mut seen = HashSet::new();
        target_names
            .iter()
            .flat_map(|t| tokens(t).collect::<Vec<_>>())
            .filter(|t| t.chars().count() >= 2)
            .filter(|t| seen.insert(t.clone()))
            .collect()
    };
    let mut seen = HashSet::new();
    Ok(pathway_names
        .iter()
        .filter(|p| {
            let lower = p.to_lowercase();
            target_tokens.iter().any(|t| lower.contains(t.as_str()))
        })
        .filter(|p| seen.insert(p.as_str()))
        .cloned()
        .collect())
}

/// Splits the features of `features` into one view per selected gene set plus
/// a final view of all features not covered by any selected set.
pub fn build_view_partition(
    features: &FeatureMatrix,
    gene_sets: &[GeneSet],
    selected: &[String],
) -> Result<ViewPartition> {
    let by_name: HashMap<&str, &GeneSet> = gene_sets.iter().map(|g| (g.name.as_str(), g)).collect();
    let feature_pos: HashMap<&str, usize> = features
        .feature_ids()
        .iter()
        .enumerate()
        .map(|(i, f)| (f.as_str(), i))
        .collect();

    let mut covered = vec![false; features.feature_ids().len()];
    let mut views = Vec::new();
    let mut dropped = Vec::new();
    let mut done = HashSet::new();
    for name in selected {
        if !done.insert(name.as_str()) {
            continue;
        }
        let set = by_name
            .get(name.as_str())
            .ok_or_else(|| Error::InvalidInput(format!("selected pathway `{name}` not in gene sets")))?;
        let mut idx: Vec<usize> = set
            .genes
            .iter()
            .filter_map(|g| feature_pos.get(g.as_str()).copied())
            .collect();
        idx.sort_unstable();
        idx.dedup();
        if idx.is_empty() {
            log::warn!("dropping view `{name}`: no member present among the features");
            dropped.push(name.clone());
            continue;
        }
        for &i in &idx {
            covered[i] = true;
        }
        views.push(View {
            name: name.clone(),
            feature_ids: idx.iter().map(|&i| features.feature_ids()[i].clone()).collect(),
        });
    }

    let leftover: Vec<String> = features
        .feature_ids()
        .iter()
        .zip(&covered)
        .filter(|(_, c)| !**c)
        .map(|(f, _)| f.clone())
        .collect();
    let leftover_view_index = if leftover.is_empty() {
        None
    } else {
        views.push(View {
            name: OTHER_GENES_VIEW.into(),
            feature_ids: leftover,
        });
        Some(views.len() - 1)
    };
    if views.is_empty() {
        return Err(Error::InvalidInput(
            "no selected gene set overlaps the features and no leftover features remain".into(),
        ));
    }
    Ok(ViewPartition {
        views,
        leftover_view_index,
        dropped,
    })
}
