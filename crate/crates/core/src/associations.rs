//! View-component activity and the strongest views and drugs per component,
//! exported in a form suitable for drawing an eye diagram.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::inference::{FittedModel, Side, ZScoreRule};
use crate::linalg::Matrix;

pub const DEFAULT_THRESHOLD: f64 = 0.67;
pub const DEFAULT_TOP_K: usize = 10;

/// `activity[m][s]` is true when the z-score of view `m` in component `s`
/// exceeds `threshold`.
pub fn activity_matrix(model: &FittedModel, threshold: f64) -> Vec<Vec<bool>> {
    activity_matrix_with(model, threshold, ZScoreRule::default())
}

pub fn activity_matrix_with(model: &FittedModel, threshold: f64, rule: ZScoreRule) -> Vec<Vec<bool>> {
    let z = model.posterior_kernel_weights(Side::X, rule).zscores;
    z.row_iter()
        .map(|row| row.iter().map(|&v| v > threshold).collect())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranked {
    pub name: String,
    pub strength: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentAssociations {
    /// Index of the component in the model.
    pub id: usize,
    pub views: Vec<Ranked>,
    pub drugs: Vec<Ranked>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssociationReport {
    pub threshold: f64,
    pub view_names: Vec<String>,
    pub drug_names: Vec<String>,
    /// `P x R`.
    pub activity: Vec<Vec<bool>>,
    /// `|E[e]|`, `P x R`.
    pub view_strengths: Matrix,
    /// `|E[H_z]|`, `N_z x R`.
    pub drug_strengths: Matrix,
    /// One entry per component in report order.
    pub components: Vec<ComponentAssociations>,
}

#[derive(Debug, Clone)]
pub struct AssociationOptions {
    pub top_k: usize,
    pub threshold: f64,
    pub rule: ZScoreRule,
    /// Drug name to annotated target. When given, components whose top drugs
    /// agree on a target come first.
    pub targets: Option<BTreeMap<String, String>>,
}

impl Default for AssociationOptions {
    fn default() -> Self {
        AssociationOptions {
            top_k: DEFAULT_TOP_K,
            threshold: DEFAULT_THRESHOLD,
            rule: ZScoreRule::default(),
            targets: None,
        }
    }
}

/// Top `k` entries of `strengths` by decreasing strength, ties by name.
fn rank(names: &[String], strengths: impl Iterator<Item = f64>, k: usize) -> Vec<Ranked> {
    let mut all: Vec<Ranked> = names
        .iter()
        .zip(strengths)
        .map(|(name, strength)| Ranked {
            name: name.clone(),
            strength,
        })
        .collect();
    all.sort_by(|a, b| b.strength.total_cmp(&a.strength).then_with(|| a.name.cmp(&b.name)));
    all.truncate(k);
    all
}

/// Share of the ranked drugs carrying the most common target among them.
fn target_consistency(drugs: &[Ranked], targets: &BTreeMap<String, String>) -> f64 {
    if drugs.is_empty() {
        return 0.0;
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for d in drugs {
        if let Some(t) = targets.get(&d.name) {
            *counts.entry(t.as_str()).or_default() += 1;
        }
    }
    counts.values().copied().max().unwrap_or(0) as f64 / drugs.len() as f64
}

pub fn top_associations(model: &FittedModel, k: usize) -> AssociationReport {
    top_associations_with(
        model,
        &AssociationOptions {
            top_k: k,
            ..AssociationOptions::default()
        },
    )
}

/// Components are ordered by decreasing `|E[h_x^s]|^2 |E[h_z^s]|^2` (the
/// Frobenius norm of their rank-one contribution), or by target consistency
/// first when a target map is supplied.
pub fn top_associations_with(model: &FittedModel, options: &AssociationOptions) -> AssociationReport {
    let state = model.state();
    let view_names = model.view_names(Side::X);
    let drug_names = model.col_ids().to_vec();
    let view_strengths = model.posterior_kernel_weights(Side::X, options.rule).means.abs();
    let drug_strengths = state.z.h_mean.abs();
    let r = view_strengths.ncols();

    let mut components: Vec<(ComponentAssociations, f64, f64)> = (0..r)
        .map(|s| {
            let views = rank(&view_names, view_strengths.column(s).iter().copied(), options.top_k);
            let drugs = rank(&drug_names, drug_strengths.column(s).iter().copied(), options.top_k);
            let explained = state.x.h_mean.column(s).norm_squared() * state.z.h_mean.column(s).norm_squared();
            let consistency = options.targets.as_ref().map_or(0.0, |t| target_consistency(&drugs, t));
            (ComponentAssociations { id: s, views, drugs }, consistency, explained)
        })
        .collect();
    components.sort_by(|a, b| {
        b.1.total_cmp(&a.1)
            .then_with(|| b.2.total_cmp(&a.2))
            .then_with(|| a.0.id.cmp(&b.0.id))
    });

    AssociationReport {
        threshold: options.threshold,
        activity: activity_matrix_with(model, options.threshold, options.rule),
        view_names,
        drug_names,
        view_strengths,
        drug_strengths,
        components: components.into_iter().map(|c| c.0).collect(),
    }
}

/// Eye-diagram document: per component, its strongest views and drugs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EyeDiagram {
    pub components: Vec<ComponentAssociations>,
}

/// `v` rounded to `digits` significant digits.
pub fn round_significant(v: f64, digits: usize) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    format!("{:.*e}", digits.saturating_sub(1), v)
        .parse()
        .expect("formatted float parses")
}

pub fn export_eye_diagram(report: &AssociationReport) -> EyeDiagram {
    let round = |list: &[Ranked]| {
        list.iter()
            .map(|x| Ranked {
                name: x.name.clone(),
                strength: round_significant(x.strength, 6),
            })
            .collect()
    };
    EyeDiagram {
        components: report
            .components
            .iter()
            .map(|c| ComponentAssociations {
                id: c.id,
                views: round(&c.views),
                drugs: round(&c.drugs),
            })
            .collect(),
    }
}

impl EyeDiagram {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<EyeDiagram> {
        Ok(serde_json::from_str(s)?)
    }

    /// `component, side, name, strength` lines with a header; side is `view`
    /// or `drug`.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("component\tside\tname\tstrength\n");
        for c in &self.components {
            for (side, list) in [("view", &c.views), ("drug", &c.drugs)] {
                for x in list {
                    out.push_str(&format!("{}\t{side}\t{}\t{}\n", c.id, x.name, x.strength));
                }
            }
        }
        out
    }
}
