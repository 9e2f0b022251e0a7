mod common;

use cwkbmf::kernelviews::{
    build_view_partition, cross_kernel, gaussian_kernel, select_target_pathways, FeatureMatrix, GeneSet, KernelOptions,
    OTHER_GENES_VIEW,
};
use cwkbmf::linalg::Matrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::normal_matrix;

fn features(n: usize, d: usize, seed: u64) -> FeatureMatrix {
    let values = normal_matrix(&mut ChaCha8Rng::seed_from_u64(seed), n, d);
    FeatureMatrix::new(
        values,
        (0..n).map(|i| format!("s{i}")).collect(),
        (0..d).map(|j| format!("g{j}")).collect(),
    )
    .unwrap()
}

fn names(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

proptest! {
    #[test]
    fn training_kernels_are_valid(n in 2usize..25, d in 1usize..8, seed in any::<u64>()) {
        let f = features(n, d, seed);
        let k = gaussian_kernel(f.values()).unwrap();
        prop_assert_eq!(k.width, Some(d as f64));
        for i in 0..n {
            prop_assert_eq!(k.values[(i, i)], 1.0);
            for j in 0..n {
                let v = k.values[(i, j)];
                prop_assert!(v > 0.0 && v <= 1.0);
                prop_assert!((v - k.values[(j, i)]).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn cross_kernel_against_itself_is_the_training_kernel(n in 2usize..15, d in 1usize..6, seed in any::<u64>()) {
        let f = features(n, d, seed);
        let k = gaussian_kernel(f.values()).unwrap();
        let c = cross_kernel(f.values(), f.values(), d as f64).unwrap();
        prop_assert!((&k.values - &c.values).amax() <= 1e-12);
    }

    #[test]
    fn partition_covers_every_feature(
        d in 1usize..30,
        sets in prop::collection::vec(prop::collection::vec(0usize..40, 0..8), 0..6),
        seed in any::<u64>(),
    ) {
        let f = features(3, d, seed);
        let gene_sets: Vec<GeneSet> = sets
            .iter()
            .enumerate()
            .map(|(k, genes)| GeneSet {
                name: format!("SET{k}"),
                description: String::new(),
                genes: genes.iter().map(|g| format!("g{g}")).collect(),
            })
            .collect();
        let selected: Vec<String> = gene_sets.iter().map(|g| g.name.clone()).collect();
        let Ok(p) = build_view_partition(&f, &gene_sets, &selected) else {
            // Only possible when nothing at all could be placed in a view.
            prop_assert!(false, "partition failed with {d} features");
            unreachable!()
        };
        prop_assert!(p.views.len() <= selected.len() + 1);
        prop_assert!(p.views.iter().all(|v| !v.feature_ids.is_empty()));
        let mut seen: Vec<&String> = p.views.iter().flat_map(|v| &v.feature_ids).collect();
        seen.sort();
        seen.dedup();
        prop_assert_eq!(seen.len(), d);
        if let Some(i) = p.leftover_view_index {
            prop_assert_eq!(i, p.views.len() - 1);
            prop_assert_eq!(&p.views[i].name, OTHER_GENES_VIEW);
            for g in &p.views[i].feature_ids {
                prop_assert!(!p.views[..i].iter().any(|v| v.feature_ids.contains(g)));
            }
        }
        prop_assert_eq!(p.dropped.len() + p.views.len() - usize::from(p.leftover_view_index.is_some()), selected.len());
    }

    #[test]
    fn target_selection_keeps_order_without_duplicates(
        picks in prop::collection::vec(0usize..5, 1..12),
    ) {
        let pool = ["MEK_UP.V1_UP", "PID_MET_PATHWAY", "BIOCARTA_AKT_PATHWAY", "STK33_DN", "KEGG_MAPK"];
        let pathways: Vec<String> = picks.iter().map(|&i| pool[i].to_string()).collect();
        let got = select_target_pathways(&pathways, &names(&["akt", "Mek"])).unwrap();
        let mut want: Vec<String> = Vec::new();
        for p in &pathways {
            if (p.contains("AKT") || p.contains("MEK")) && !want.contains(p) {
                want.push(p.clone());
            }
        }
        prop_assert_eq!(got, want);
    }
}

#[test]
fn target_examples() {
    let got = select_target_pathways(&names(&["MEK_UP.V1_UP", "PID_MET_PATHWAY"]), &names(&["MEK"])).unwrap();
    assert_eq!(got, names(&["MEK_UP.V1_UP"]));
    let both = names(&["BIOCARTA_AKT_PATHWAY", "STK33_DN"]);
    assert_eq!(select_target_pathways(&both, &names(&["AKT", "STK33"])).unwrap(), both);
    assert!(select_target_pathways(&names(&["ANY"]), &[]).is_err());
    assert!(select_target_pathways(&names(&["ANY"]), &names(&["ZZZ"]))
        .unwrap()
        .is_empty());
}

#[test]
fn view_kernels_follow_the_partition() {
    let f = features(6, 5, 3);
    let sets = vec![GeneSet {
        name: "A".into(),
        description: "d".into(),
        genes: names(&["g0", "g1", "g9"]),
    }];
    let p = build_view_partition(&f, &sets, &names(&["A"])).unwrap();
    let k = cwkbmf::kernelviews::view_kernels(&f, &p, &KernelOptions::default()).unwrap();
    assert_eq!(k.names(), &names(&["A", OTHER_GENES_VIEW])[..]);
    assert_eq!(k.widths(), vec![Some(2.0), Some(3.0)]);
    let direct = gaussian_kernel(&f.select_features(&names(&["g0", "g1"])).unwrap()).unwrap();
    assert_eq!(k.matrix(0), &direct.values);

    let std = cwkbmf::kernelviews::view_kernels(
        &f,
        &p,
        &KernelOptions {
            standardize_features: true,
            trace_normalize: true,
            width_override: Some(1.5),
        },
    )
    .unwrap();
    assert_eq!(std.widths(), vec![Some(1.5), Some(1.5)]);
    assert!(std.matrix(1).diagonal().iter().all(|v| (*v - 1.0).abs() <= 1e-15));
}

#[test]
fn standardizing_new_samples_uses_training_statistics() {
    let train = features(8, 3, 1);
    let new = FeatureMatrix::new(
        Matrix::from_row_slice(1, 3, &[0.0, 1.0, -2.0]),
        names(&["n0"]),
        names(&["g0", "g1", "g2"]),
    )
    .unwrap();
    let s = new.standardized_against(&train).unwrap();
    for j in 0..3 {
        let col = train.values().column(j);
        let mean = col.mean();
        let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 7.0).sqrt();
        assert!((s.values()[(0, j)] - (new.values()[(0, j)] - mean) / sd).abs() <= 1e-12);
    }
}
