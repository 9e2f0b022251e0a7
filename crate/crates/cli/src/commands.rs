use cwkbmf::associations::{export_eye_diagram, top_associations_with, AssociationOptions};
use cwkbmf::evaluation::{cross_validate, make_cv_plan, CvOptions, Method};
use cwkbmf::inference::{fit, FittedModel, ModelConfig, Side};
use cwkbmf::io;
use cwkbmf::kernelviews::cross_kernel;
use cwkbmf::linalg::Matrix;
use cwkbmf::rng::derive_seed;
use cwkbmf::synthetic::{generate, run_benchmark, BenchmarkOptions, SyntheticSpec};
use cwkbmf::{Error, Result};
use serde::Serialize;

use crate::config::{echo, require, AssocConfig, BenchConfig, CvConfig, FitConfig, PredictConfig, SynthConfig};
use crate::data::load_inputs;

pub fn fit_cmd(cfg: &FitConfig) -> Result<()> {
    let out = &cfg.common.out;
    echo(cfg, out)?;
    let inputs = load_inputs(&cfg.data)?;
    let model_cfg = cfg.model.model_config(derive_seed(cfg.common.seed, "fit"));
    let model = fit(&model_cfg, &inputs.kx, &inputs.kz, &inputs.y)?.with_x_view_features(&inputs.views)?;
    model.save(&out.join("model.json"))?;
    // Sweep 0 is the bound at initialisation.
    let mut trace = String::from("sweep,elbo\n");
    for (t, v) in model.elbo_trace().iter().enumerate() {
        trace.push_str(&format!("{t},{}\n", io::format_f64(*v)));
    }
    io::write_text(&out.join("elbo_trace.csv"), &trace)?;
    log::info!(
        "fitted {} sweeps, final bound {:?}",
        model.elbo_trace().len(),
        model.elbo_trace().last()
    );
    Ok(())
}

pub fn cv_cmd(cfg: &CvConfig) -> Result<()> {
    let out = &cfg.common.out;
    echo(cfg, out)?;
    let methods = cfg
        .methods
        .iter()
        .map(|m| Method::parse(m))
        .collect::<Result<Vec<_>>>()?;
    let inputs = load_inputs(&cfg.data)?;
    let seed = derive_seed(cfg.common.seed, "cv");
    let plan = make_cv_plan(inputs.y.nrows(), cfg.folds, cfg.repeats, seed)?;
    let options = CvOptions {
        methods,
        jobs: cfg.common.jobs,
    };
    let result = cross_validate(
        &inputs.kx,
        &inputs.kz,
        &inputs.y,
        &cfg.model.model_config(seed),
        &plan,
        &options,
    )?;
    io::write_text(&out.join("cv_report.json"), &(result.to_json()? + "\n"))?;
    io::write_text(&out.join("cv_report.tsv"), &result.to_tsv())?;
    for r in &result.reports {
        log::info!("{}: cumulative Spearman {:.4}", r.method.label(), r.cumulative_rho);
    }
    Ok(())
}

pub fn predict_cmd(cfg: &PredictConfig) -> Result<()> {
    let out = &cfg.common.out;
    echo(cfg, out)?;
    let model_path = require(&cfg.model, "model")?;
    let model = FittedModel::load(model_path)?;
    let train_path = require(&cfg.train_expression, "training expression")?;
    let new_path = require(&cfg.expression, "expression")?;
    let train_all = io::read_expression_csv(train_path)?;
    let train = train_all
        .select_samples(model.row_ids())
        .map_err(|e| Error::parse(train_path, e.to_string()))?;
    let mut new = io::read_expression_csv(new_path)?;
    let train = if cfg.standardize_features {
        new = new.standardized_against(&train)?;
        train.standardized()
    } else {
        train
    };

    let mut cross = Vec::new();
    for view in model.views(Side::X) {
        if view.feature_ids.is_empty() {
            return Err(Error::parse(
                model_path,
                format!(
                    "view `{}` carries no feature ids; the model cannot score new samples",
                    view.name
                ),
            ));
        }
        let width = view.width.unwrap_or(view.feature_ids.len() as f64);
        let a = train.select_features(&view.feature_ids)?;
        let b = new
            .select_features(&view.feature_ids)
            .map_err(|e| Error::parse(new_path, e.to_string()))?;
        cross.push(cross_kernel(&a, &b, width)?);
    }
    let pred = model.predict_new_rows(&cross)?;
    io::write_matrix_csv(
        &out.join("predictions.csv"),
        &pred,
        Some(new.sample_ids()),
        Some(model.col_ids()),
    )
}

#[derive(Serialize)]
struct SynthTruth<'a> {
    spec: &'a SyntheticSpec,
    view_names: &'a [String],
    #[serde(flatten)]
    truth: &'a cwkbmf::synthetic::ActivityMask,
}

fn mask_matrix(mask: &[bool], r: usize, c: usize) -> Matrix {
    Matrix::from_fn(r, c, |i, j| if mask[i * c + j] { 1.0 } else { 0.0 })
}

pub fn synth_cmd(cfg: &SynthConfig) -> Result<()> {
    let out = &cfg.common.out;
    echo(cfg, out)?;
    let spec = SyntheticSpec {
        seed: derive_seed(cfg.common.seed, "synth"),
        ..cfg.spec.clone()
    };
    let data = generate(&spec)?;
    for (side, set) in [("kernels_x", &data.kernels_x), ("kernels_z", &data.kernels_z)] {
        let dir = out.join(side);
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        for (name, k) in set.names().iter().zip(set.kernels()) {
            io::write_matrix_csv(&dir.join(format!("{name}.csv")), &k.values, None, None)?;
        }
    }
    let (r, c) = (data.y.nrows(), data.y.ncols());
    let rows = Some(data.y.row_ids.as_slice());
    let cols = Some(data.y.col_ids.as_slice());
    io::write_matrix_csv(&out.join("y.csv"), &data.y.values, rows, cols)?;
    io::write_matrix_csv(
        &out.join("train_mask.csv"),
        &mask_matrix(&data.y.mask, r, c),
        rows,
        cols,
    )?;
    io::write_matrix_csv(
        &out.join("test_mask.csv"),
        &mask_matrix(&data.test_mask, r, c),
        rows,
        cols,
    )?;
    io::write_response_csv(&out.join("y_train.csv"), &data.y, "row")?;
    let truth = SynthTruth {
        spec: &spec,
        view_names: data.kernels_x.names(),
        truth: &data.truth,
    };
    io::write_text(&out.join("truth.json"), &(serde_json::to_string_pretty(&truth)? + "\n"))
}

pub fn bench_cmd(cfg: &BenchConfig) -> Result<()> {
    let out = &cfg.common.out;
    echo(cfg, out)?;
    let options = BenchmarkOptions {
        spec: cfg.spec.clone(),
        p_values: cfg.p_values.clone(),
        datasets: cfg.datasets,
        model: ModelConfig {
            components: cfg.spec.components,
            max_sweeps: cfg.max_sweeps,
            hyper: cfg.hyper,
            ..ModelConfig::default()
        },
        threshold: cfg.threshold,
        rule: cfg.zscore_rule,
        seed: cfg.common.seed,
        jobs: cfg.common.jobs,
    };
    let result = run_benchmark(&options)?;
    io::write_text(&out.join("benchmark.tsv"), &result.to_tsv())?;
    io::write_text(&out.join("benchmark.json"), &(result.to_json()? + "\n"))
}

pub fn assoc_cmd(cfg: &AssocConfig) -> Result<()> {
    let out = &cfg.common.out;
    echo(cfg, out)?;
    let model = FittedModel::load(require(&cfg.model, "model")?)?;
    let targets = cfg.drug_targets.as_deref().map(io::read_drug_targets).transpose()?;
    let options = AssociationOptions {
        top_k: cfg.top_k,
        threshold: cfg.threshold,
        rule: cfg.zscore_rule,
        targets,
    };
    let report = top_associations_with(&model, &options);
    let eye = export_eye_diagram(&report);
    io::write_text(&out.join("eye_diagram.json"), &(eye.to_json()? + "\n"))?;
    io::write_text(&out.join("eye_diagram.tsv"), &eye.to_tsv())?;
    let activity = Matrix::from_fn(
        report.view_names.len(),
        report.activity.first().map_or(0, Vec::len),
        |m, s| {
            if report.activity[m][s] {
                1.0
            } else {
                0.0
            }
        },
    );
    let comps: Vec<String> = (0..activity.ncols()).map(|s| format!("component{s}")).collect();
    io::write_matrix_csv(
        &out.join("activity.csv"),
        &activity,
        Some(&report.view_names),
        Some(&comps),
    )
}
