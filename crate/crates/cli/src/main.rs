mod commands;
mod config;
mod data;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cwkbmf::inference::{WeightMode, ZScoreRule};
use cwkbmf::Error;

use config::Common;

/// Drug response prediction by kernelized Bayesian matrix factorization with
/// component-wise multiple kernel learning.
#[derive(Parser)]
#[command(name = "cwkbmf", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model to expression, gene-set and response data.
    Fit(FitArgs),
    /// Repeated k-fold cross-validation against the shared-weight model and
    /// the training-mean baseline.
    Cv(CvArgs),
    /// Predict responses of new cell lines with a fitted model.
    Predict(PredictArgs),
    /// Write one synthetic dataset.
    Synth(SynthArgs),
    /// Generate many synthetic datasets, fit both weight modes and tabulate
    /// test error and activity recovery.
    SynthBench(BenchArgs),
    /// Export the strongest views and drugs of each component.
    Assoc(AssocArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// JSON configuration; flags given on the command line take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (0 = one per core).
    #[arg(long)]
    jobs: Option<usize>,
}

impl CommonArgs {
    fn apply(&self, c: &mut Common) {
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = &self.out {
            c.out = v.clone();
        }
        if let Some(v) = self.jobs {
            c.jobs = v;
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    ComponentWise,
    Shared,
}

impl From<ModeArg> for WeightMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::ComponentWise => WeightMode::ComponentWise,
            ModeArg::Shared => WeightMode::SharedAcrossComponents,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum RuleArg {
    Prior,
    Empirical,
}

impl From<RuleArg> for ZScoreRule {
    fn from(r: RuleArg) -> Self {
        match r {
            RuleArg::Prior => ZScoreRule::Prior,
            RuleArg::Empirical => ZScoreRule::Empirical,
        }
    }
}

#[derive(Args)]
struct DataArgs {
    /// Expression CSV, genes x cell lines.
    #[arg(long)]
    expression: Option<PathBuf>,
    /// Response CSV, cell lines x drugs; empty cells are missing.
    #[arg(long)]
    responses: Option<PathBuf>,
    /// GMT gene-set file.
    #[arg(long)]
    gene_sets: Option<PathBuf>,
    /// Pathways to use as views, one name per line.
    #[arg(long)]
    pathways: Option<PathBuf>,
    /// Drug target names, one per line, used to pick pathways.
    #[arg(long)]
    targets: Option<PathBuf>,
    /// Drug feature CSV, features x drugs.
    #[arg(long)]
    drug_features: Option<PathBuf>,
    #[arg(long)]
    standardize_features: bool,
    #[arg(long)]
    trace_normalize: bool,
}

impl DataArgs {
    fn apply(&self, d: &mut config::DataConfig) {
        let paths = [
            (&self.expression, &mut d.expression),
            (&self.responses, &mut d.responses),
            (&self.gene_sets, &mut d.gene_sets),
            (&self.pathways, &mut d.pathways),
            (&self.targets, &mut d.targets),
            (&self.drug_features, &mut d.drug_features),
        ];
        for (src, dst) in paths {
            if src.is_some() {
                *dst = src.clone();
            }
        }
        d.standardize_features |= self.standardize_features;
        d.trace_normalize |= self.trace_normalize;
    }
}

#[derive(Args)]
struct ModelArgs {
    /// Number of latent components.
    #[arg(long = "components", visible_alias = "r")]
    components: Option<usize>,
    #[arg(long)]
    max_sweeps: Option<usize>,
    #[arg(long)]
    elbo_rel_tol: Option<f64>,
    #[arg(long, value_enum)]
    weight_mode: Option<ModeArg>,
}

impl ModelArgs {
    fn apply(&self, m: &mut config::ModelSettings) {
        if let Some(v) = self.components {
            m.components = v;
        }
        if let Some(v) = self.max_sweeps {
            m.max_sweeps = v;
        }
        if let Some(v) = self.elbo_rel_tol {
            m.elbo_rel_tol = v;
        }
        if let Some(v) = self.weight_mode {
            m.weight_mode = v.into();
        }
    }
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Args)]
struct CvArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
    /// Folds per repeat [default: 5].
    #[arg(long)]
    folds: Option<usize>,
    /// Repeats with different fold assignments [default: 10].
    #[arg(long)]
    repeats: Option<usize>,
    /// Methods to evaluate (cwKBMF, sharedKBMF, baseline) [default: all].
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
}

#[derive(Args)]
struct PredictArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Model JSON written by `fit`.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Expression CSV the model was trained on.
    #[arg(long)]
    train_expression: Option<PathBuf>,
    /// Expression CSV of the cell lines to predict.
    #[arg(long)]
    expression: Option<PathBuf>,
    /// Must match the setting used for fitting.
    #[arg(long)]
    standardize_features: bool,
}

#[derive(Args)]
struct SpecArgs {
    #[arg(long)]
    nx: Option<usize>,
    #[arg(long)]
    nz: Option<usize>,
    /// Number of components.
    #[arg(long)]
    r: Option<usize>,
    #[arg(long)]
    view_dim: Option<usize>,
    #[arg(long)]
    noise_y: Option<f64>,
    #[arg(long)]
    noise_h: Option<f64>,
    /// Fraction of entries held out as the test set.
    #[arg(long)]
    missing_fraction: Option<f64>,
}

impl SpecArgs {
    fn apply(&self, s: &mut cwkbmf::synthetic::SyntheticSpec) {
        if let Some(v) = self.nx {
            s.n_x = v;
        }
        if let Some(v) = self.nz {
            s.n_z = v;
        }
        if let Some(v) = self.r {
            s.components = v;
        }
        if let Some(v) = self.view_dim {
            s.view_dim = v;
        }
        if let Some(v) = self.noise_y {
            s.noise_y = v;
        }
        if let Some(v) = self.noise_h {
            s.noise_h = v;
        }
        if let Some(v) = self.missing_fraction {
            s.missing_fraction = v;
        }
    }
}

#[derive(Args)]
struct SynthArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    spec: SpecArgs,
    /// Number of cell-line views.
    #[arg(long)]
    px: Option<usize>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    spec: SpecArgs,
    /// View counts to benchmark, comma separated [default: 10].
    #[arg(long, value_delimiter = ',')]
    px: Option<Vec<usize>>,
    /// Datasets per view count [default: 100].
    #[arg(long)]
    datasets: Option<usize>,
    #[arg(long)]
    max_sweeps: Option<usize>,
    /// Activity z-score threshold [default: 0.67].
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long, value_enum)]
    zscore_rule: Option<RuleArg>,
}

#[derive(Args)]
struct AssocArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Model JSON written by `fit`.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Views and drugs listed per component [default: 10].
    #[arg(long)]
    top_k: Option<usize>,
    /// Activity z-score threshold [default: 0.67].
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long, value_enum)]
    zscore_rule: Option<RuleArg>,
    /// Drug-target TSV; components whose top drugs share a target come first.
    #[arg(long)]
    drug_targets: Option<PathBuf>,
}

fn run(command: Command) -> cwkbmf::Result<()> {
    match command {
        Command::Fit(a) => {
            let mut cfg: config::FitConfig = config::load(a.common.config.as_deref())?;
            a.common.apply(&mut cfg.common);
            a.data.apply(&mut cfg.data);
            a.model.apply(&mut cfg.model);
            commands::fit_cmd(&cfg)
        }
        Command::Cv(a) => {
            let mut cfg: config::CvConfig = config::load(a.common.config.as_deref())?;
            a.common.apply(&mut cfg.common);
            a.data.apply(&mut cfg.data);
            a.model.apply(&mut cfg.model);
            if let Some(v) = a.folds {
                cfg.folds = v;
            }
            if let Some(v) = a.repeats {
                cfg.repeats = v;
            }
            if let Some(v) = a.methods {
                cfg.methods = v;
            }
            commands::cv_cmd(&cfg)
        }
        Command::Predict(a) => {
            let mut cfg: config::PredictConfig = config::load(a.common.config.as_deref())?;
            a.common.apply(&mut cfg.common);
            if a.model.is_some() {
                cfg.model = a.model;
            }
            if a.train_expression.is_some() {
                cfg.train_expression = a.train_expression;
            }
            if a.expression.is_some() {
                cfg.expression = a.expression;
            }
            cfg.standardize_features |= a.standardize_features;
            commands::predict_cmd(&cfg)
        }
        Command::Synth(a) => {
            let mut cfg: config::SynthConfig = config::load(a.common.config.as_deref())?;
            a.common.apply(&mut cfg.common);
            a.spec.apply(&mut cfg.spec);
            if let Some(v) = a.px {
                cfg.spec.p_x = v;
            }
            commands::synth_cmd(&cfg)
        }
        Command::SynthBench(a) => {
            let mut cfg: config::BenchConfig = config::load(a.common.config.as_deref())?;
            a.common.apply(&mut cfg.common);
            a.spec.apply(&mut cfg.spec);
            if let Some(v) = a.px {
                cfg.p_values = v;
            }
            if let Some(v) = a.datasets {
                cfg.datasets = v;
            }
            if let Some(v) = a.max_sweeps {
                cfg.max_sweeps = v;
            }
            if let Some(v) = a.threshold {
                cfg.threshold = v;
            }
            if let Some(v) = a.zscore_rule {
                cfg.zscore_rule = v.into();
            }
            commands::bench_cmd(&cfg)
        }
        Command::Assoc(a) => {
            let mut cfg: config::AssocConfig = config::load(a.common.config.as_deref())?;
            a.common.apply(&mut cfg.common);
            if a.model.is_some() {
                cfg.model = a.model;
            }
            if let Some(v) = a.top_k {
                cfg.top_k = v;
            }
            if let Some(v) = a.threshold {
                cfg.threshold = v;
            }
            if let Some(v) = a.zscore_rule {
                cfg.zscore_rule = v.into();
            }
            if a.drug_targets.is_some() {
                cfg.drug_targets = a.drug_targets;
            }
            commands::assoc_cmd(&cfg)
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    if e.is_numerical() {
        3
    } else {
        2
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
