//! `ccml`: ingest, summarize, weigh, select and evaluate morphometric feature tables.
//!
//! Exit codes: 0 success, 2 input or validation error, 3 numerical non-convergence.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use manifest::{parse_gamma, parse_hidden, parse_ridge, parse_select, RunManifest, Source};

#[derive(Parser)]
#[command(name = "ccml", version, about = "ASD detection from corpus callosum and brain volume features")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Per-class counts, sex, age and feature mean/std.
    Summarize(CommonArgs),
    /// Feature weights with one or all four weighting methods.
    Weigh {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        weighting: WeightArgs,
    },
    /// Features whose normalised weight reaches the threshold.
    Select {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        weighting: WeightArgs,
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Cross-validated accuracy of one classifier, or the full matrix.
    Eval {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        eval: EvalArgs,
    },
    /// Write a synthetic table drawn from per-class summary statistics.
    Synth(CommonArgs),
    /// Summary, all weightings, selection and the evaluation matrix in one go.
    Report {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        eval: EvalArgs,
    },
}

#[derive(Args)]
struct CommonArgs {
    /// key = value run manifest; explicit flags override its entries.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Subject table (CSV).
    #[arg(long, conflicts_with = "synth")]
    input: Option<PathBuf>,
    /// Use a synthetic table instead of --input.
    #[arg(long)]
    synth: bool,
    /// Summary CSV (as written by `summarize`) to synthesise from; defaults to the ABIDE reference.
    #[arg(long)]
    synth_spec: Option<PathBuf>,
    #[arg(long)]
    n_per_class: Option<usize>,
    #[arg(long)]
    sites: Option<usize>,
    /// key = value file mapping canonical fields to CSV column names.
    #[arg(long)]
    schema: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Print the primary CSV to stdout instead of writing files.
    #[arg(long)]
    stdout: bool,
}

#[derive(Args)]
struct WeightArgs {
    /// ig, igr, chi2, su or all.
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    n_bins: Option<usize>,
}

#[derive(Args)]
struct EvalArgs {
    /// lda, svm, rf, mlp or knn.
    #[arg(long)]
    model: Option<String>,
    /// kfold or loso.
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    k: Option<usize>,
    /// `<method>:<threshold>` (e.g. chi2:0.4) or `none`.
    #[arg(long)]
    select: Option<String>,
    #[arg(long)]
    n_bins: Option<usize>,
    /// Weigh features once on the whole table instead of per training split.
    #[arg(long)]
    global_selection: bool,
    #[arg(long)]
    no_stratify: bool,
    /// All classifiers under both schemes, with and without selection.
    #[arg(long)]
    matrix: bool,
    #[arg(long)]
    lda_ridge: Option<String>,
    #[arg(long)]
    svm_c: Option<f64>,
    #[arg(long)]
    svm_gamma: Option<String>,
    #[arg(long)]
    svm_tol: Option<f64>,
    #[arg(long)]
    svm_max_passes: Option<usize>,
    #[arg(long)]
    rf_trees: Option<usize>,
    #[arg(long)]
    rf_min_leaf: Option<usize>,
    /// Comma-separated hidden layer sizes.
    #[arg(long)]
    mlp_hidden: Option<String>,
    #[arg(long)]
    mlp_lr: Option<f64>,
    #[arg(long)]
    mlp_epochs: Option<usize>,
    /// Mini-batch size; 0 means full batch.
    #[arg(long)]
    mlp_batch: Option<usize>,
    #[arg(long)]
    knn_k: Option<usize>,
}

impl CommonArgs {
    fn resolve(&self, force_synth: bool) -> anyhow::Result<(RunManifest, bool)> {
        let mut m = match &self.manifest {
            Some(p) => RunManifest::from_file(p)?,
            None => RunManifest::default(),
        };
        if let Some(p) = &self.input {
            m.input = Some(Source::File(p.clone()));
        }
        let synth = force_synth
            || self.synth
            || self.synth_spec.is_some()
            || matches!(m.input, Some(Source::Synth { .. })) && self.input.is_none();
        if synth {
            let (mut spec, mut n, mut s) = match &m.input {
                Some(Source::Synth {
                    spec,
                    n_per_class,
                    sites,
                }) => (spec.clone(), *n_per_class, *sites),
                _ => (None, 550, 17),
            };
            if self.synth_spec.is_some() {
                spec = self.synth_spec.clone();
            }
            n = self.n_per_class.unwrap_or(n);
            s = self.sites.unwrap_or(s);
            m.input = Some(Source::Synth {
                spec,
                n_per_class: n,
                sites: s,
            });
        } else if self.n_per_class.is_some() || self.sites.is_some() {
            anyhow::bail!("--n-per-class and --sites only apply to synthetic input");
        }
        if let Some(p) = &self.schema {
            m.schema = Some(p.clone());
        }
        if let Some(p) = &self.out {
            m.out = p.clone();
        }
        if let Some(s) = self.seed {
            m.seed = s;
        }
        Ok((m, self.stdout))
    }
}

impl WeightArgs {
    fn apply(&self, m: &mut RunManifest) -> anyhow::Result<()> {
        if let Some(v) = &self.method {
            m.method = v.parse()?;
        }
        if let Some(v) = self.n_bins {
            m.n_bins = v;
        }
        Ok(())
    }
}

impl EvalArgs {
    fn apply(&self, m: &mut RunManifest) -> anyhow::Result<()> {
        if let Some(v) = &self.model {
            m.model = v.parse()?;
        }
        if let Some(v) = &self.scheme {
            m.scheme = v.parse()?;
        }
        if let Some(v) = self.k {
            m.k = v;
        }
        if let Some(v) = &self.select {
            match parse_select(v)? {
                Some((method, threshold)) => {
                    m.select = true;
                    m.method = manifest::MethodChoice::One(method);
                    m.threshold = threshold;
                }
                None => m.select = false,
            }
        }
        if let Some(v) = self.n_bins {
            m.n_bins = v;
        }
        if self.global_selection {
            m.selection_scope = ccml_core::eval::SelectionScope::Global;
        }
        if self.no_stratify {
            m.stratified = false;
        }
        if self.matrix {
            m.matrix = true;
        }
        if let Some(v) = &self.lda_ridge {
            m.lda.ridge = parse_ridge(v)?;
        }
        if let Some(v) = self.svm_c {
            m.svm.c = v;
        }
        if let Some(v) = &self.svm_gamma {
            m.svm.gamma = parse_gamma(v)?;
        }
        if let Some(v) = self.svm_tol {
            m.svm.tol = v;
        }
        if let Some(v) = self.svm_max_passes {
            m.svm.max_passes = v;
        }
        if let Some(v) = self.rf_trees {
            m.rf.n_trees = v;
        }
        if let Some(v) = self.rf_min_leaf {
            m.rf.min_leaf = v;
        }
        if let Some(v) = &self.mlp_hidden {
            m.mlp.hidden = parse_hidden(v)?;
        }
        if let Some(v) = self.mlp_lr {
            m.mlp.lr = v;
        }
        if let Some(v) = self.mlp_epochs {
            m.mlp.epochs = v;
        }
        if let Some(v) = self.mlp_batch {
            m.mlp.batch = v;
        }
        if let Some(v) = self.knn_k {
            m.knn.k = v;
        }
        Ok(())
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Summarize(common) => {
            let (m, stdout) = common.resolve(false)?;
            commands::summarize(&m, stdout)
        }
        Command::Weigh { common, weighting } => {
            let (mut m, stdout) = common.resolve(false)?;
            weighting.apply(&mut m)?;
            commands::weigh(&m, stdout)
        }
        Command::Select {
            common,
            weighting,
            threshold,
        } => {
            let (mut m, stdout) = common.resolve(false)?;
            weighting.apply(&mut m)?;
            if let Some(t) = threshold {
                m.threshold = t;
            }
            commands::select(&m, stdout)
        }
        Command::Eval { common, eval } => {
            let (mut m, stdout) = common.resolve(false)?;
            eval.apply(&mut m)?;
            commands::eval(&m, stdout)
        }
        Command::Synth(common) => {
            let (m, stdout) = common.resolve(true)?;
            commands::synth(&m, stdout)
        }
        Command::Report { common, eval } => {
            let (mut m, stdout) = common.resolve(false)?;
            eval.apply(&mut m)?;
            commands::report(&m, stdout)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            if err.downcast_ref::<commands::NotConverged>().is_some() {
                ExitCode::from(3)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
