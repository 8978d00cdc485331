use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use ccml_core::chart::{bar_chart, grouped_bar_chart};
use ccml_core::classifiers::ModelKind;
use ccml_core::eval::{self, EvalReport, MatrixReport, Scheme};
use ccml_core::table::{self, ColumnSchema};
use ccml_core::weights::{self, select_by_threshold};
use ccml_core::{FeatureTable, SummaryStats, WeightMethod, WeightVector};

use crate::manifest::{RunManifest, SchemeChoice, Source};

/// Some model stopped at its iteration budget; reports were still written.
#[derive(Debug)]
pub struct NotConverged(pub String);

impl std::fmt::Display for NotConverged {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for NotConverged {}

/// Output sink: files under the run's `out` directory, or stdout for the
/// primary CSV when `--stdout` is set (secondary files are then skipped).
struct Output {
    dir: PathBuf,
    stdout: bool,
    printed: String,
}

impl Output {
    fn new(m: &RunManifest, stdout: bool) -> Result<Self> {
        if !stdout {
            std::fs::create_dir_all(&m.out)
                .with_context(|| format!("cannot create output directory {}", m.out.display()))?;
        }
        Ok(Output {
            dir: m.out.clone(),
            stdout,
            printed: String::new(),
        })
    }

    fn primary(&mut self, name: &str, text: &str) -> Result<()> {
        if self.stdout {
            self.printed.push_str(text);
            Ok(())
        } else {
            self.extra(name, text)
        }
    }

    fn extra(&mut self, name: &str, text: &str) -> Result<()> {
        if self.stdout {
            return Ok(());
        }
        let path = self.dir.join(name);
        std::fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
        eprintln!("wrote {}", path.display());
        Ok(())
    }

    fn finish(self) {
        if self.stdout {
            print!("{}", self.printed);
        }
    }
}

fn load(m: &RunManifest) -> Result<FeatureTable> {
    match &m.input {
        None => bail!("no input table: pass --input <csv> or --synth"),
        Some(Source::File(path)) => {
            let schema = match &m.schema {
                Some(p) => ColumnSchema::from_config_file(p)
                    .with_context(|| format!("schema {}", p.display()))?,
                None => ColumnSchema::default(),
            };
            table::load_csv(path, &schema).with_context(|| format!("loading {}", path.display()))
        }
        Some(Source::Synth {
            spec,
            n_per_class,
            sites,
        }) => {
            let stats = match spec {
                Some(p) => {
                    let text = std::fs::read_to_string(p)
                        .with_context(|| format!("cannot read {}", p.display()))?;
                    SummaryStats::from_csv_str(&text)
                        .with_context(|| format!("synthesis spec {}", p.display()))?
                }
                None => SummaryStats::abide_reference(),
            };
            Ok(table::synthesize(&stats, *n_per_class, *sites, m.seed)?)
        }
    }
}

pub fn summarize(m: &RunManifest, stdout: bool) -> Result<()> {
    let table = load(m)?;
    let stats = table::summarize(&table)?;
    let mut out = Output::new(m, stdout)?;
    out.primary("summary.csv", &stats.to_csv_string())?;
    out.extra("manifest.txt", &m.to_text())?;
    out.finish();
    Ok(())
}

fn weights_chart(wv: &WeightVector) -> String {
    bar_chart(
        &format!("{} feature weights", wv.method.title()),
        &wv.features,
        &wv.weights,
        1.0,
    )
}

pub fn weigh(m: &RunManifest, stdout: bool) -> Result<()> {
    let table = load(m)?;
    let mut out = Output::new(m, stdout)?;
    write_weights(&table, m, &m.method.methods(), &mut out)?;
    out.extra("manifest.txt", &m.to_text())?;
    out.finish();
    Ok(())
}

fn write_weights(
    table: &FeatureTable,
    m: &RunManifest,
    methods: &[WeightMethod],
    out: &mut Output,
) -> Result<Vec<WeightVector>> {
    let mut all = Vec::new();
    let mut long = String::from("method,feature,raw,weight\n");
    for &method in methods {
        let wv = weights::weigh_all(table, method, m.n_bins)?;
        for ((f, r), w) in wv.features.iter().zip(&wv.raw).zip(&wv.weights) {
            let _ = writeln!(long, "{method},{f},{r},{w}");
        }
        if !out.stdout {
            out.extra(&format!("weights_{method}.csv"), &wv.to_csv_string())?;
            out.extra(&format!("weights_{method}.svg"), &weights_chart(&wv))?;
        }
        all.push(wv);
    }
    if out.stdout {
        out.primary("weights.csv", &long)?;
    }
    Ok(all)
}

fn selection_csv(wv: &WeightVector, threshold: f64) -> (String, Vec<String>) {
    let result = select_by_threshold(wv, threshold);
    let mut csv = String::from("rank,feature,weight,selected\n");
    for (rank, i) in wv.ranking().into_iter().enumerate() {
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            rank + 1,
            wv.features[i],
            wv.weights[i],
            wv.weights[i] >= threshold
        );
    }
    (csv, result.selected)
}

pub fn select(m: &RunManifest, stdout: bool) -> Result<()> {
    let table = load(m)?;
    let method = m.method.single()?;
    let wv = weights::weigh_all(&table, method, m.n_bins)?;
    let (csv, selected) = selection_csv(&wv, m.threshold);
    eprintln!(
        "{} of {} features at {method} >= {}: {}",
        selected.len(),
        wv.features.len(),
        m.threshold,
        selected.join(", ")
    );
    let mut out = Output::new(m, stdout)?;
    out.primary("selection.csv", &csv)?;
    out.extra("manifest.txt", &m.to_text())?;
    out.finish();
    Ok(())
}

pub fn synth(m: &RunManifest, stdout: bool) -> Result<()> {
    let table = load(m)?;
    let mut out = Output::new(m, stdout)?;
    out.primary("synth.csv", &table.to_csv_string())?;
    out.extra("manifest.txt", &m.to_text())?;
    out.finish();
    Ok(())
}

fn not_converged(reports: &[EvalReport]) -> Option<NotConverged> {
    let failed: Vec<String> = reports
        .iter()
        .flat_map(|r| {
            r.folds
                .iter()
                .filter(|f| !f.converged)
                .map(move |f| format!("{} {} fold {}", r.model, r.scheme, f.tag))
        })
        .collect();
    if failed.is_empty() {
        None
    } else {
        Some(NotConverged(format!(
            "{} fold fit(s) hit the iteration budget (reports written): {}",
            failed.len(),
            failed.join(", ")
        )))
    }
}

fn run_single(table: &FeatureTable, m: &RunManifest, out: &mut Output) -> Result<EvalReport> {
    m.classifier(m.model).validate()?;
    let plan = match m.scheme {
        SchemeChoice::Kfold => eval::kfold_split(table, m.k, m.seed, m.stratified)?,
        SchemeChoice::Loso => eval::loso_split(table)?,
    };
    let selection = if m.select { Some(m.selection()?) } else { None };
    let report = eval::run_protocol(table, &plan, selection.as_ref(), &m.classifier(m.model), m.seed)?;
    eprintln!(
        "{} {}: mean accuracy {:.2}%",
        report.model,
        report.scheme,
        100.0 * report.mean_accuracy
    );
    out.primary("folds.csv", &report.folds_csv())?;
    out.extra("summary.json", &report.summary_json())?;
    let tags: Vec<String> = report.folds.iter().map(|f| f.tag.clone()).collect();
    let acc: Vec<f64> = report.folds.iter().map(|f| f.accuracy).collect();
    out.extra(
        "chart.svg",
        &bar_chart(
            &format!("{} {} accuracy per fold", report.model.title(), report.scheme),
            &tags,
            &acc,
            1.0,
        ),
    )?;
    Ok(report)
}

fn matrix_folds_csv(matrix: &MatrixReport) -> String {
    let mut out = String::from("model,scheme,selection,");
    let mut header_done = false;
    for r in &matrix.reports {
        let csv = r.folds_csv();
        let mut lines = csv.lines();
        let header = lines.next().unwrap_or_default();
        if !header_done {
            out.push_str(header);
            out.push('\n');
            header_done = true;
        }
        let sel = if r.selection.is_some() { "with" } else { "without" };
        let scheme = match r.scheme {
            Scheme::Kfold { .. } => "kfold",
            Scheme::Loso => "loso",
        };
        for line in lines {
            let _ = writeln!(out, "{},{scheme},{sel},{line}", r.model);
        }
    }
    out
}

fn run_matrix(table: &FeatureTable, m: &RunManifest, out: &mut Output) -> Result<MatrixReport> {
    let configs: Vec<_> = ModelKind::ALL.iter().map(|&k| m.classifier(k)).collect();
    for c in &configs {
        c.validate()?;
    }
    let selection = m.selection()?;
    let matrix = eval::run_matrix(table, &configs, m.k, m.stratified, &selection, m.seed)?;
    out.primary("matrix.csv", &matrix.to_csv())?;
    out.extra("matrix_folds.csv", &matrix_folds_csv(&matrix))?;
    out.extra(
        "matrix.json",
        &serde_json::to_string_pretty(&matrix).context("serialising matrix")?,
    )?;

    let models: Vec<String> = matrix.rows.iter().map(|r| r.model.to_string()).collect();
    let columns = [
        ("LOSO without selection", 0),
        ("LOSO with selection", 1),
        ("k-fold without selection", 2),
        ("k-fold with selection", 3),
    ];
    let series: Vec<(String, Vec<f64>)> = columns
        .iter()
        .map(|&(name, c)| {
            let vals = matrix
                .rows
                .iter()
                .map(|r| [r.loso_without, r.loso_with, r.kfold_without, r.kfold_with][c])
                .collect();
            (name.to_string(), vals)
        })
        .collect();
    out.extra(
        "chart.svg",
        &grouped_bar_chart("Mean accuracy by classifier and protocol", &models, &series, 1.0),
    )?;

    // per-site LOSO accuracy with selection, one series per classifier
    let loso_with: Vec<&EvalReport> = matrix
        .reports
        .iter()
        .filter(|r| r.scheme == Scheme::Loso && r.selection.is_some())
        .collect();
    if let Some(first) = loso_with.first() {
        let sites: Vec<String> = first.folds.iter().map(|f| f.tag.clone()).collect();
        let series: Vec<(String, Vec<f64>)> = loso_with
            .iter()
            .map(|r| {
                (
                    r.model.to_string(),
                    r.folds.iter().map(|f| f.accuracy).collect(),
                )
            })
            .collect();
        out.extra(
            "sites.svg",
            &grouped_bar_chart("Leave-one-site-out accuracy per site", &sites, &series, 1.0),
        )?;
    }
    eprint!("{}", matrix.to_csv());
    Ok(matrix)
}

pub fn eval(m: &RunManifest, stdout: bool) -> Result<()> {
    let table = load(m)?;
    let mut out = Output::new(m, stdout)?;
    out.extra("manifest.txt", &m.to_text())?;
    let reports = if m.matrix {
        run_matrix(&table, m, &mut out)?.reports
    } else {
        vec![run_single(&table, m, &mut out)?]
    };
    out.finish();
    match not_converged(&reports) {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

pub fn report(m: &RunManifest, stdout: bool) -> Result<()> {
    let table = load(m)?;
    let mut out = Output::new(m, stdout)?;
    out.extra("manifest.txt", &m.to_text())?;
    if !stdout {
        out.extra("summary.csv", &table::summarize(&table)?.to_csv_string())?;
        let vectors = write_weights(&table, m, &WeightMethod::ALL, &mut out)?;
        let method = m.method.single()?;
        let wv = vectors
            .iter()
            .find(|w| w.method == method)
            .expect("all methods weighed");
        let (csv, selected) = selection_csv(wv, m.threshold);
        eprintln!("selected features: {}", selected.join(", "));
        out.extra("selection.csv", &csv)?;
    }
    let matrix = run_matrix(&table, m, &mut out)?;
    out.finish();
    match not_converged(&matrix.reports) {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}
