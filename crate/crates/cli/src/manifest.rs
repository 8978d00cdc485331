//! Run manifests: every knob a command reads, as flat `key = value` text.
//!
//! Resolution order is defaults, then the `--manifest` file, then explicit
//! flags. The resolved manifest is written next to the outputs so a run can be
//! repeated with `--manifest <out>/manifest.txt`.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use ccml_core::classifiers::{
    ClassifierConfig, ForestConfig, Gamma, KnnConfig, LdaConfig, MlpConfig, ModelKind, SvmConfig,
};
use ccml_core::eval::{Selection, SelectionScope};
use ccml_core::keyvalue;
use ccml_core::WeightMethod;

#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    File(PathBuf),
    /// Generated from a summary CSV, or the built-in ABIDE reference when `spec` is unset.
    Synth {
        spec: Option<PathBuf>,
        n_per_class: usize,
        sites: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodChoice {
    All,
    One(WeightMethod),
}

impl MethodChoice {
    pub fn methods(self) -> Vec<WeightMethod> {
        match self {
            MethodChoice::All => WeightMethod::ALL.to_vec(),
            MethodChoice::One(m) => vec![m],
        }
    }

    pub fn single(self) -> Result<WeightMethod> {
        match self {
            MethodChoice::One(m) => Ok(m),
            MethodChoice::All => bail!("this command needs a single weighting method, not `all`"),
        }
    }
}

impl FromStr for MethodChoice {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("all") {
            Ok(MethodChoice::All)
        } else {
            Ok(MethodChoice::One(s.parse().map_err(|e| anyhow!("{e}"))?))
        }
    }
}

impl std::fmt::Display for MethodChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MethodChoice::All => f.write_str("all"),
            MethodChoice::One(m) => write!(f, "{m}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeChoice {
    Kfold,
    Loso,
}

impl FromStr for SchemeChoice {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "kfold" => Ok(SchemeChoice::Kfold),
            "loso" => Ok(SchemeChoice::Loso),
            _ => bail!("unknown scheme `{s}` (expected kfold or loso)"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub input: Option<Source>,
    pub schema: Option<PathBuf>,
    pub method: MethodChoice,
    pub threshold: f64,
    pub n_bins: usize,
    /// Whether `eval` selects features before training.
    pub select: bool,
    pub selection_scope: SelectionScope,
    pub model: ModelKind,
    pub lda: LdaConfig,
    pub svm: SvmConfig,
    pub rf: ForestConfig,
    pub mlp: MlpConfig,
    pub knn: KnnConfig,
    pub scheme: SchemeChoice,
    pub k: usize,
    pub stratified: bool,
    pub matrix: bool,
    pub seed: u64,
    pub out: PathBuf,
}

impl Default for RunManifest {
    fn default() -> Self {
        let sel = Selection::default();
        RunManifest {
            input: None,
            schema: None,
            method: MethodChoice::One(sel.method),
            threshold: sel.threshold,
            n_bins: sel.n_bins,
            select: false,
            selection_scope: sel.scope,
            model: ModelKind::Lda,
            lda: LdaConfig::default(),
            svm: SvmConfig::default(),
            rf: ForestConfig::default(),
            mlp: MlpConfig::default(),
            knn: KnnConfig::default(),
            scheme: SchemeChoice::Kfold,
            k: 5,
            stratified: true,
            matrix: false,
            seed: 0,
            out: PathBuf::from("out"),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| anyhow!("`{key}`: cannot parse {value:?}: {e}"))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => bail!("`{key}`: expected true or false, got {value:?}"),
    }
}

pub fn parse_gamma(value: &str) -> Result<Gamma> {
    if value.eq_ignore_ascii_case("scale") {
        Ok(Gamma::Scale)
    } else {
        Ok(Gamma::Value(parse("svm.gamma", value)?))
    }
}

pub fn parse_ridge(value: &str) -> Result<Option<f64>> {
    if value.eq_ignore_ascii_case("auto") {
        Ok(None)
    } else {
        Ok(Some(parse("lda.ridge", value)?))
    }
}

pub fn parse_hidden(value: &str) -> Result<Vec<usize>> {
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    value
        .split(',')
        .map(|s| parse("mlp.hidden", s.trim()))
        .collect()
}

/// `chi2:0.4` selects with that method and threshold; `none` disables selection.
pub fn parse_select(value: &str) -> Result<Option<(WeightMethod, f64)>> {
    if value.eq_ignore_ascii_case("none") {
        return Ok(None);
    }
    let (method, threshold) = value
        .split_once(':')
        .ok_or_else(|| anyhow!("selection must look like `chi2:0.4` or `none`, got {value:?}"))?;
    let method: WeightMethod = method.parse().map_err(|e| anyhow!("{e}"))?;
    Ok(Some((method, parse("select", threshold)?)))
}

impl RunManifest {
    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read manifest {}", path.display()))?;
        let mut m = RunManifest::default();
        m.apply_text(&text)
            .with_context(|| format!("in manifest {}", path.display()))?;
        Ok(m)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        let entries = keyvalue::parse(text)?;
        // Source keys can come in any order; assemble them after the pass.
        let (mut input, mut spec, mut n_per_class, mut sites) = (None, None, None, None);
        for e in entries {
            let (key, v) = (e.key.as_str(), e.value.as_str());
            let res: Result<()> = (|| {
                match key {
                    "input" => input = Some(v.to_string()),
                    "synth.spec" => spec = Some(PathBuf::from(v)),
                    "synth.n_per_class" => n_per_class = Some(parse(key, v)?),
                    "synth.sites" => sites = Some(parse(key, v)?),
                    "schema" => self.schema = Some(PathBuf::from(v)),
                    "method" => self.method = parse(key, v)?,
                    "threshold" => self.threshold = parse(key, v)?,
                    "n_bins" => self.n_bins = parse(key, v)?,
                    "select" => self.select = parse_bool(key, v)?,
                    "selection_scope" => {
                        self.selection_scope = match v {
                            "per_fold" => SelectionScope::PerFold,
                            "global" => SelectionScope::Global,
                            _ => bail!("`{key}`: expected per_fold or global, got {v:?}"),
                        }
                    }
                    "model" => self.model = parse(key, v)?,
                    "lda.ridge" => self.lda.ridge = parse_ridge(v)?,
                    "svm.c" => self.svm.c = parse(key, v)?,
                    "svm.gamma" => self.svm.gamma = parse_gamma(v)?,
                    "svm.tol" => self.svm.tol = parse(key, v)?,
                    "svm.max_passes" => self.svm.max_passes = parse(key, v)?,
                    "rf.trees" => self.rf.n_trees = parse(key, v)?,
                    "rf.min_leaf" => self.rf.min_leaf = parse(key, v)?,
                    "mlp.hidden" => self.mlp.hidden = parse_hidden(v)?,
                    "mlp.lr" => self.mlp.lr = parse(key, v)?,
                    "mlp.epochs" => self.mlp.epochs = parse(key, v)?,
                    "mlp.batch" => self.mlp.batch = parse(key, v)?,
                    "knn.k" => self.knn.k = parse(key, v)?,
                    "scheme" => self.scheme = parse(key, v)?,
                    "k" => self.k = parse(key, v)?,
                    "stratified" => self.stratified = parse_bool(key, v)?,
                    "matrix" => self.matrix = parse_bool(key, v)?,
                    "seed" => self.seed = parse(key, v)?,
                    "out" => self.out = PathBuf::from(v),
                    _ => bail!("unknown key `{key}`"),
                }
                Ok(())
            })();
            res.with_context(|| format!("line {}", e.line))?;
        }
        match input.as_deref() {
            Some("synth") => {
                let (n0, s0) = match &self.input {
                    Some(Source::Synth { n_per_class, sites, .. }) => (*n_per_class, *sites),
                    _ => (550, 17),
                };
                self.input = Some(Source::Synth {
                    spec,
                    n_per_class: n_per_class.unwrap_or(n0),
                    sites: sites.unwrap_or(s0),
                });
            }
            Some(path) => self.input = Some(Source::File(PathBuf::from(path))),
            None => {
                if spec.is_some() || n_per_class.is_some() || sites.is_some() {
                    bail!("synth.* keys need `input = synth`");
                }
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        match &self.input {
            Some(Source::File(p)) => kv("input", p.display().to_string()),
            Some(Source::Synth {
                spec,
                n_per_class,
                sites,
            }) => {
                kv("input", "synth".into());
                if let Some(p) = spec {
                    kv("synth.spec", p.display().to_string());
                }
                kv("synth.n_per_class", n_per_class.to_string());
                kv("synth.sites", sites.to_string());
            }
            None => {}
        }
        if let Some(p) = &self.schema {
            kv("schema", p.display().to_string());
        }
        kv("method", self.method.to_string());
        kv("threshold", self.threshold.to_string());
        kv("n_bins", self.n_bins.to_string());
        kv("select", self.select.to_string());
        kv(
            "selection_scope",
            match self.selection_scope {
                SelectionScope::PerFold => "per_fold",
                SelectionScope::Global => "global",
            }
            .into(),
        );
        kv("model", self.model.to_string());
        kv(
            "lda.ridge",
            self.lda.ridge.map_or("auto".into(), |r| r.to_string()),
        );
        kv("svm.c", self.svm.c.to_string());
        kv(
            "svm.gamma",
            match self.svm.gamma {
                Gamma::Scale => "scale".into(),
                Gamma::Value(g) => g.to_string(),
            },
        );
        kv("svm.tol", self.svm.tol.to_string());
        kv("svm.max_passes", self.svm.max_passes.to_string());
        kv("rf.trees", self.rf.n_trees.to_string());
        kv("rf.min_leaf", self.rf.min_leaf.to_string());
        kv(
            "mlp.hidden",
            self.mlp
                .hidden
                .iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join(","),
        );
        kv("mlp.lr", self.mlp.lr.to_string());
        kv("mlp.epochs", self.mlp.epochs.to_string());
        kv("mlp.batch", self.mlp.batch.to_string());
        kv("knn.k", self.knn.k.to_string());
        kv(
            "scheme",
            match self.scheme {
                SchemeChoice::Kfold => "kfold",
                SchemeChoice::Loso => "loso",
            }
            .into(),
        );
        kv("k", self.k.to_string());
        kv("stratified", self.stratified.to_string());
        kv("matrix", self.matrix.to_string());
        kv("seed", self.seed.to_string());
        kv("out", self.out.display().to_string());
        out
    }

    pub fn classifier(&self, kind: ModelKind) -> ClassifierConfig {
        let config = match kind {
            ModelKind::Lda => ClassifierConfig::Lda(self.lda.clone()),
            ModelKind::Svm => ClassifierConfig::Svm(self.svm.clone()),
            ModelKind::Rf => ClassifierConfig::Rf(self.rf.clone()),
            ModelKind::Mlp => ClassifierConfig::Mlp(self.mlp.clone()),
            ModelKind::Knn => ClassifierConfig::Knn(self.knn.clone()),
        };
        config.with_seed(self.seed)
    }

    pub fn selection(&self) -> Result<Selection> {
        Ok(Selection {
            method: self.method.single()?,
            threshold: self.threshold,
            n_bins: self.n_bins,
            scope: self.selection_scope,
        })
    }
}
