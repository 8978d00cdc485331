//! Subject-level feature tables: ingestion, summary statistics, scaling and
//! a synthetic generator driven by per-class marginal statistics.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::keyvalue;

/// The twelve morphometric model features, in canonical order.
pub const FEATURE_NAMES: [&str; 12] = [
    "cc_area",
    "cc_perimeter",
    "cc_length",
    "cc_circularity",
    "w1_rostrum",
    "w2_genu",
    "w3_anterior_body",
    "w4_mid_body",
    "w5_posterior_body",
    "w6_isthmus",
    "w7_splenium",
    "brain_volume",
];

/// Acquisition sites in canonical reporting order.
pub const ABIDE_SITES: [&str; 20] = [
    "CALTECH", "CMU", "KKI", "MAXMUN", "NYU", "OLIN", "OHSU", "SDSU", "SBL", "STANFORD", "TRINITY",
    "UCLA_1", "UCLA_2", "LEUVEN_1", "LEUVEN_2", "UM_1", "UM_2", "PITT", "USM", "YALE",
];

/// Position of a site in canonical order; unknown sites sort after all known ones.
pub fn site_rank(site: &str) -> usize {
    ABIDE_SITES
        .iter()
        .position(|s| s.eq_ignore_ascii_case(site))
        .unwrap_or(ABIDE_SITES.len())
}

#[derive(Debug, thiserror::Error)]
pub enum TableError {
    #[error("missing column `{0}` in CSV header")]
    MissingColumn(String),
    #[error("bad value {value:?} at data row {row}, column `{column}`")]
    BadValue {
        row: usize,
        column: String,
        value: String,
    },
    #[error("duplicate subject id `{0}`")]
    DuplicateSubject(String),
    #[error("table is empty")]
    EmptyTable,
    #[error("invalid synthesis spec: {0}")]
    InvalidSpec(String),
    #[error("inconsistent table: {0}")]
    Inconsistent(String),
    #[error("schema file line {line}: {message}")]
    Schema { line: usize, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, TableError>;

/// Binary diagnosis label. `Control` encodes as 0, `Asd` as 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ClassLabel {
    Control,
    Asd,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; 2] = [ClassLabel::Control, ClassLabel::Asd];

    pub fn index(self) -> usize {
        match self {
            ClassLabel::Control => 0,
            ClassLabel::Asd => 1,
        }
    }

    pub fn from_index(i: usize) -> Self {
        if i == 0 {
            ClassLabel::Control
        } else {
            ClassLabel::Asd
        }
    }

    /// +1 for ASD, -1 for control.
    pub fn sign(self) -> f64 {
        match self {
            ClassLabel::Control => -1.0,
            ClassLabel::Asd => 1.0,
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassLabel::Control => f.write_str("Control"),
            ClassLabel::Asd => f.write_str("ASD"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sex {
    Male,
    Female,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectRecord {
    pub subject_id: String,
    pub site: String,
    pub label: ClassLabel,
    pub sex: Option<Sex>,
    pub age: Option<f64>,
    pub features: Vec<f64>,
}

/// Maps canonical field names onto CSV header names.
///
/// `subject_id`, `sex` and `age` are optional: when their mapped column is
/// absent from the header they are left unset (subject ids fall back to
/// `row-<n>`). Features, `label` and `site` are required.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnSchema {
    pub features: Vec<(String, String)>,
    pub subject_id: String,
    pub site: String,
    pub label: String,
    pub sex: String,
    pub age: String,
    pub label_positive: String,
    pub label_negative: String,
    pub sex_male: String,
    pub sex_female: String,
}

impl Default for ColumnSchema {
    fn default() -> Self {
        ColumnSchema {
            features: FEATURE_NAMES
                .iter()
                .map(|f| (f.to_string(), f.to_string()))
                .collect(),
            subject_id: "subject_id".into(),
            site: "site".into(),
            label: "label".into(),
            sex: "sex".into(),
            age: "age".into(),
            label_positive: "ASD".into(),
            label_negative: "Control".into(),
            sex_male: "M".into(),
            sex_female: "F".into(),
        }
    }
}

impl ColumnSchema {
    /// Schema whose feature columns are named exactly like `feature_names`.
    pub fn with_features(feature_names: &[String]) -> Self {
        ColumnSchema {
            features: feature_names
                .iter()
                .map(|f| (f.clone(), f.clone()))
                .collect(),
            ..ColumnSchema::default()
        }
    }

    /// Parses a flat `key = value` override file on top of the default schema.
    pub fn from_config_str(text: &str) -> Result<Self> {
        let mut schema = ColumnSchema::default();
        for entry in keyvalue::parse(text).map_err(|e| TableError::Schema {
            line: e.line,
            message: e.message,
        })? {
            let slot = match entry.key.as_str() {
                "subject_id" => &mut schema.subject_id,
                "site" => &mut schema.site,
                "label" => &mut schema.label,
                "sex" => &mut schema.sex,
                "age" => &mut schema.age,
                "label_positive" => &mut schema.label_positive,
                "label_negative" => &mut schema.label_negative,
                "sex_male" => &mut schema.sex_male,
                "sex_female" => &mut schema.sex_female,
                key => match schema.features.iter_mut().find(|(c, _)| c == key) {
                    Some((_, column)) => column,
                    None => {
                        return Err(TableError::Schema {
                            line: entry.line,
                            message: format!("unknown key `{key}`"),
                        })
                    }
                },
            };
            *slot = entry.value;
        }
        if schema.label_positive == schema.label_negative {
            return Err(TableError::Schema {
                line: 0,
                message: "label_positive and label_negative must differ".into(),
            });
        }
        Ok(schema)
    }

    pub fn from_config_file(path: &Path) -> Result<Self> {
        Self::from_config_str(&std::fs::read_to_string(path)?)
    }

    /// Renders the schema in the same `key = value` format it is read from.
    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        for (k, v) in [
            ("subject_id", &self.subject_id),
            ("site", &self.site),
            ("label", &self.label),
            ("label_positive", &self.label_positive),
            ("label_negative", &self.label_negative),
            ("sex", &self.sex),
            ("sex_male", &self.sex_male),
            ("sex_female", &self.sex_female),
            ("age", &self.age),
        ] {
            out.push_str(&format!("{k} = {v}\n"));
        }
        for (canonical, column) in &self.features {
            out.push_str(&format!("{canonical} = {column}\n"));
        }
        out
    }

    fn parse_label(&self, raw: &str) -> Option<ClassLabel> {
        if raw == self.label_positive {
            Some(ClassLabel::Asd)
        } else if raw == self.label_negative {
            Some(ClassLabel::Control)
        } else {
            None
        }
    }

    fn parse_sex(&self, raw: &str) -> Option<Sex> {
        if raw.eq_ignore_ascii_case(&self.sex_male) {
            Some(Sex::Male)
        } else if raw.eq_ignore_ascii_case(&self.sex_female) {
            Some(Sex::Female)
        } else {
            None
        }
    }
}

/// An immutable subjects × features table.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    records: Vec<SubjectRecord>,
    schema: ColumnSchema,
    feature_names: Vec<String>,
}

impl FeatureTable {
    /// Builds a table, checking feature arity, finiteness, unique ids and nonempty sites.
    pub fn new(feature_names: Vec<String>, records: Vec<SubjectRecord>) -> Result<Self> {
        let schema = ColumnSchema::with_features(&feature_names);
        Self::with_schema(feature_names, records, schema)
    }

    fn with_schema(
        feature_names: Vec<String>,
        records: Vec<SubjectRecord>,
        schema: ColumnSchema,
    ) -> Result<Self> {
        if feature_names.is_empty() {
            return Err(TableError::Inconsistent("no features".into()));
        }
        let mut seen = HashSet::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            if r.features.len() != feature_names.len() {
                return Err(TableError::Inconsistent(format!(
                    "record {i} has {} features, expected {}",
                    r.features.len(),
                    feature_names.len()
                )));
            }
            if let Some(j) = r.features.iter().position(|v| !v.is_finite()) {
                return Err(TableError::BadValue {
                    row: i + 1,
                    column: feature_names[j].clone(),
                    value: r.features[j].to_string(),
                });
            }
            if r.site.is_empty() {
                return Err(TableError::Inconsistent(format!("record {i} has empty site")));
            }
            if !seen.insert(r.subject_id.as_str()) {
                return Err(TableError::DuplicateSubject(r.subject_id.clone()));
            }
        }
        Ok(FeatureTable {
            records,
            schema,
            feature_names,
        })
    }

    pub fn records(&self) -> &[SubjectRecord] {
        &self.records
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn schema(&self) -> &ColumnSchema {
        &self.schema
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|f| f == name)
    }

    pub fn labels(&self) -> Vec<ClassLabel> {
        self.records.iter().map(|r| r.label).collect()
    }

    /// Values of one feature for the given rows.
    pub fn column(&self, feature: usize, rows: &[usize]) -> Vec<f64> {
        rows.iter()
            .map(|&i| self.records[i].features[feature])
            .collect()
    }

    /// Row-major design matrix restricted to `rows` and `features`.
    pub fn design(&self, rows: &[usize], features: &[usize]) -> Vec<Vec<f64>> {
        rows.iter()
            .map(|&i| {
                let r = &self.records[i].features;
                features.iter().map(|&j| r[j]).collect()
            })
            .collect()
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let mut counts = [0; 2];
        for r in &self.records {
            counts[r.label.index()] += 1;
        }
        counts
    }

    /// Distinct sites in canonical order (unknown sites alphabetically at the end).
    pub fn sites(&self) -> Vec<String> {
        let mut sites: Vec<String> = self
            .records
            .iter()
            .map(|r| r.site.clone())
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        sites.sort_by(|a, b| site_rank(a).cmp(&site_rank(b)).then_with(|| a.cmp(b)));
        sites
    }

    /// Fails unless both classes are present.
    pub fn require_two_classes(&self) -> Result<()> {
        let c = self.class_counts();
        if c[0] == 0 || c[1] == 0 {
            return Err(TableError::Inconsistent(
                "table needs at least one subject of each class".into(),
            ));
        }
        Ok(())
    }

    /// Same records with feature values replaced via `f(row, feature, value)`.
    pub fn map_features(&self, mut f: impl FnMut(usize, usize, f64) -> f64) -> Self {
        let records = self
            .records
            .iter()
            .enumerate()
            .map(|(i, r)| SubjectRecord {
                features: r
                    .features
                    .iter()
                    .enumerate()
                    .map(|(j, &v)| f(i, j, v))
                    .collect(),
                ..r.clone()
            })
            .collect();
        FeatureTable {
            records,
            schema: self.schema.clone(),
            feature_names: self.feature_names.clone(),
        }
    }

    /// Same table with records reordered by `order` (a permutation of row indices).
    pub fn permuted(&self, order: &[usize]) -> Self {
        FeatureTable {
            records: order.iter().map(|&i| self.records[i].clone()).collect(),
            schema: self.schema.clone(),
            feature_names: self.feature_names.clone(),
        }
    }

    /// Same table with labels replaced.
    pub fn with_labels(&self, labels: &[ClassLabel]) -> Self {
        assert_eq!(labels.len(), self.records.len());
        FeatureTable {
            records: self
                .records
                .iter()
                .zip(labels)
                .map(|(r, &label)| SubjectRecord { label, ..r.clone() })
                .collect(),
            schema: self.schema.clone(),
            feature_names: self.feature_names.clone(),
        }
    }

    /// Writes the table as CSV using the table's schema for header names and label spellings.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let s = &self.schema;
        let with_sex = self.records.iter().any(|r| r.sex.is_some());
        let with_age = self.records.iter().any(|r| r.age.is_some());
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec![s.subject_id.as_str(), s.site.as_str(), s.label.as_str()];
        if with_sex {
            header.push(&s.sex);
        }
        if with_age {
            header.push(&s.age);
        }
        header.extend(s.features.iter().map(|(_, c)| c.as_str()));
        w.write_record(&header)?;
        for r in &self.records {
            let mut row = vec![
                r.subject_id.clone(),
                r.site.clone(),
                match r.label {
                    ClassLabel::Asd => s.label_positive.clone(),
                    ClassLabel::Control => s.label_negative.clone(),
                },
            ];
            if with_sex {
                row.push(match r.sex {
                    Some(Sex::Male) => s.sex_male.clone(),
                    Some(Sex::Female) => s.sex_female.clone(),
                    None => String::new(),
                });
            }
            if with_age {
                row.push(r.age.map(|a| a.to_string()).unwrap_or_default());
            }
            row.extend(r.features.iter().map(|v| v.to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is utf-8")
    }
}

/// Reads a feature table from CSV text.
pub fn read_csv<R: Read>(reader: R, schema: &ColumnSchema) -> Result<FeatureTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    let find = |column: &str| header.iter().position(|h| h == column);
    let require = |column: &str| find(column).ok_or_else(|| TableError::MissingColumn(column.into()));

    let feature_cols = schema
        .features
        .iter()
        .map(|(_, column)| require(column))
        .collect::<Result<Vec<_>>>()?;
    let label_col = require(&schema.label)?;
    let site_col = require(&schema.site)?;
    let id_col = find(&schema.subject_id);
    let sex_col = find(&schema.sex);
    let age_col = find(&schema.age);

    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let n = i + 1;
        let cell = |col: usize| row.get(col).unwrap_or("");
        let bad = |column: &str, value: &str| TableError::BadValue {
            row: n,
            column: column.to_string(),
            value: value.to_string(),
        };

        let mut features = Vec::with_capacity(feature_cols.len());
        for (&col, (canonical, _)) in feature_cols.iter().zip(&schema.features) {
            let raw = cell(col);
            match raw.parse::<f64>() {
                Ok(v) if v.is_finite() => features.push(v),
                _ => return Err(bad(canonical, raw)),
            }
        }
        let label = schema
            .parse_label(cell(label_col))
            .ok_or_else(|| bad("label", cell(label_col)))?;
        let site = cell(site_col).to_string();
        if site.is_empty() {
            return Err(bad("site", ""));
        }
        // empty sex/age cells mean "not recorded"
        let sex = match sex_col {
            Some(col) if !cell(col).is_empty() => {
                Some(schema.parse_sex(cell(col)).ok_or_else(|| bad("sex", cell(col)))?)
            }
            _ => None,
        };
        let age = match age_col {
            Some(col) if cell(col).is_empty() => None,
            Some(col) => match cell(col).parse::<f64>() {
                Ok(v) if v.is_finite() => Some(v),
                _ => return Err(bad("age", cell(col))),
            },
            None => None,
        };
        let subject_id = match id_col {
            Some(col) if !cell(col).is_empty() => cell(col).to_string(),
            Some(col) => return Err(bad("subject_id", cell(col))),
            None => format!("row-{n}"),
        };
        if !seen.insert(subject_id.clone()) {
            return Err(TableError::DuplicateSubject(subject_id));
        }
        records.push(SubjectRecord {
            subject_id,
            site,
            label,
            sex,
            age,
            features,
        });
    }
    let names = schema.features.iter().map(|(c, _)| c.clone()).collect();
    FeatureTable::with_schema(names, records, schema.clone())
}

/// Loads a feature table from a CSV file.
pub fn load_csv(path: &Path, schema: &ColumnSchema) -> Result<FeatureTable> {
    let file = std::fs::File::open(path)?;
    read_csv(std::io::BufReader::new(file), schema)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Mean and sample standard deviation (n-1 divisor; 0 for fewer than two values).
    pub fn of(values: impl IntoIterator<Item = f64>) -> Option<Self> {
        let values: Vec<f64> = values.into_iter().collect();
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        Some(MeanStd { mean, std })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSummary {
    pub count: usize,
    pub male: usize,
    pub female: usize,
    pub age: Option<MeanStd>,
    pub features: Vec<MeanStd>,
}

/// Per-class descriptive statistics, indexed by [`ClassLabel::index`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub feature_names: Vec<String>,
    pub classes: [ClassSummary; 2],
}

impl SummaryStats {
    pub fn class(&self, label: ClassLabel) -> &ClassSummary {
        &self.classes[label.index()]
    }

    pub fn total(&self) -> usize {
        self.classes.iter().map(|c| c.count).sum()
    }

    /// Published ABIDE preprocessed-data summary (controls, then ASD).
    pub fn abide_reference() -> Self {
        const CONTROL: [(f64, f64); 12] = [
            (596.654, 102.93),
            (196.405, 6.353),
            (70.583, 5.342),
            (0.194, 0.020),
            (20.753, 14.264),
            (128.789, 32.134),
            (91.088, 19.212),
            (69.705, 13.351),
            (59.007, 11.698),
            (51.843, 12.519),
            (175.471, 32.353),
            (1482428.866, 150985.323),
        ];
        const ASD: [(f64, f64); 12] = [
            (596.908, 110.134),
            (198.102, 17.265),
            (70.711, 5.671),
            (0.191, 0.023),
            (25.899, 10.809),
            (128.855, 33.704),
            (91.734, 20.302),
            (69.345, 13.796),
            (59.454, 12.501),
            (52.137, 13.313),
            (174.483, 34.562),
            (1504247.415, 170357.180),
        ];
        let to_stats = |rows: &[(f64, f64); 12]| {
            rows.iter()
                .map(|&(mean, std)| MeanStd { mean, std })
                .collect()
        };
        SummaryStats {
            feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            classes: [
                ClassSummary {
                    count: 571,
                    male: 479,
                    female: 99,
                    age: Some(MeanStd {
                        mean: 17.102,
                        std: 7.726,
                    }),
                    features: to_stats(&CONTROL),
                },
                ClassSummary {
                    count: 529,
                    male: 465,
                    female: 64,
                    age: Some(MeanStd {
                        mean: 17.082,
                        std: 8.428,
                    }),
                    features: to_stats(&ASD),
                },
            ],
        }
    }

    /// CSV with one row per feature: `feature,control_mean,control_std,asd_mean,asd_std`,
    /// preceded by count, sex and age rows.
    pub fn to_csv_string(&self) -> String {
        let [c, a] = &self.classes;
        let mut out = String::from("feature,control_mean,control_std,asd_mean,asd_std\n");
        out.push_str(&format!("count,{},,{},\n", c.count, a.count));
        out.push_str(&format!("sex_male,{},,{},\n", c.male, a.male));
        out.push_str(&format!("sex_female,{},,{},\n", c.female, a.female));
        if let (Some(ca), Some(aa)) = (c.age, a.age) {
            out.push_str(&format!("age,{},{},{},{}\n", ca.mean, ca.std, aa.mean, aa.std));
        }
        for (k, name) in self.feature_names.iter().enumerate() {
            let (cf, af) = (c.features[k], a.features[k]);
            out.push_str(&format!(
                "{name},{},{},{},{}\n",
                cf.mean, cf.std, af.mean, af.std
            ));
        }
        out
    }

    /// Reads back the format written by [`SummaryStats::to_csv_string`].
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let bad = |msg: String| TableError::InvalidSpec(msg);
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(text.as_bytes());
        let mut counts: BTreeMap<String, [usize; 2]> = BTreeMap::new();
        let mut age = None;
        let mut feature_names = Vec::new();
        let mut features: [Vec<MeanStd>; 2] = [Vec::new(), Vec::new()];
        for record in rdr.records() {
            let record = record?;
            let field = |i: usize| record.get(i).unwrap_or("").trim();
            let name = field(0).to_string();
            match name.as_str() {
                "count" | "sex_male" | "sex_female" => {
                    let parse = |s: &str| {
                        s.parse::<usize>()
                            .map_err(|_| bad(format!("{name}: `{s}` is not a count")))
                    };
                    counts.insert(name.clone(), [parse(field(1))?, parse(field(3))?]);
                }
                _ => {
                    let mut v = [0.0; 4];
                    for (k, slot) in v.iter_mut().enumerate() {
                        let s = field(k + 1);
                        *slot = s
                            .parse()
                            .map_err(|_| bad(format!("{name}: `{s}` is not a number")))?;
                    }
                    let pair = [
                        MeanStd { mean: v[0], std: v[1] },
                        MeanStd { mean: v[2], std: v[3] },
                    ];
                    if name == "age" {
                        age = Some(pair);
                    } else {
                        feature_names.push(name);
                        features[0].push(pair[0]);
                        features[1].push(pair[1]);
                    }
                }
            }
        }
        if feature_names.is_empty() {
            return Err(bad("summary lists no features".into()));
        }
        let get = |key: &str, c: usize| counts.get(key).map_or(0, |v| v[c]);
        let [fc, fa] = features;
        let class = |c: usize, features: Vec<MeanStd>| ClassSummary {
            count: get("count", c),
            male: get("sex_male", c),
            female: get("sex_female", c),
            age: age.map(|a| a[c]),
            features,
        };
        Ok(SummaryStats {
            feature_names,
            classes: [class(0, fc), class(1, fa)],
        })
    }
}

/// Per-class counts, sex counts and feature mean/std.
pub fn summarize(table: &FeatureTable) -> Result<SummaryStats> {
    if table.is_empty() {
        return Err(TableError::EmptyTable);
    }
    let nan = MeanStd {
        mean: f64::NAN,
        std: f64::NAN,
    };
    let classes = ClassLabel::ALL.map(|label| {
        let members: Vec<&SubjectRecord> = table
            .records()
            .iter()
            .filter(|r| r.label == label)
            .collect();
        ClassSummary {
            count: members.len(),
            male: members.iter().filter(|r| r.sex == Some(Sex::Male)).count(),
            female: members.iter().filter(|r| r.sex == Some(Sex::Female)).count(),
            age: if members.iter().all(|r| r.age.is_some()) {
                MeanStd::of(members.iter().filter_map(|r| r.age))
            } else {
                None
            },
            features: (0..table.n_features())
                .map(|j| MeanStd::of(members.iter().map(|r| r.features[j])).unwrap_or(nan))
                .collect(),
        }
    });
    Ok(SummaryStats {
        feature_names: table.feature_names().to_vec(),
        classes,
    })
}

/// Per-feature z-score parameters fitted on a set of training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    /// Fits column means and sample standard deviations of a row-major matrix.
    pub fn fit(rows: &[Vec<f64>]) -> Self {
        let d = rows.first().map_or(0, Vec::len);
        let (mean, std) = (0..d)
            .map(|j| {
                let ms = MeanStd::of(rows.iter().map(|r| r[j])).expect("nonempty rows");
                (ms.mean, ms.std)
            })
            .unzip();
        Standardizer { mean, std }
    }

    /// Fits on the given rows of a table, over all features.
    pub fn fit_table(table: &FeatureTable, rows: &[usize]) -> Self {
        let all: Vec<usize> = (0..table.n_features()).collect();
        Self::fit(&table.design(rows, &all))
    }

    /// `(x - mean) / std`; features with zero std pass through unchanged.
    pub fn transform(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(&v, (&m, &s))| if s > 0.0 { (v - m) / s } else { v })
            .collect()
    }

    pub fn transform_all(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        rows.iter().map(|r| self.transform(r)).collect()
    }
}

/// Applies `stats` to every record's features; metadata is untouched.
pub fn standardize(table: &FeatureTable, stats: &Standardizer) -> FeatureTable {
    assert_eq!(stats.mean.len(), table.n_features());
    let records = table
        .records()
        .iter()
        .map(|r| SubjectRecord {
            features: stats.transform(&r.features),
            ..r.clone()
        })
        .collect();
    FeatureTable {
        records,
        schema: table.schema.clone(),
        feature_names: table.feature_names.clone(),
    }
}

/// Name of the `i`-th synthetic site.
pub fn synthetic_site_name(i: usize, n_sites: usize) -> String {
    if n_sites <= ABIDE_SITES.len() {
        ABIDE_SITES[i].to_string()
    } else {
        format!("SITE{:02}", i + 1)
    }
}

/// Draws `n_per_class` subjects per class with independent normal features.
///
/// Controls come first, then ASD subjects; sites are assigned round-robin over
/// the global record index. Sex follows each class's male/female ratio and age
/// a normal truncated to positive values.
pub fn synthesize(
    spec: &SummaryStats,
    n_per_class: usize,
    n_sites: usize,
    seed: u64,
) -> Result<FeatureTable> {
    if n_per_class == 0 {
        return Err(TableError::InvalidSpec("n_per_class must be at least 1".into()));
    }
    if n_sites == 0 {
        return Err(TableError::InvalidSpec("n_sites must be at least 1".into()));
    }
    let d = spec.feature_names.len();
    let mut dists: BTreeMap<(usize, usize), Normal<f64>> = BTreeMap::new();
    for (c, class) in spec.classes.iter().enumerate() {
        if class.features.len() != d {
            return Err(TableError::InvalidSpec(format!(
                "class {c} has {} feature entries, expected {d}",
                class.features.len()
            )));
        }
        for (j, ms) in class.features.iter().enumerate() {
            if !(ms.std >= 0.0) || !ms.mean.is_finite() || !ms.std.is_finite() {
                return Err(TableError::InvalidSpec(format!(
                    "feature `{}` has mean {} and std {}",
                    spec.feature_names[j], ms.mean, ms.std
                )));
            }
            dists.insert((c, j), Normal::new(ms.mean, ms.std).expect("validated std"));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(2 * n_per_class);
    for label in ClassLabel::ALL {
        let class = spec.class(label);
        let male_p = if class.male + class.female == 0 {
            0.5
        } else {
            class.male as f64 / (class.male + class.female) as f64
        };
        let age_dist = class
            .age
            .filter(|a| a.std >= 0.0 && a.mean > 0.0)
            .map(|a| Normal::new(a.mean, a.std).expect("validated std"));
        for _ in 0..n_per_class {
            let i = records.len();
            let sex = if rng.gen::<f64>() < male_p {
                Sex::Male
            } else {
                Sex::Female
            };
            let age = age_dist.map(|dist| loop {
                let a: f64 = dist.sample(&mut rng);
                if a > 0.0 {
                    break a;
                }
            });
            let features = (0..d)
                .map(|j| dists[&(label.index(), j)].sample(&mut rng))
                .collect();
            records.push(SubjectRecord {
                subject_id: format!("SYN{:05}", i + 1),
                site: synthetic_site_name(i % n_sites, n_sites),
                label,
                sex: Some(sex),
                age,
                features,
            });
        }
    }
    FeatureTable::new(spec.feature_names.clone(), records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header() -> String {
        let mut h = String::from("subject_id,site,label,sex,age");
        for f in FEATURE_NAMES {
            h.push(',');
            h.push_str(f);
        }
        h
    }

    fn row(id: &str, label: &str, first: &str) -> String {
        let mut r = format!("{id},NYU,{label},M,12.5,{first}");
        for k in 1..12 {
            r.push_str(&format!(",{}", k as f64 * 1.5));
        }
        r
    }

    fn csv3() -> String {
        format!(
            "{}\n{}\n{}\n{}\n",
            header(),
            row("a", "ASD", "600"),
            row("b", "Control", "590.5"),
            row("c", "ASD", "610")
        )
    }

    #[test]
    fn reads_valid_rows() {
        let t = read_csv(csv3().as_bytes(), &ColumnSchema::default()).unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t.records()[1].label, ClassLabel::Control);
        assert_eq!(t.records()[1].features[0], 590.5);
        assert_eq!(t.records()[0].sex, Some(Sex::Male));
        assert_eq!(t.class_counts(), [1, 2]);
    }

    #[test]
    fn missing_feature_column() {
        let text = csv3().replace(",brain_volume", ",volume");
        match read_csv(text.as_bytes(), &ColumnSchema::default()) {
            Err(TableError::MissingColumn(c)) => assert_eq!(c, "brain_volume"),
            other => panic!("expected MissingColumn, got {other:?}"),
        }
    }

    #[test]
    fn non_numeric_feature_reports_row_and_column() {
        let text = format!(
            "{}\n{}\n{}\n",
            header(),
            row("a", "ASD", "600"),
            row("b", "Control", "abc")
        );
        match read_csv(text.as_bytes(), &ColumnSchema::default()) {
            Err(TableError::BadValue { row, column, .. }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "cc_area");
            }
            other => panic!("expected BadValue, got {other:?}"),
        }
    }

    #[test]
    fn empty_cell_is_rejected_not_imputed() {
        let text = format!("{}\n{}\n", header(), row("a", "ASD", ""));
        assert!(matches!(
            read_csv(text.as_bytes(), &ColumnSchema::default()),
            Err(TableError::BadValue { row: 1, .. })
        ));
    }

    #[test]
    fn unknown_label_and_sex() {
        let text = format!("{}\n{}\n", header(), row("a", "maybe", "1"));
        assert!(matches!(
            read_csv(text.as_bytes(), &ColumnSchema::default()),
            Err(TableError::BadValue { ref column, .. }) if column == "label"
        ));
        let text = format!("{}\n{}\n", header(), row("a", "ASD", "1").replace(",M,", ",X,"));
        assert!(matches!(
            read_csv(text.as_bytes(), &ColumnSchema::default()),
            Err(TableError::BadValue { ref column, .. }) if column == "sex"
        ));
    }

    #[test]
    fn duplicate_subject() {
        let text = format!("{}\n{}\n{}\n", header(), row("a", "ASD", "1"), row("a", "ASD", "2"));
        assert!(matches!(
            read_csv(text.as_bytes(), &ColumnSchema::default()),
            Err(TableError::DuplicateSubject(id)) if id == "a"
        ));
    }

    #[test]
    fn schema_file_renames_columns() {
        let schema = ColumnSchema::from_config_str(
            "# ABIDE naming\nlabel = DX_GROUP\nlabel_positive = 1\nlabel_negative = 2\nbrain_volume = BrainVol\n",
        )
        .unwrap();
        let text = csv3()
            .replace(",label,", ",DX_GROUP,")
            .replace(",brain_volume", ",BrainVol")
            .replace(",ASD,", ",1,")
            .replace(",Control,", ",2,");
        let t = read_csv(text.as_bytes(), &schema).unwrap();
        assert_eq!(t.class_counts(), [1, 2]);
        assert_eq!(t.feature_names()[11], "brain_volume");

        let again = ColumnSchema::from_config_str(&schema.to_config_string()).unwrap();
        assert_eq!(again, schema);
        assert!(ColumnSchema::from_config_str("volume = x").is_err());
    }

    #[test]
    fn summary_of_identical_records_has_zero_std() {
        let rec = |id: &str| SubjectRecord {
            subject_id: id.into(),
            site: "NYU".into(),
            label: ClassLabel::Asd,
            sex: None,
            age: None,
            features: vec![1.0, 2.0],
        };
        let t = FeatureTable::new(vec!["a".into(), "b".into()], vec![rec("x"), rec("y")]).unwrap();
        let s = summarize(&t).unwrap();
        assert_eq!(s.class(ClassLabel::Asd).count, 2);
        assert_eq!(s.class(ClassLabel::Control).count, 0);
        assert!(s.class(ClassLabel::Asd).features.iter().all(|m| m.std == 0.0));
    }

    #[test]
    fn summary_of_empty_table_fails() {
        let t = FeatureTable::new(vec!["a".into()], vec![]).unwrap();
        assert!(matches!(summarize(&t), Err(TableError::EmptyTable)));
    }

    #[test]
    fn standardize_symmetric_pair() {
        let s = Standardizer::fit(&[vec![2.0], vec![4.0]]);
        assert_eq!(s.mean, vec![3.0]);
        let a = s.transform(&[2.0])[0];
        let b = s.transform(&[4.0])[0];
        assert!(a < 0.0 && (a + b).abs() < 1e-15);
    }

    #[test]
    fn constant_column_passes_through() {
        let s = Standardizer::fit(&[vec![7.0, 1.0], vec![7.0, 3.0]]);
        assert_eq!(s.transform(&[7.0, 1.0])[0], 7.0);
        assert_eq!(s.transform(&[9.0, 1.0])[0], 9.0);
    }

    #[test]
    fn minimal_synthesis() {
        let t = synthesize(&SummaryStats::abide_reference(), 1, 1, 3).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.sites(), vec!["CALTECH".to_string()]);
        assert_eq!(t.class_counts(), [1, 1]);
    }

    #[test]
    fn negative_std_is_invalid() {
        let mut spec = SummaryStats::abide_reference();
        spec.classes[1].features[3].std = -0.1;
        assert!(matches!(synthesize(&spec, 5, 2, 0), Err(TableError::InvalidSpec(_))));
    }

    #[test]
    fn synthesis_matches_reference_brain_volume() {
        let spec = SummaryStats::abide_reference();
        let t = synthesize(&spec, 550, 17, 7).unwrap();
        let s = summarize(&t).unwrap();
        let target = spec.class(ClassLabel::Asd).features[11];
        let got = s.class(ClassLabel::Asd).features[11].mean;
        let se = target.std / (550f64).sqrt();
        assert!((got - target.mean).abs() < 3.0 * se, "{got} vs {}", target.mean);
        assert_eq!(t.sites().len(), 17);
    }

    #[test]
    fn site_order_is_canonical() {
        let t = synthesize(&SummaryStats::abide_reference(), 10, 20, 1).unwrap();
        let sites = t.sites();
        assert_eq!(sites.first().unwrap(), "CALTECH");
        assert_eq!(sites.last().unwrap(), "YALE");
        assert!(site_rank("usm") < site_rank("YALE"));
        assert_eq!(site_rank("ELSEWHERE"), ABIDE_SITES.len());
    }

    #[test]
    fn summary_csv_round_trips() {
        let spec = SummaryStats::abide_reference();
        assert_eq!(SummaryStats::from_csv_str(&spec.to_csv_string()).unwrap(), spec);
        assert!(SummaryStats::from_csv_str("feature,control_mean,control_std,asd_mean,asd_std\n").is_err());
        assert!(SummaryStats::from_csv_str("feature,a,b,c,d\ncc_area,1,x,2,3\n").is_err());
    }
}
