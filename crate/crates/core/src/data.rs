//! Tabular data: schema files, CSV ingestion, categorical encoding, label
//! normalization and train/test splitting.
//!
//! Raw CSV text is parsed into a [`RawTable`] of optional string cells. An
//! [`Encoding`] is fitted on training rows (category lists, numeric medians,
//! class names) and then applied to any table with the same header, so test
//! data is encoded exactly like the training data.

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::seed::rng_for;

/// RNG stream used for train/test shuffling.
const SPLIT_STREAM: u64 = 0x5917;

/// Cell tokens treated as missing, after trimming.
const MISSING_TOKENS: [&str; 2] = ["", "?"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnKind {
    Numeric,
    Categorical,
    Label,
}

impl ColumnKind {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "numeric" => Some(ColumnKind::Numeric),
            "categorical" => Some(ColumnKind::Categorical),
            "label" => Some(ColumnKind::Label),
            _ => None,
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            ColumnKind::Numeric => "numeric",
            ColumnKind::Categorical => "categorical",
            ColumnKind::Label => "label",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelKind {
    /// Class index in `0..n_classes`.
    Class,
    /// Real-valued target.
    Real,
}

impl LabelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LabelKind::Class => "class",
            LabelKind::Real => "real",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "class" => Some(LabelKind::Class),
            "real" => Some(LabelKind::Real),
            _ => None,
        }
    }
}

/// One declared column. `categories` is optional for categorical and label
/// columns; when given it fixes the dummy (or class index) order.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnSchema {
    pub name: String,
    pub kind: ColumnKind,
    pub categories: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Schema {
    pub label_kind: LabelKind,
    pub columns: Vec<ColumnSchema>,
}

impl Schema {
    /// Parses the schema file format:
    ///
    /// ```text
    /// label_task,class
    /// age,numeric
    /// blood,categorical,A|B|O|AB
    /// y,label,0|1
    /// ```
    ///
    /// Lines starting with `#` are comments.
    pub fn parse(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut label_kind = None;
        let mut columns = Vec::new();
        for (line, record) in reader.records().enumerate() {
            let record = record.map_err(|e| Error::Schema(format!("line {}: {e}", line + 1)))?;
            if record.iter().all(str::is_empty) {
                continue;
            }
            let name = record.get(0).unwrap_or_default();
            let kind = record.get(1).unwrap_or_default();
            if label_kind.is_none() {
                if name != "label_task" {
                    return Err(Error::Schema(
                        "first entry must be `label_task,<class|real>`".into(),
                    ));
                }
                label_kind = Some(LabelKind::parse(kind).ok_or_else(|| {
                    Error::Schema(format!("label_task must be class or real, got '{kind}'"))
                })?);
                continue;
            }
            if record.len() > 3 {
                return Err(Error::Schema(format!(
                    "line {}: expected `name,kind[,categories]`",
                    line + 1
                )));
            }
            let kind = ColumnKind::parse(kind).ok_or_else(|| {
                Error::Schema(format!("column '{name}': unknown kind '{kind}'"))
            })?;
            let categories = match record.get(2) {
                Some(c) if !c.is_empty() => c.split('|').map(|s| s.trim().to_string()).collect(),
                _ => Vec::new(),
            };
            columns.push(ColumnSchema {
                name: name.to_string(),
                kind,
                categories,
            });
        }
        let schema = Schema {
            label_kind: label_kind.ok_or_else(|| Error::Schema("empty schema".into()))?,
            columns,
        };
        schema.validate()?;
        Ok(schema)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("label_task,{}\n", self.label_kind.as_str());
        for c in &self.columns {
            out.push_str(&schema_field(&c.name));
            out.push(',');
            out.push_str(c.kind.as_str());
            if !c.categories.is_empty() {
                out.push(',');
                out.push_str(&schema_field(&c.categories.join("|")));
            }
            out.push('\n');
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let labels = self.columns.iter().filter(|c| c.kind == ColumnKind::Label).count();
        if labels != 1 {
            return Err(Error::Schema(format!(
                "exactly one label column required, found {labels}"
            )));
        }
        let mut seen = HashMap::new();
        for c in &self.columns {
            if c.name.is_empty() {
                return Err(Error::Schema("empty column name".into()));
            }
            if seen.insert(c.name.as_str(), ()).is_some() {
                return Err(Error::Schema(format!("duplicate column '{}'", c.name)));
            }
            if c.kind == ColumnKind::Numeric && !c.categories.is_empty() {
                return Err(Error::Schema(format!(
                    "numeric column '{}' cannot declare categories",
                    c.name
                )));
            }
            let mut cats = HashMap::new();
            for cat in &c.categories {
                if is_missing(cat) {
                    return Err(Error::Schema(format!(
                        "column '{}': category '{cat}' is a missing-value marker",
                        c.name
                    )));
                }
                if cats.insert(cat.as_str(), ()).is_some() {
                    return Err(Error::Schema(format!(
                        "column '{}': duplicate category '{cat}'",
                        c.name
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn label_column(&self) -> &ColumnSchema {
        self.columns
            .iter()
            .find(|c| c.kind == ColumnKind::Label)
            .expect("validated schema has a label column")
    }
}

/// Quotes a schema field when bare text would not parse back: CSV
/// metacharacters, or a leading `#` that would read as a comment.
fn schema_field(s: &str) -> String {
    if s.starts_with('#') || s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn is_missing(cell: &str) -> bool {
    MISSING_TOKENS.contains(&cell.trim())
}

/// CSV contents as header plus optional (non-missing) string cells.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RawTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Option<String>>>,
}

impl RawTable {
    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let header: Vec<String> = rdr
            .headers()
            .map_err(|e| Error::Csv(e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        if header.is_empty() || header.iter().all(String::is_empty) {
            return Err(Error::Csv("missing header row".into()));
        }
        let mut rows = Vec::new();
        for (i, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| Error::Csv(format!("data row {}: {e}", i + 1)))?;
            rows.push(
                record
                    .iter()
                    .map(|c| if is_missing(c) { None } else { Some(c.to_string()) })
                    .collect(),
            );
        }
        Ok(RawTable { header, rows })
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(std::io::BufReader::new(file))
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).map_err(|e| Error::Csv(e.to_string()))?;
        for row in &self.rows {
            w.write_record(row.iter().map(|c| c.as_deref().unwrap_or("")))
                .map_err(|e| Error::Csv(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Csv(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Csv(e.to_string()))
    }

    fn column_index(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

/// Fitted encoding state for one feature column.
#[derive(Debug, Clone, PartialEq)]
pub enum ColumnEncoding {
    Numeric { name: String, median: f64 },
    Categorical { name: String, categories: Vec<String> },
}

impl ColumnEncoding {
    pub fn name(&self) -> &str {
        match self {
            ColumnEncoding::Numeric { name, .. } | ColumnEncoding::Categorical { name, .. } => name,
        }
    }

    fn width(&self) -> usize {
        match self {
            ColumnEncoding::Numeric { .. } => 1,
            ColumnEncoding::Categorical { categories, .. } => categories.len() + 1,
        }
    }
}

/// Everything needed to turn raw rows into the numeric feature matrix,
/// learned once from training data.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoding {
    pub label_kind: LabelKind,
    pub label_name: String,
    /// Class names in index order (classification only).
    pub classes: Vec<String>,
    pub columns: Vec<ColumnEncoding>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EncodeOptions {
    /// Reject categories not seen at fit time instead of mapping them to the
    /// missing indicator.
    pub strict: bool,
}

impl Encoding {
    /// Learns categories (first-seen order unless declared), numeric medians
    /// and class names from `raw`.
    pub fn fit(raw: &RawTable, schema: &Schema) -> Result<Self> {
        schema.validate()?;
        check_header(raw, schema, true)?;
        let mut columns = Vec::new();
        for col in schema.columns.iter().filter(|c| c.kind != ColumnKind::Label) {
            let idx = raw.column_index(&col.name).expect("header checked");
            match col.kind {
                ColumnKind::Numeric => {
                    let mut values = Vec::new();
                    for (r, row) in raw.rows.iter().enumerate() {
                        if let Some(cell) = &row[idx] {
                            values.push(parse_number(cell, r + 1, &col.name)?);
                        }
                    }
                    columns.push(ColumnEncoding::Numeric {
                        name: col.name.clone(),
                        median: median(&mut values).unwrap_or(0.0),
                    });
                }
                ColumnKind::Categorical => {
                    let categories = if col.categories.is_empty() {
                        first_seen(raw.rows.iter().filter_map(|row| row[idx].as_deref()))
                    } else {
                        col.categories.clone()
                    };
                    if categories.is_empty() {
                        return Err(Error::Schema(format!(
                            "categorical column '{}' has an empty category set",
                            col.name
                        )));
                    }
                    columns.push(ColumnEncoding::Categorical {
                        name: col.name.clone(),
                        categories,
                    });
                }
                ColumnKind::Label => unreachable!(),
            }
        }
        let label = schema.label_column();
        let label_idx = raw.column_index(&label.name).expect("header checked");
        let classes = match schema.label_kind {
            LabelKind::Real => Vec::new(),
            LabelKind::Class if !label.categories.is_empty() => label.categories.clone(),
            LabelKind::Class => first_seen(raw.rows.iter().filter_map(|r| r[label_idx].as_deref())),
        };
        Ok(Encoding {
            label_kind: schema.label_kind,
            label_name: label.name.clone(),
            classes,
            columns,
        })
    }

    pub fn feature_dim(&self) -> usize {
        self.columns.iter().map(ColumnEncoding::width).sum()
    }

    /// Encoded feature names, binary-dimension flags, and source column index
    /// for every encoded dimension.
    pub fn layout(&self) -> (Vec<String>, Vec<bool>, Vec<usize>) {
        let mut names = Vec::new();
        let mut binary = Vec::new();
        let mut sources = Vec::new();
        for (c, col) in self.columns.iter().enumerate() {
            match col {
                ColumnEncoding::Numeric { name, .. } => {
                    names.push(name.clone());
                    binary.push(false);
                    sources.push(c);
                }
                ColumnEncoding::Categorical { name, categories } => {
                    for cat in categories {
                        names.push(format!("{name}={cat}"));
                        binary.push(true);
                        sources.push(c);
                    }
                    names.push(format!("{name}:missing"));
                    binary.push(true);
                    sources.push(c);
                }
            }
        }
        (names, binary, sources)
    }

    /// Encodes `raw`. A table without the label column yields an unlabeled
    /// dataset (all `y` are NaN).
    pub fn encode(&self, raw: &RawTable, opts: EncodeOptions) -> Result<Dataset> {
        let mut col_idx = Vec::with_capacity(self.columns.len());
        for col in &self.columns {
            col_idx.push(raw.column_index(col.name()).ok_or_else(|| {
                Error::HeaderMismatch(format!("column '{}' missing from header", col.name()))
            })?);
        }
        let label_idx = raw.column_index(&self.label_name);
        let d = self.feature_dim();
        let n = raw.rows.len();
        let mut x = Vec::with_capacity(n * d);
        let mut y = Vec::with_capacity(n);
        let class_index: HashMap<&str, usize> =
            self.classes.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
        for (r, row) in raw.rows.iter().enumerate() {
            let line = r + 1;
            for (col, &idx) in self.columns.iter().zip(&col_idx) {
                let cell = row.get(idx).and_then(|c| c.as_deref());
                match col {
                    ColumnEncoding::Numeric { name, median } => {
                        x.push(match cell {
                            Some(c) => parse_number(c, line, name)?,
                            None => *median,
                        });
                    }
                    ColumnEncoding::Categorical { name, categories } => {
                        let hot = match cell {
                            None => categories.len(),
                            Some(c) => match categories.iter().position(|k| k == c) {
                                Some(p) => p,
                                None if opts.strict => {
                                    return Err(Error::UnknownCategory {
                                        row: line,
                                        column: name.clone(),
                                        value: c.to_string(),
                                    })
                                }
                                None => categories.len(),
                            },
                        };
                        for k in 0..=categories.len() {
                            x.push(if k == hot { 1.0 } else { 0.0 });
                        }
                    }
                }
            }
            match label_idx {
                None => y.push(f64::NAN),
                Some(li) => {
                    let cell = row
                        .get(li)
                        .and_then(|c| c.as_deref())
                        .ok_or(Error::MissingLabel { row: line })?;
                    y.push(match self.label_kind {
                        LabelKind::Real => parse_number(cell, line, &self.label_name)?,
                        LabelKind::Class => *class_index.get(cell).ok_or_else(|| {
                            Error::UnknownCategory {
                                row: line,
                                column: self.label_name.clone(),
                                value: cell.to_string(),
                            }
                        })? as f64,
                    });
                }
            }
        }
        let (feature_names, binary_dims, feature_sources) = self.layout();
        Ok(Dataset {
            n,
            d,
            x,
            y,
            labeled: label_idx.is_some(),
            feature_names,
            feature_sources,
            binary_dims,
            label_kind: self.label_kind,
            n_classes: self.classes.len(),
            label_bounds: None,
            encoding: Some(self.clone()),
        })
    }
}

fn check_header(raw: &RawTable, schema: &Schema, need_label: bool) -> Result<()> {
    for c in &schema.columns {
        if c.kind == ColumnKind::Label && !need_label {
            continue;
        }
        if raw.column_index(&c.name).is_none() {
            return Err(Error::HeaderMismatch(format!(
                "schema column '{}' not found in header",
                c.name
            )));
        }
    }
    for h in &raw.header {
        if !schema.columns.iter().any(|c| &c.name == h) {
            return Err(Error::HeaderMismatch(format!("header column '{h}' not in schema")));
        }
    }
    Ok(())
}

fn parse_number(cell: &str, row: usize, column: &str) -> Result<f64> {
    match cell.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::ParseNumber {
            row,
            column: column.to_string(),
            value: cell.to_string(),
        }),
    }
}

fn first_seen<'a>(values: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for v in values {
        if !out.iter().any(|o| o == v) {
            out.push(v.to_string());
        }
    }
    out
}

fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    Some(if values.len() % 2 == 1 {
        values[m]
    } else {
        0.5 * (values[m - 1] + values[m])
    })
}

/// Dense encoded dataset. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub n: usize,
    pub d: usize,
    /// Row-major `n × d`.
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub labeled: bool,
    pub feature_names: Vec<String>,
    /// Source (pre-encoding) column index of each encoded dimension.
    pub feature_sources: Vec<usize>,
    /// Dummy-indicator dimensions; only ever hold 0 or 1.
    pub binary_dims: Vec<bool>,
    pub label_kind: LabelKind,
    /// Class count for classification, 0 for regression.
    pub n_classes: usize,
    /// `(min, max)` of the original labels when they were min-max normalized.
    pub label_bounds: Option<(f64, f64)>,
    pub encoding: Option<Encoding>,
}

impl Dataset {
    /// Builds a dataset straight from numeric rows. Every dimension is treated
    /// as numeric and named `x0, x1, ...`.
    pub fn from_rows(rows: &[Vec<f64>], y: Vec<f64>, label_kind: LabelKind) -> Result<Self> {
        let n = rows.len();
        if y.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: y.len() });
        }
        let d = rows.first().map_or(0, Vec::len);
        let mut x = Vec::with_capacity(n * d);
        for r in rows {
            if r.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: r.len() });
            }
            x.extend_from_slice(r);
        }
        let n_classes = match label_kind {
            LabelKind::Real => 0,
            LabelKind::Class => {
                if y.iter().any(|v| *v < 0.0 || v.fract() != 0.0) {
                    return Err(Error::InvalidArgument(
                        "class labels must be non-negative integers".into(),
                    ));
                }
                y.iter().fold(0.0f64, |a, &b| a.max(b)) as usize + 1
            }
        };
        Ok(Dataset {
            n,
            d,
            x,
            y,
            labeled: true,
            feature_names: (0..d).map(|j| format!("x{j}")).collect(),
            feature_sources: (0..d).collect(),
            binary_dims: vec![false; d],
            label_kind,
            n_classes,
            label_bounds: None,
            encoding: None,
        })
    }

    /// Marks the given dimensions as binary dummy indicators.
    pub fn with_binary_dims(mut self, dims: &[usize]) -> Self {
        for &j in dims {
            self.binary_dims[j] = true;
        }
        self
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.d..(i + 1) * self.d]
    }

    #[inline]
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.x[i * self.d + j]
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Rows `indices` (duplicates allowed) as a new dataset with the same metadata.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let mut x = Vec::with_capacity(indices.len() * self.d);
        let mut y = Vec::with_capacity(indices.len());
        for &i in indices {
            x.extend_from_slice(self.row(i));
            y.push(self.y[i]);
        }
        Dataset {
            n: indices.len(),
            x,
            y,
            ..self.clone_meta()
        }
    }

    fn clone_meta(&self) -> Dataset {
        Dataset {
            n: 0,
            d: self.d,
            x: Vec::new(),
            y: Vec::new(),
            labeled: self.labeled,
            feature_names: self.feature_names.clone(),
            feature_sources: self.feature_sources.clone(),
            binary_dims: self.binary_dims.clone(),
            label_kind: self.label_kind,
            n_classes: self.n_classes,
            label_bounds: self.label_bounds,
            encoding: self.encoding.clone(),
        }
    }

    /// Original-scale labels (undoes min-max normalization if applied).
    pub fn original_labels(&self) -> Vec<f64> {
        match self.label_bounds {
            Some(b) => self.y.iter().map(|&v| denormalize(v, b)).collect(),
            None => self.y.clone(),
        }
    }

    /// Source column name for each encoded dimension.
    pub fn source_names(&self) -> Vec<String> {
        match &self.encoding {
            Some(enc) => self
                .feature_sources
                .iter()
                .map(|&s| enc.columns[s].name().to_string())
                .collect(),
            None => self.feature_names.clone(),
        }
    }
}

/// Parses `path` against `schema`, fitting a fresh encoding on its rows.
pub fn load_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<Dataset> {
    let raw = RawTable::from_path(path)?;
    encode_categoricals(&raw, schema)
}

/// Fits an [`Encoding`] on `raw` and applies it: every categorical column
/// with `c` categories becomes `c + 1` indicator dimensions (one per
/// category plus a missing flag); numeric gaps take the column median.
pub fn encode_categoricals(raw: &RawTable, schema: &Schema) -> Result<Dataset> {
    let enc = Encoding::fit(raw, schema)?;
    enc.encode(raw, EncodeOptions::default())
}

/// Scales real labels to `[0, 1]` and records the bounds.
pub fn minmax_normalize_labels(ds: &Dataset) -> Result<Dataset> {
    if ds.label_kind != LabelKind::Real {
        return Err(Error::UnsupportedTask(
            "min-max normalization applies to real labels only".into(),
        ));
    }
    if ds.n == 0 {
        return Err(Error::InvalidArgument("empty dataset".into()));
    }
    let (lo, hi) = ds
        .y
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if hi <= lo {
        return Err(Error::ConstantLabels);
    }
    let mut out = ds.clone();
    out.y = ds.y.iter().map(|&v| (v - lo) / (hi - lo)).collect();
    out.label_bounds = Some((lo, hi));
    Ok(out)
}

#[inline]
pub fn denormalize(v: f64, (lo, hi): (f64, f64)) -> f64 {
    lo + v * (hi - lo)
}

/// Exact rational train fraction `num / den`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitRatio {
    num: u64,
    den: u64,
}

impl SplitRatio {
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if den == 0 || num == 0 || num >= den {
            return Err(Error::InvalidArgument(format!(
                "split ratio {num}/{den} must lie strictly between 0 and 1"
            )));
        }
        Ok(SplitRatio { num, den })
    }

    /// The 2:1 train/test split.
    pub fn two_thirds() -> Self {
        SplitRatio { num: 2, den: 3 }
    }

    /// `⌈n · ratio⌉`.
    pub fn train_size(&self, n: usize) -> usize {
        ((n as u64 * self.num).div_ceil(self.den)) as usize
    }
}

/// Uniform (unstratified) random split; each side keeps original row order.
pub fn split_train_test(ds: &Dataset, ratio: SplitRatio, seed: u64) -> Result<(Dataset, Dataset)> {
    let (train_idx, test_idx) = split_indices(ds.n, ratio, seed)?;
    Ok((ds.subset(&train_idx), ds.subset(&test_idx)))
}

/// Index-level form of [`split_train_test`].
pub fn split_indices(n: usize, ratio: SplitRatio, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 instances to split, got {n}"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng_for(seed, SPLIT_STREAM));
    let cut = ratio.train_size(n);
    let mut train = idx[..cut].to_vec();
    let mut test = idx[cut..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table(csv: &str) -> RawTable {
        RawTable::from_reader(csv.as_bytes()).unwrap()
    }

    #[test]
    fn schema_parse_and_round_trip() {
        let text = "# comment\nlabel_task,real\nage,numeric\nblood,categorical,A|B|O|AB\ny,label\n";
        let s = Schema::parse(text).unwrap();
        assert_eq!(s.label_kind, LabelKind::Real);
        assert_eq!(s.columns.len(), 3);
        assert_eq!(s.columns[1].categories, ["A", "B", "O", "AB"]);
        assert_eq!(Schema::parse(&s.to_text()).unwrap(), s);
    }

    #[test]
    fn awkward_schema_names_round_trip() {
        let text = "label_task,class\n\"#tag\",numeric\n\"a,b\",categorical,\"x\"\"|y\"\ny,label\n";
        let s = Schema::parse(text).unwrap();
        assert_eq!(s.columns[0].name, "#tag");
        assert_eq!(s.columns[1].categories, ["x\"", "y"]);
        assert_eq!(Schema::parse(&s.to_text()).unwrap(), s);
    }

    #[test]
    fn schema_rejects_bad_input() {
        assert!(Schema::parse("age,numeric\n").is_err());
        assert!(Schema::parse("label_task,ordinal\n").is_err());
        assert!(Schema::parse("label_task,real\nage,numeric\n").is_err());
        assert!(Schema::parse("label_task,real\na,label\nb,label\n").is_err());
        assert!(Schema::parse("label_task,real\na,categorical,x|x\ny,label\n").is_err());
        assert!(Schema::parse("label_task,real\na,weird\ny,label\n").is_err());
    }

    #[test]
    fn three_row_numeric_csv() {
        let schema = Schema::parse("label_task,real\nx,numeric\ny,label\n").unwrap();
        let ds = encode_categoricals(&table("x,y\n1,2\n3,4\n5,6\n"), &schema).unwrap();
        assert_eq!((ds.n, ds.d), (3, 1));
        assert_eq!(ds.x, [1.0, 3.0, 5.0]);
        assert_eq!(ds.y, [2.0, 4.0, 6.0]);
    }

    #[test]
    fn categorical_dummy_width_is_categories_plus_one() {
        let schema = Schema::parse("label_task,real\nc,categorical\ny,label\n").unwrap();
        let ds = encode_categoricals(&table("c,y\nu,1\nv,2\n,3\n"), &schema).unwrap();
        assert_eq!(ds.d, 3);
        assert_eq!(ds.row(0), [1.0, 0.0, 0.0]);
        assert_eq!(ds.row(1), [0.0, 1.0, 0.0]);
        assert_eq!(ds.row(2), [0.0, 0.0, 1.0]);
        assert_eq!(ds.feature_names, ["c=u", "c=v", "c:missing"]);
        assert!(ds.binary_dims.iter().all(|&b| b));
    }

    #[test]
    fn blood_type_dummies() {
        let schema =
            Schema::parse("label_task,real\nblood,categorical,A|B|O|AB\ny,label\n").unwrap();
        let ds = encode_categoricals(&table("blood,y\nAB,1\n?,0\n"), &schema).unwrap();
        assert_eq!(ds.row(0), [0.0, 0.0, 0.0, 1.0, 0.0]);
        assert_eq!(ds.row(1), [0.0, 0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn numeric_missing_takes_training_median() {
        let schema = Schema::parse("label_task,real\nx,numeric\ny,label\n").unwrap();
        let train = table("x,y\n1,0\n,0\n10,0\n4,0\n");
        let enc = Encoding::fit(&train, &schema).unwrap();
        assert_eq!(enc.columns[0], ColumnEncoding::Numeric { name: "x".into(), median: 4.0 });
        let test = enc.encode(&table("x,y\n?,1\n"), EncodeOptions::default()).unwrap();
        assert_eq!(test.x, [4.0]);
    }

    #[test]
    fn parse_error_names_row_and_column() {
        let schema = Schema::parse("label_task,real\nx,numeric\ny,label\n").unwrap();
        let err = encode_categoricals(&table("x,y\n1,2\nabc,4\n"), &schema).unwrap_err();
        match err {
            Error::ParseNumber { row, column, value } => {
                assert_eq!((row, column.as_str(), value.as_str()), (2, "x", "abc"));
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn header_mismatch_and_ragged_rows() {
        let schema = Schema::parse("label_task,real\nx,numeric\ny,label\n").unwrap();
        assert!(matches!(
            encode_categoricals(&table("z,y\n1,2\n"), &schema),
            Err(Error::HeaderMismatch(_))
        ));
        assert!(RawTable::from_reader("x,y\n1,2\n3\n".as_bytes()).is_err());
    }

    #[test]
    fn unseen_category_maps_to_missing_unless_strict() {
        let schema = Schema::parse("label_task,class\nc,categorical\ny,label\n").unwrap();
        let enc = Encoding::fit(&table("c,y\nu,a\nv,b\n"), &schema).unwrap();
        let test = table("c,y\nw,a\n");
        let ds = enc.encode(&test, EncodeOptions::default()).unwrap();
        assert_eq!(ds.row(0), [0.0, 0.0, 1.0]);
        let err = enc.encode(&test, EncodeOptions { strict: true }).unwrap_err();
        assert!(matches!(err, Error::UnknownCategory { row: 1, .. }));
    }

    #[test]
    fn class_labels_first_seen_order() {
        let schema = Schema::parse("label_task,class\nx,numeric\ny,label\n").unwrap();
        let ds = encode_categoricals(&table("x,y\n0,yes\n1,no\n2,yes\n"), &schema).unwrap();
        assert_eq!(ds.y, [0.0, 1.0, 0.0]);
        assert_eq!(ds.n_classes, 2);
        assert_eq!(ds.encoding.unwrap().classes, ["yes", "no"]);
    }

    #[test]
    fn empty_category_set_is_an_error() {
        let schema = Schema::parse("label_task,real\nc,categorical\ny,label\n").unwrap();
        assert!(matches!(
            encode_categoricals(&table("c,y\n,1\n?,2\n"), &schema),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn minmax_examples() {
        for (y, want) in [
            (vec![0.0, 5.0, 10.0], vec![0.0, 0.5, 1.0]),
            (vec![-1.0, 0.0, 1.0], vec![0.0, 0.5, 1.0]),
        ] {
            let rows = vec![vec![0.0]; 3];
            let ds = Dataset::from_rows(&rows, y.clone(), LabelKind::Real).unwrap();
            let norm = minmax_normalize_labels(&ds).unwrap();
            assert_eq!(norm.y, want);
            assert_eq!(norm.label_bounds, Some((y[0], y[2])));
        }
        let ds = Dataset::from_rows(&vec![vec![0.0]; 3], vec![3.0; 3], LabelKind::Real).unwrap();
        assert!(matches!(minmax_normalize_labels(&ds), Err(Error::ConstantLabels)));
    }

    #[test]
    fn split_sizes_and_determinism() {
        let rows: Vec<Vec<f64>> = (0..9).map(|i| vec![i as f64]).collect();
        let ds = Dataset::from_rows(&rows, vec![0.0; 9], LabelKind::Real).unwrap();
        let r = SplitRatio::new(2, 3).unwrap();
        let (a, b) = split_train_test(&ds, r, 7).unwrap();
        assert_eq!((a.n, b.n), (6, 3));
        let (a2, b2) = split_train_test(&ds, r, 7).unwrap();
        assert_eq!((a.x, b.x), (a2.x, b2.x));
        let one = Dataset::from_rows(&[vec![0.0]], vec![0.0], LabelKind::Real).unwrap();
        assert!(split_train_test(&one, r, 7).is_err());
        assert!(SplitRatio::new(3, 3).is_err());
    }

    proptest! {
        #[test]
        fn split_partitions_index_set(n in 2usize..300, num in 1u64..9, seed in any::<u64>()) {
            let ratio = SplitRatio::new(num, 10).unwrap();
            let (train, test) = split_indices(n, ratio, seed).unwrap();
            prop_assert_eq!(train.len(), ratio.train_size(n));
            let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        }

        #[test]
        fn normalization_inverts(y in proptest::collection::vec(-1e6f64..1e6, 2..50)) {
            let rows = vec![vec![0.0]; y.len()];
            let ds = Dataset::from_rows(&rows, y.clone(), LabelKind::Real).unwrap();
            prop_assume!(y.iter().any(|v| *v != y[0]));
            let norm = minmax_normalize_labels(&ds).unwrap();
            for (orig, back) in y.iter().zip(norm.original_labels()) {
                prop_assert!(norm.y.iter().all(|v| (0.0..=1.0).contains(v)));
                // Rounding error scales with the label range, not the value.
                let range = norm.label_bounds.map_or(1.0, |(lo, hi)| hi - lo);
                prop_assert!((orig - back).abs() <= 1e-12 * range.max(1.0));
            }
        }

        #[test]
        fn exactly_one_hot_per_categorical(cells in proptest::collection::vec(0usize..5, 1..40)) {
            let names = ["A", "B", "O", "AB", "?"];
            let mut csv = String::from("c,y\n");
            for c in &cells {
                csv.push_str(&format!("{},1\n", names[*c]));
            }
            let schema = Schema::parse("label_task,real\nc,categorical,A|B|O|AB\ny,label\n").unwrap();
            let ds = encode_categoricals(&table(&csv), &schema).unwrap();
            for i in 0..ds.n {
                let row = ds.row(i);
                prop_assert_eq!(row.iter().filter(|v| **v == 1.0).count(), 1);
                prop_assert!(row.iter().all(|v| *v == 0.0 || *v == 1.0));
            }
        }
    }
}
