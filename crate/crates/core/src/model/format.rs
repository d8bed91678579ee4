//! Line-oriented sectioned text shared by the model file formats.
//!
//! ```text
//! format <magic> <version>
//! [section]
//! key value value ...
//! # comment lines are ignored
//! [end]
//! ```
//!
//! Values are whitespace-separated tokens: percent-escaped strings, decimal
//! integers, or exact hex floats.

use std::fmt::Write as _;

use crate::data::{ColumnEncoding, Encoding, LabelKind};
use crate::error::{Error, Result};
use crate::glm::{GlmModel, GlmTask, LinearScore};
use crate::numfmt::{escape_token, hexf, parse_hexf, sig6, unescape_token};
use crate::patterns::{Condition, Op, Pattern};

pub(crate) struct Writer {
    out: String,
}

impl Writer {
    pub fn new(magic: &str, version: u32) -> Self {
        Writer { out: format!("format {magic} {version}\n") }
    }

    pub fn section(&mut self, name: &str) {
        let _ = writeln!(self.out, "[{name}]");
    }

    pub fn line(&mut self, key: &str, values: &[String]) {
        self.out.push_str(key);
        for v in values {
            self.out.push(' ');
            self.out.push_str(v);
        }
        self.out.push('\n');
    }

    pub fn comment(&mut self, text: &str) {
        for l in text.lines() {
            let _ = writeln!(self.out, "# {l}");
        }
    }

    pub fn finish(mut self) -> String {
        self.section("end");
        self.out
    }
}

pub(crate) fn esc(s: &str) -> String {
    escape_token(s)
}

pub(crate) fn hex(v: f64) -> String {
    hexf(v)
}

/// Cursor over the meaningful lines of a model file.
pub(crate) struct Reader<'a> {
    lines: Vec<&'a str>,
    pos: usize,
    section: String,
}

impl<'a> Reader<'a> {
    /// Checks the `format` line; versions above `supported` are rejected
    /// explicitly.
    pub fn new(text: &'a str, magic: &str, supported: u32) -> Result<Self> {
        let lines: Vec<&str> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect();
        let mut r = Reader { lines, pos: 0, section: "header".into() };
        let head = r.next_line()?;
        let tokens: Vec<&str> = head.split_whitespace().collect();
        match tokens.as_slice() {
            ["format", m, v] if *m == magic => {
                let version: u32 =
                    v.parse().map_err(|_| r.err(format!("bad version '{v}'")))?;
                if version > supported {
                    return Err(Error::UnsupportedVersion { found: version, supported });
                }
                if version == 0 {
                    return Err(r.err("bad version '0'"));
                }
            }
            _ => return Err(r.err(format!("expected `format {magic} <version>`"))),
        }
        Ok(r)
    }

    pub fn err(&self, msg: impl Into<String>) -> Error {
        Error::format(&self.section, msg)
    }

    fn next_line(&mut self) -> Result<&'a str> {
        let l = self
            .lines
            .get(self.pos)
            .copied()
            .ok_or_else(|| self.err("unexpected end of file"))?;
        self.pos += 1;
        Ok(l)
    }

    fn peek(&self) -> Option<&'a str> {
        self.lines.get(self.pos).copied()
    }

    pub fn expect_section(&mut self, name: &str) -> Result<()> {
        self.section = name.to_string();
        let want = format!("[{name}]");
        match self.lines.get(self.pos) {
            Some(l) if *l == want => {
                self.pos += 1;
                Ok(())
            }
            Some(l) => Err(self.err(format!("expected section header, found '{l}'"))),
            None => Err(self.err("section missing (file truncated?)")),
        }
    }

    /// Next line, which must start with `key`; returns its value tokens.
    pub fn expect(&mut self, key: &str) -> Result<Vec<&'a str>> {
        let l = self.next_line().map_err(|_| self.err(format!("missing '{key}' (file truncated?)")))?;
        let mut tokens = l.split_whitespace();
        match tokens.next() {
            Some(k) if k == key => Ok(tokens.collect()),
            _ => Err(self.err(format!("expected '{key}', found '{l}'"))),
        }
    }

    /// Next line as `(key, values)`.
    pub fn entry(&mut self) -> Result<(&'a str, Vec<&'a str>)> {
        let l = self.next_line()?;
        let mut tokens = l.split_whitespace();
        let key = tokens.next().unwrap_or_default();
        Ok((key, tokens.collect()))
    }

    pub fn one<'b>(&self, key: &str, values: &[&'b str]) -> Result<&'b str> {
        match values {
            [v] => Ok(v),
            _ => Err(self.err(format!("'{key}' takes exactly one value"))),
        }
    }

    pub fn usize(&self, key: &str, v: &str) -> Result<usize> {
        v.parse().map_err(|_| self.err(format!("'{key}': bad integer '{v}'")))
    }

    pub fn u64(&self, key: &str, v: &str) -> Result<u64> {
        v.parse().map_err(|_| self.err(format!("'{key}': bad integer '{v}'")))
    }

    pub fn float(&self, key: &str, v: &str) -> Result<f64> {
        parse_hexf(v).ok_or_else(|| self.err(format!("'{key}': bad hex float '{v}'")))
    }

    pub fn finite(&self, key: &str, v: &str) -> Result<f64> {
        let x = self.float(key, v)?;
        if !x.is_finite() {
            return Err(self.err(format!("'{key}': non-finite value")));
        }
        Ok(x)
    }

    pub fn string(&self, key: &str, v: &str) -> Result<String> {
        unescape_token(v).ok_or_else(|| self.err(format!("'{key}': bad token '{v}'")))
    }

    pub fn usize_of(&mut self, key: &str) -> Result<usize> {
        let v = self.expect(key)?;
        let v = self.one(key, &v)?;
        self.usize(key, v)
    }

    pub fn word_of(&mut self, key: &str) -> Result<&'a str> {
        let v = self.expect(key)?;
        self.one(key, &v)
    }

    pub fn finish(mut self) -> Result<()> {
        self.expect_section("end")?;
        if let Some(l) = self.peek() {
            return Err(self.err(format!("trailing content '{l}'")));
        }
        Ok(())
    }
}

/// Feature layout: names (always) and the encoding when present.
pub(crate) fn write_schema(
    w: &mut Writer,
    feature_names: &[String],
    encoding: Option<&Encoding>,
    label_bounds: Option<(f64, f64)>,
) {
    w.section("schema");
    w.line("feature_dim", &[feature_names.len().to_string()]);
    w.line("feature_names", &feature_names.iter().map(|n| esc(n)).collect::<Vec<_>>());
    match label_bounds {
        Some((lo, hi)) => w.line("label_bounds", &[hex(lo), hex(hi)]),
        None => w.line("label_bounds", &["none".into()]),
    }
    match encoding {
        None => w.line("encoding", &["none".into()]),
        Some(enc) => {
            w.line("encoding", &[enc.columns.len().to_string()]);
            w.line("label", &[enc.label_kind.as_str().into(), esc(&enc.label_name)]);
            w.line("classes", &enc.classes.iter().map(|c| esc(c)).collect::<Vec<_>>());
            for col in &enc.columns {
                match col {
                    ColumnEncoding::Numeric { name, median } => {
                        w.line("numeric", &[esc(name), hex(*median)])
                    }
                    ColumnEncoding::Categorical { name, categories } => {
                        let mut v = vec![esc(name)];
                        v.extend(categories.iter().map(|c| esc(c)));
                        w.line("categorical", &v)
                    }
                }
            }
        }
    }
}

pub(crate) struct SchemaBlock {
    pub feature_names: Vec<String>,
    pub label_bounds: Option<(f64, f64)>,
    pub encoding: Option<Encoding>,
}

pub(crate) fn read_schema(r: &mut Reader) -> Result<SchemaBlock> {
    r.expect_section("schema")?;
    let d = r.usize_of("feature_dim")?;
    let names = r.expect("feature_names")?;
    if names.len() != d {
        return Err(r.err(format!("feature_names has {} entries, expected {d}", names.len())));
    }
    let feature_names =
        names.iter().map(|n| r.string("feature_names", n)).collect::<Result<Vec<_>>>()?;
    let lb = r.expect("label_bounds")?;
    let label_bounds = match lb.as_slice() {
        ["none"] => None,
        [lo, hi] => {
            let (lo, hi) = (r.finite("label_bounds", lo)?, r.finite("label_bounds", hi)?);
            if !(hi > lo) {
                return Err(r.err("label_bounds must satisfy min < max"));
            }
            Some((lo, hi))
        }
        _ => return Err(r.err("'label_bounds' takes `none` or two values")),
    };
    let enc = r.word_of("encoding")?;
    let encoding = if enc == "none" {
        None
    } else {
        let n_cols = r.usize("encoding", enc)?;
        let label = r.expect("label")?;
        let (kind, name) = match label.as_slice() {
            [k, n] => (
                LabelKind::parse(k).ok_or_else(|| r.err(format!("unknown label kind '{k}'")))?,
                r.string("label", n)?,
            ),
            _ => return Err(r.err("'label' takes a kind and a name")),
        };
        let classes = r
            .expect("classes")?
            .iter()
            .map(|c| r.string("classes", c))
            .collect::<Result<Vec<_>>>()?;
        let mut columns = Vec::with_capacity(n_cols.min(1 << 16));
        for _ in 0..n_cols {
            let (key, vals) = r.entry()?;
            let col = match (key, vals.as_slice()) {
                ("numeric", [n, m]) => ColumnEncoding::Numeric {
                    name: r.string(key, n)?,
                    median: r.finite(key, m)?,
                },
                ("categorical", [n, cats @ ..]) if !cats.is_empty() => ColumnEncoding::Categorical {
                    name: r.string(key, n)?,
                    categories: cats.iter().map(|c| r.string(key, c)).collect::<Result<_>>()?,
                },
                _ => return Err(r.err(format!("bad column entry '{key}'"))),
            };
            columns.push(col);
        }
        let encoding = Encoding { label_kind: kind, label_name: name, classes, columns };
        if encoding.layout().0 != feature_names {
            return Err(r.err("encoding layout does not match feature_names"));
        }
        Some(encoding)
    };
    Ok(SchemaBlock { feature_names, label_bounds, encoding })
}

/// Human rendering as comments plus one machine line per pattern.
pub(crate) fn write_patterns(w: &mut Writer, section: &str, patterns: &[Pattern], names: &[String]) {
    w.section(section);
    w.line("count", &[patterns.len().to_string()]);
    for p in patterns {
        w.comment(&p.render(names));
        let mut v = Vec::with_capacity(4 * p.len());
        for (i, c) in p.conditions.iter().enumerate() {
            if i > 0 {
                v.push(";".into());
            }
            v.push(c.dim.to_string());
            v.push(c.op.keyword().into());
            v.push(hex(c.threshold));
        }
        w.line("p", &v);
    }
}

pub(crate) fn read_patterns(r: &mut Reader, section: &str, d: usize) -> Result<Vec<Pattern>> {
    r.expect_section(section)?;
    let count = r.usize_of("count")?;
    let mut out = Vec::with_capacity(count.min(1 << 16));
    for _ in 0..count {
        let tokens = r.expect("p")?;
        let mut conditions = Vec::new();
        for chunk in tokens.split(|t| *t == ";") {
            let [dim, op, thr] = chunk else {
                return Err(r.err("condition must be `<dim> <lt|ge> <threshold>`"));
            };
            let dim = r.usize("p", dim)?;
            if dim >= d {
                return Err(r.err(format!("condition dimension {dim} out of range (d = {d})")));
            }
            let op = Op::from_keyword(op).ok_or_else(|| r.err(format!("unknown operator '{op}'")))?;
            let thr = r.float("p", thr)?;
            if thr.is_nan() {
                return Err(r.err("threshold is NaN"));
            }
            conditions.push(Condition::new(dim, op, thr));
        }
        if conditions.is_empty() {
            return Err(r.err("pattern without conditions"));
        }
        out.push(Pattern::new(conditions));
    }
    Ok(out)
}

pub(crate) fn write_glm(w: &mut Writer, section: &str, m: &GlmModel) {
    w.section(section);
    w.line("task", &[m.task.as_str().into()]);
    w.line("n_classes", &[m.n_classes.to_string()]);
    w.line("dim", &[m.dim().to_string()]);
    w.line("scores", &[m.scores.len().to_string()]);
    for s in &m.scores {
        let readable: Vec<String> = s.weights.iter().map(|v| sig6(*v)).collect();
        w.comment(&format!("intercept {} weights {}", sig6(s.intercept), readable.join(" ")));
        let mut v = vec![hex(s.intercept)];
        v.extend(s.weights.iter().map(|x| hex(*x)));
        w.line("score", &v);
    }
}

pub(crate) fn read_glm(r: &mut Reader, section: &str) -> Result<GlmModel> {
    r.expect_section(section)?;
    let task = r.word_of("task")?;
    let task = GlmTask::parse(task).ok_or_else(|| r.err(format!("unknown task '{task}'")))?;
    let n_classes = r.usize_of("n_classes")?;
    let dim = r.usize_of("dim")?;
    let n_scores = r.usize_of("scores")?;
    let expected = match task {
        GlmTask::Linear => 1,
        GlmTask::Logistic if n_classes == 2 => 1,
        GlmTask::Logistic if n_classes > 2 => n_classes,
        GlmTask::Logistic => return Err(r.err("logistic model needs at least 2 classes")),
    };
    if n_scores != expected {
        return Err(r.err(format!("expected {expected} scores, found {n_scores}")));
    }
    let mut scores = Vec::with_capacity(n_scores);
    for _ in 0..n_scores {
        let v = r.expect("score")?;
        if v.len() != dim + 1 {
            return Err(r.err(format!("score has {} values, expected {}", v.len(), dim + 1)));
        }
        let vals = v.iter().map(|t| r.finite("score", t)).collect::<Result<Vec<_>>>()?;
        scores.push(LinearScore { intercept: vals[0], weights: vals[1..].to_vec() });
    }
    Ok(GlmModel { task, n_classes, scores })
}
