//! Seeded synthetic data: the medical diagnosis dataset with three known
//! rules, and a regression dataset whose instances come from latent subtypes
//! with different generating rules.

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::data::{Dataset, EncodeOptions, Encoding, RawTable, Schema};
use crate::error::{Error, Result};
use crate::patterns::{Condition, Op, Pattern};
use crate::seed::rng_for;

const TRAIN_STREAM: u64 = 1;
const TEST_STREAM: u64 = 2;
const NOISE_STREAM: u64 = 3;

pub const GENDERS: [&str; 2] = ["male", "female"];
pub const BLOOD_TYPES: [&str; 4] = ["A", "B", "O", "AB"];
pub const MAX_AGE: u32 = 60;

// Encoded layout of the medical data, fixed by the declared schema order.
const DIM_AGE: usize = 0;
const DIM_MALE: usize = 1;
const DIM_FEMALE: usize = 2;
const DIM_GENDER_MISSING: usize = 3;
const DIM_BLOOD_A: usize = 4;
const DIM_BLOOD_O: usize = 6;
const DIM_BLOOD_AB: usize = 7;
const DIM_BLOOD_MISSING: usize = 8;
const DIM_LT2: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub n_train: usize,
    pub n_test: usize,
    /// Fraction of training labels flipped.
    pub noise_rate: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig { n_train: 100_000, n_test: 50_000, noise_rate: 0.001, seed: 0 }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..0.5).contains(&self.noise_rate) {
            return Err(Error::InvalidArgument(format!(
                "noise rate must lie in [0, 0.5), got {}",
                self.noise_rate
            )));
        }
        if self.n_train == 0 {
            return Err(Error::InvalidArgument("n_train must be positive".into()));
        }
        Ok(())
    }

    /// Number of flipped training labels: `floor(noise_rate * n_train)`.
    pub fn flip_count(&self) -> usize {
        (self.noise_rate * self.n_train as f64).floor() as usize
    }
}

/// Generated train/test data with the raw tables and schema behind it.
#[derive(Debug, Clone)]
pub struct SynthData {
    pub schema: Schema,
    pub train_raw: RawTable,
    pub test_raw: RawTable,
    pub train: Dataset,
    pub test: Dataset,
}

impl SynthData {
    fn encode(schema: Schema, train_raw: RawTable, test_raw: RawTable) -> Result<Self> {
        let enc = Encoding::fit(&train_raw, &schema)?;
        let opts = EncodeOptions { strict: true };
        let train = enc.encode(&train_raw, opts)?;
        let test = enc.encode(&test_raw, opts)?;
        Ok(SynthData { schema, train_raw, test_raw, train, test })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Patient {
    pub age: u32,
    pub male: bool,
    /// Index into [`BLOOD_TYPES`].
    pub blood: usize,
    pub lt2: f64,
}

impl Patient {
    fn random<R: Rng>(rng: &mut R) -> Self {
        Patient {
            age: rng.gen_range(1..=MAX_AGE),
            male: rng.gen_bool(0.5),
            blood: rng.gen_range(0..BLOOD_TYPES.len()),
            lt2: rng.gen::<f64>(),
        }
    }
}

/// The three diagnosis rules.
pub fn medical_label(p: &Patient) -> bool {
    let blood = BLOOD_TYPES[p.blood];
    (p.age > 18 && p.male && blood == "AB" && p.lt2 >= 0.6)
        || (p.age > 18 && !p.male && blood == "O" && p.lt2 >= 0.5)
        || (p.age <= 18 && p.lt2 >= 0.9)
}

pub fn medical_schema() -> Schema {
    Schema::parse(
        "label_task,class\n\
         age,numeric\n\
         gender,categorical,male|female\n\
         lt1,categorical,A|B|O|AB\n\
         lt2,numeric\n\
         y,label,0|1\n",
    )
    .expect("static schema is valid")
}

fn medical_table(patients: &[Patient], labels: &[bool]) -> RawTable {
    RawTable {
        header: ["age", "gender", "lt1", "lt2", "y"].map(String::from).to_vec(),
        rows: patients
            .iter()
            .zip(labels)
            .map(|(p, &y)| {
                vec![
                    Some(p.age.to_string()),
                    Some(GENDERS[!p.male as usize].to_string()),
                    Some(BLOOD_TYPES[p.blood].to_string()),
                    Some(format!("{}", p.lt2)),
                    Some((y as u8).to_string()),
                ]
            })
            .collect(),
    }
}

/// Medical data plus the generating patients and flipped indices.
#[derive(Debug, Clone)]
pub struct MedicalData {
    pub data: SynthData,
    pub train_patients: Vec<Patient>,
    pub test_patients: Vec<Patient>,
    /// Training rows whose label was flipped, ascending.
    pub flipped: Vec<usize>,
    /// Ground-truth rules over the encoded feature space.
    pub rules: Vec<Pattern>,
}

/// Draws the medical dataset. Noise flips exactly
/// `floor(noise_rate * n_train)` distinct training labels; test labels are
/// noise-free.
pub fn generate_medical(cfg: &SynthConfig) -> Result<MedicalData> {
    cfg.validate()?;
    let mut rng = rng_for(cfg.seed, TRAIN_STREAM);
    let train_patients: Vec<Patient> = (0..cfg.n_train).map(|_| Patient::random(&mut rng)).collect();
    let mut rng = rng_for(cfg.seed, TEST_STREAM);
    let test_patients: Vec<Patient> = (0..cfg.n_test).map(|_| Patient::random(&mut rng)).collect();

    let mut train_labels: Vec<bool> = train_patients.iter().map(medical_label).collect();
    let mut flipped = sample(&mut rng_for(cfg.seed, NOISE_STREAM), cfg.n_train, cfg.flip_count()).into_vec();
    flipped.sort_unstable();
    for &i in &flipped {
        train_labels[i] = !train_labels[i];
    }
    let test_labels: Vec<bool> = test_patients.iter().map(medical_label).collect();

    let data = SynthData::encode(
        medical_schema(),
        medical_table(&train_patients, &train_labels),
        medical_table(&test_patients, &test_labels),
    )?;
    Ok(MedicalData { data, train_patients, test_patients, flipped, rules: medical_rules() })
}

/// The three rules as patterns over the encoded layout; integer ages make
/// `A > 18` and `A >= 18.5` the same condition.
pub fn medical_rules() -> Vec<Pattern> {
    let ge = |d, t| Condition::new(d, Op::Ge, t);
    vec![
        Pattern::new(vec![ge(DIM_AGE, 18.5), ge(DIM_MALE, 0.5), ge(DIM_BLOOD_AB, 0.5), ge(DIM_LT2, 0.6)]),
        Pattern::new(vec![ge(DIM_AGE, 18.5), ge(DIM_FEMALE, 0.5), ge(DIM_BLOOD_O, 0.5), ge(DIM_LT2, 0.5)]),
        Pattern::new(vec![Condition::new(DIM_AGE, Op::Lt, 18.5), ge(DIM_LT2, 0.9)]),
    ]
}

/// What a pattern selects over the medical domain: the admitted integer
/// ages, genders and blood types, and the `[lo, hi)` LT2 interval.
#[derive(Debug, Clone, PartialEq)]
pub struct MedicalRegion {
    pub ages: Vec<u32>,
    pub genders: Vec<&'static str>,
    pub blood_types: Vec<&'static str>,
    pub lt2: (f64, f64),
}

pub fn medical_region(p: &Pattern) -> MedicalRegion {
    let holds_on = |dims: std::ops::Range<usize>, x: &[f64]| {
        p.conditions.iter().filter(|c| dims.contains(&c.dim)).all(|c| c.holds(x))
    };
    let mut x = vec![0.0; DIM_LT2 + 1];
    let ages = (1..=MAX_AGE)
        .filter(|&a| {
            x[DIM_AGE] = a as f64;
            holds_on(DIM_AGE..DIM_AGE + 1, &x)
        })
        .collect();
    let genders = GENDERS
        .iter()
        .enumerate()
        .filter(|&(g, _)| {
            x[DIM_MALE..=DIM_GENDER_MISSING].fill(0.0);
            x[DIM_MALE + g] = 1.0;
            holds_on(DIM_MALE..DIM_GENDER_MISSING + 1, &x)
        })
        .map(|(_, s)| *s)
        .collect();
    let blood_types = BLOOD_TYPES
        .iter()
        .enumerate()
        .filter(|&(b, _)| {
            x[DIM_BLOOD_A..=DIM_BLOOD_MISSING].fill(0.0);
            x[DIM_BLOOD_A + b] = 1.0;
            holds_on(DIM_BLOOD_A..DIM_BLOOD_MISSING + 1, &x)
        })
        .map(|(_, s)| *s)
        .collect();
    let mut lt2 = (f64::NEG_INFINITY, f64::INFINITY);
    for c in p.conditions.iter().filter(|c| c.dim == DIM_LT2) {
        match c.op {
            Op::Ge => lt2.0 = lt2.0.max(c.threshold),
            Op::Lt => lt2.1 = lt2.1.min(c.threshold),
        }
    }
    MedicalRegion { ages, genders, blood_types, lt2 }
}

/// True when `p` selects the same patients as `rule` up to an LT2 lower
/// bound within `tol`: identical age, gender and blood-type sets, and no LT2
/// upper bound inside the `[0, 1)` range.
pub fn matches_rule(p: &Pattern, rule: &Pattern, tol: f64) -> bool {
    let a = medical_region(p);
    let b = medical_region(rule);
    a.ages == b.ages
        && a.genders == b.genders
        && a.blood_types == b.blood_types
        && a.lt2.1 >= 1.0
        && (a.lt2.0.max(0.0) - b.lt2.0.max(0.0)).abs() <= tol
}

/// Per-subtype generating rule of the subtyped regression data. Every
/// subtype has the same two steps on the shared `signal` feature but at its
/// own cut points, plus its own intercept.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubtypeRule {
    /// Makes the subtype visible to globally mined patterns.
    pub base: f64,
    pub cut_low: f64,
    pub cut_high: f64,
}

impl SubtypeRule {
    pub const STEP_LOW: f64 = 1.5;
    pub const STEP_HIGH: f64 = -1.0;

    pub fn for_subtype(s: usize) -> Self {
        let shift = 0.1 * (s % 3) as f64;
        SubtypeRule { base: 3.0 * s as f64, cut_low: 0.2 + shift, cut_high: 0.6 + shift }
    }

    pub fn value(&self, signal: f64) -> f64 {
        let mut y = self.base;
        if signal >= self.cut_low {
            y += Self::STEP_LOW;
        }
        if signal >= self.cut_high {
            y += Self::STEP_HIGH;
        }
        y
    }
}

pub const SUBTYPE_NOISE_SD: f64 = 0.1;

/// Subtyped regression data and the hidden subtype of every row.
#[derive(Debug, Clone)]
pub struct SubtypedData {
    pub data: SynthData,
    pub train_subtypes: Vec<usize>,
    pub test_subtypes: Vec<usize>,
}

/// Each instance belongs to one of `g` hidden subtypes. Features are a
/// `marker_s` per subtype (high only for the instance's own subtype) and one
/// shared `signal`; the label follows the own subtype's rule on `signal`
/// plus Gaussian noise. The subtype id is not a feature.
pub fn generate_subtyped_regression(cfg: &SynthConfig, g: usize) -> Result<SubtypedData> {
    cfg.validate()?;
    if g == 0 {
        return Err(Error::InvalidArgument("subtype count must be at least 1".into()));
    }
    let schema = {
        let mut text = String::from("label_task,real\n");
        for s in 0..g {
            text.push_str(&format!("marker{s},numeric\n"));
        }
        text.push_str("signal,numeric\ny,label\n");
        Schema::parse(&text)?
    };
    let header: Vec<String> = schema.columns.iter().map(|c| c.name.clone()).collect();
    let noise = Normal::new(0.0, SUBTYPE_NOISE_SD).expect("valid sd");
    let draw = |stream: u64, n: usize| {
        let mut rng = rng_for(cfg.seed, stream);
        let mut rows = Vec::with_capacity(n);
        let mut subtypes = Vec::with_capacity(n);
        for _ in 0..n {
            let s = rng.gen_range(0..g);
            let mut row = Vec::with_capacity(g + 2);
            for t in 0..g {
                let marker: f64 = if t == s { rng.gen_range(0.6..1.0) } else { rng.gen_range(0.0..0.4) };
                row.push(Some(format!("{marker}")));
            }
            let signal: f64 = rng.gen();
            row.push(Some(format!("{signal}")));
            let y = SubtypeRule::for_subtype(s).value(signal) + noise.sample(&mut rng);
            row.push(Some(format!("{y}")));
            rows.push(row);
            subtypes.push(s);
        }
        (RawTable { header: header.clone(), rows }, subtypes)
    };
    let (train_raw, train_subtypes) = draw(TRAIN_STREAM, cfg.n_train);
    let (test_raw, test_subtypes) = draw(TEST_STREAM, cfg.n_test);
    let data = SynthData::encode(schema, train_raw, test_raw)?;
    Ok(SubtypedData { data, train_subtypes, test_subtypes })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SynthConfig {
        SynthConfig { n_train: 2000, n_test: 500, noise_rate: 0.01, seed: 11 }
    }

    #[test]
    fn rule_examples() {
        let p = Patient { age: 10, male: false, blood: 1, lt2: 0.95 };
        assert!(medical_label(&p));
        let p = Patient { age: 30, male: true, blood: 0, lt2: 0.99 };
        assert!(!medical_label(&p));
        let p = Patient { age: 19, male: true, blood: 3, lt2: 0.6 };
        assert!(medical_label(&p));
        let p = Patient { age: 18, male: true, blood: 3, lt2: 0.6 };
        assert!(!medical_label(&p));
        let p = Patient { age: 40, male: false, blood: 2, lt2: 0.5 };
        assert!(medical_label(&p));
    }

    #[test]
    fn encoded_layout_matches_rule_dims() {
        let d = generate_medical(&small()).unwrap().data.train;
        assert_eq!(
            d.feature_names,
            [
                "age", "gender=male", "gender=female", "gender:missing", "lt1=A", "lt1=B", "lt1=O",
                "lt1=AB", "lt1:missing", "lt2"
            ]
        );
    }

    #[test]
    fn labels_follow_rules_apart_from_flips() {
        let m = generate_medical(&small()).unwrap();
        assert_eq!(m.flipped.len(), 20);
        let ds = &m.data.train;
        let mut differing = Vec::new();
        for (i, p) in m.train_patients.iter().enumerate() {
            if (ds.y[i] == 1.0) != medical_label(p) {
                differing.push(i);
            }
            // Rules over the encoded row agree with the direct evaluation.
            let any = m.rules.iter().any(|r| r.holds(ds.row(i)));
            assert_eq!(any, medical_label(p));
        }
        assert_eq!(differing, m.flipped);
        for (i, p) in m.test_patients.iter().enumerate() {
            assert_eq!(m.data.test.y[i] == 1.0, medical_label(p));
        }
    }

    #[test]
    fn noise_free_generation_is_deterministic() {
        let cfg = SynthConfig { noise_rate: 0.0, ..small() };
        let a = generate_medical(&cfg).unwrap();
        let b = generate_medical(&cfg).unwrap();
        assert!(a.flipped.is_empty());
        assert_eq!(a.data.train, b.data.train);
        assert_eq!(a.data.test, b.data.test);
        for (i, p) in a.train_patients.iter().enumerate() {
            assert_eq!(a.data.train.y[i] == 1.0, medical_label(p));
        }
    }

    #[test]
    fn feature_ranges() {
        let m = generate_medical(&small()).unwrap();
        assert!(m.train_patients.iter().all(|p| (1..=60).contains(&p.age) && (0.0..1.0).contains(&p.lt2)));
    }

    #[test]
    fn rejects_bad_noise() {
        let cfg = SynthConfig { noise_rate: 0.5, ..small() };
        assert!(generate_medical(&cfg).is_err());
    }

    #[test]
    fn region_matching() {
        let rules = medical_rules();
        for r in &rules {
            assert!(matches_rule(r, r, 0.0));
        }
        // Paper-style recovered rule with a slightly different LT2 cut.
        let found = Pattern::new(vec![
            Condition::new(DIM_AGE, Op::Ge, 18.7),
            Condition::new(DIM_FEMALE, Op::Lt, 0.5),
            Condition::new(DIM_BLOOD_AB, Op::Ge, 0.5),
            Condition::new(DIM_LT2, Op::Ge, 0.601),
        ]);
        assert!(matches_rule(&found, &rules[0], 0.05));
        assert!(!matches_rule(&found, &rules[1], 0.05));
        let off = Pattern::new(vec![Condition::new(DIM_AGE, Op::Lt, 18.5), Condition::new(DIM_LT2, Op::Ge, 0.8)]);
        assert!(!matches_rule(&off, &rules[2], 0.05));
        let capped = Pattern::new(vec![
            Condition::new(DIM_AGE, Op::Lt, 18.5),
            Condition::new(DIM_LT2, Op::Ge, 0.9),
            Condition::new(DIM_LT2, Op::Lt, 0.95),
        ]);
        assert!(!matches_rule(&capped, &rules[2], 0.05));
    }

    #[test]
    fn subtyped_generation() {
        let s = generate_subtyped_regression(&small(), 3).unwrap();
        assert_eq!(s.data.train.d, 4);
        assert_eq!(s.train_subtypes.len(), 2000);
        for (i, &t) in s.train_subtypes.iter().enumerate() {
            let row = s.data.train.row(i);
            for u in 0..3 {
                let m = row[u];
                assert!(if u == t { m >= 0.6 } else { m < 0.4 });
            }
        }
        let again = generate_subtyped_regression(&small(), 3).unwrap();
        assert_eq!(s.data.train, again.data.train);
        let one = generate_subtyped_regression(&small(), 1).unwrap();
        assert!(one.train_subtypes.iter().all(|&t| t == 0));
    }

    /// Least squares with intercept via normal equations (test oracle).
    fn ols_mse(rows: &[Vec<f64>], y: &[f64]) -> f64 {
        let p = rows[0].len() + 1;
        let mut a = vec![vec![0.0; p + 1]; p];
        for (r, &t) in rows.iter().zip(y) {
            let x: Vec<f64> = std::iter::once(1.0).chain(r.iter().copied()).collect();
            for i in 0..p {
                for j in 0..p {
                    a[i][j] += x[i] * x[j];
                }
                a[i][p] += x[i] * t;
            }
        }
        for c in 0..p {
            let piv = (c..p).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
            a.swap(c, piv);
            for r in 0..p {
                if r != c {
                    let f = a[r][c] / a[c][c];
                    for k in c..=p {
                        a[r][k] -= f * a[c][k];
                    }
                }
            }
        }
        let beta: Vec<f64> = (0..p).map(|i| a[i][p] / a[i][i]).collect();
        rows.iter()
            .zip(y)
            .map(|(r, &t)| {
                let z = beta[0] + r.iter().zip(&beta[1..]).map(|(x, b)| x * b).sum::<f64>();
                (z - t).powi(2)
            })
            .sum::<f64>()
            / y.len() as f64
    }

    #[test]
    fn per_subtype_rules_beat_one_global_rule() {
        let s = generate_subtyped_regression(&small(), 2).unwrap();
        let ds = &s.data.train;
        let rows: Vec<Vec<f64>> = (0..ds.n).map(|i| ds.row(i).to_vec()).collect();
        let global = ols_mse(&rows, &ds.y);
        let mut per = 0.0;
        for t in 0..2 {
            let idx: Vec<usize> = (0..ds.n).filter(|&i| s.train_subtypes[i] == t).collect();
            let r: Vec<Vec<f64>> = idx.iter().map(|&i| rows[i].clone()).collect();
            let y: Vec<f64> = idx.iter().map(|&i| ds.y[i]).collect();
            per += ols_mse(&r, &y) * idx.len() as f64;
        }
        per /= ds.n as f64;
        assert!(per < global, "per-subtype {per} vs global {global}");
    }
}
