//! Conversion of a time series of measurements into fixed-width features.

use crate::error::{Error, Result};

/// Mean, first, last, max, min and population standard deviation of a
/// series, followed by the same six statistics of its rates of change
/// `(x[i+1] - x[i]) / (t[i+1] - t[i])`. The rate block is `None` for a
/// single measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LongitudinalFeatures {
    pub values: [f64; 6],
    pub rates: Option<[f64; 6]>,
}

pub const STAT_NAMES: [&str; 6] = ["mean", "first", "last", "max", "min", "std"];

impl LongitudinalFeatures {
    /// All 12 entries; missing rate statistics are `None`.
    pub fn to_vec(&self) -> Vec<Option<f64>> {
        let mut out: Vec<Option<f64>> = self.values.iter().copied().map(Some).collect();
        match self.rates {
            Some(r) => out.extend(r.iter().copied().map(Some)),
            None => out.extend([None; 6]),
        }
        out
    }

    /// Column names `<variable>_<stat>` then `<variable>_d_<stat>`.
    pub fn names(variable: &str) -> Vec<String> {
        STAT_NAMES
            .iter()
            .map(|s| format!("{variable}_{s}"))
            .chain(STAT_NAMES.iter().map(|s| format!("{variable}_d_{s}")))
            .collect()
    }
}

fn stats(v: &[f64]) -> [f64; 6] {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    [
        mean,
        v[0],
        v[v.len() - 1],
        v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        v.iter().copied().fold(f64::INFINITY, f64::min),
        var.sqrt(),
    ]
}

pub fn longitudinal_features(xs: &[f64], ts: &[f64]) -> Result<LongitudinalFeatures> {
    if xs.len() != ts.len() {
        return Err(Error::DimensionMismatch { expected: ts.len(), got: xs.len() });
    }
    if xs.is_empty() {
        return Err(Error::InvalidArgument("no measurements".into()));
    }
    if xs.iter().chain(ts).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("measurements and times must be finite".into()));
    }
    if ts.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("measurement times must be strictly increasing".into()));
    }
    let rates = if xs.len() > 1 {
        let d: Vec<f64> = xs
            .windows(2)
            .zip(ts.windows(2))
            .map(|(x, t)| (x[1] - x[0]) / (t[1] - t[0]))
            .collect();
        Some(stats(&d))
    } else {
        None
    };
    Ok(LongitudinalFeatures { values: stats(xs), rates })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_points() {
        let f = longitudinal_features(&[1.0, 3.0], &[0.0, 2.0]).unwrap();
        assert_eq!(f.values, [2.0, 1.0, 3.0, 3.0, 1.0, 1.0]);
        assert_eq!(f.rates, Some([1.0, 1.0, 1.0, 1.0, 1.0, 0.0]));
    }

    #[test]
    fn singleton_has_no_rates() {
        let f = longitudinal_features(&[5.0], &[0.0]).unwrap();
        assert_eq!(f.values, [5.0, 5.0, 5.0, 5.0, 5.0, 0.0]);
        assert_eq!(f.rates, None);
        let v = f.to_vec();
        assert_eq!(v.len(), 12);
        assert!(v[6..].iter().all(Option::is_none));
    }

    #[test]
    fn constant_series() {
        let f = longitudinal_features(&[4.0; 4], &[0.0, 1.0, 5.0, 6.0]).unwrap();
        assert_eq!(f.values[5], 0.0);
        assert_eq!(f.rates, Some([0.0; 6]));
    }

    #[test]
    fn rejects_bad_times() {
        assert!(longitudinal_features(&[1.0, 2.0], &[1.0, 1.0]).is_err());
        assert!(longitudinal_features(&[1.0, 2.0], &[2.0, 1.0]).is_err());
        assert!(longitudinal_features(&[1.0], &[1.0, 2.0]).is_err());
        assert!(longitudinal_features(&[], &[]).is_err());
    }

    #[test]
    fn names_layout() {
        let n = LongitudinalFeatures::names("alsfrs");
        assert_eq!(n.len(), 12);
        assert_eq!(n[0], "alsfrs_mean");
        assert_eq!(n[11], "alsfrs_d_std");
    }

    proptest! {
        #[test]
        fn bounds_hold(xs in proptest::collection::vec(-100.0f64..100.0, 1..20)) {
            let ts: Vec<f64> = (0..xs.len()).map(|i| i as f64 * 0.5).collect();
            let f = longitudinal_features(&xs, &ts).unwrap();
            let [mean, first, last, max, min, std] = f.values;
            prop_assert!(min <= mean + 1e-9 && mean <= max + 1e-9);
            prop_assert!(min <= first && first <= max && min <= last && last <= max);
            prop_assert!(std >= 0.0 && std <= (max - min) + 1e-9);
            prop_assert_eq!(f.rates.is_some(), xs.len() > 1);
        }
    }
}
