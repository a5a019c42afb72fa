//! Per-unit series, imputation, min-max scaling, sliding windows and
//! unit-level splits.

use crate::rng::{seeded, shuffle};
use crate::{math, Error, Result};
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

/// One unit's multivariate series, stored row-major as `T × K`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RawSeries {
    pub unit_id: String,
    pub feature_names: Vec<String>,
    pub values: Vec<f64>,
    /// `true` where the input had no value. Missing cells hold `NaN`.
    pub missing: Vec<bool>,
}

impl RawSeries {
    /// Fully observed series.
    pub fn new(unit_id: impl Into<String>, feature_names: Vec<String>, values: Vec<f64>) -> Result<Self> {
        let k = feature_names.len();
        if k == 0 || values.len() % k != 0 {
            return Err(Error::shape(
                "RawSeries::new",
                format!("multiple of {k}"),
                format!("{}", values.len()),
            ));
        }
        let missing = vec![false; values.len()];
        Ok(RawSeries {
            unit_id: unit_id.into(),
            feature_names,
            values,
            missing,
        })
    }

    pub fn k(&self) -> usize {
        self.feature_names.len()
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.k()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn row(&self, t: usize) -> &[f64] {
        let k = self.k();
        &self.values[t * k..(t + 1) * k]
    }

    pub fn get(&self, t: usize, feature: usize) -> f64 {
        self.values[t * self.k() + feature]
    }

    pub fn has_missing(&self) -> bool {
        self.missing.iter().any(|m| *m)
    }

    /// First `t` rows.
    pub fn truncated(&self, t: usize) -> RawSeries {
        let n = t.min(self.len()) * self.k();
        RawSeries {
            unit_id: self.unit_id.clone(),
            feature_names: self.feature_names.clone(),
            values: self.values[..n].to_vec(),
            missing: self.missing[..n].to_vec(),
        }
    }
}

/// Replace every missing cell by the last earlier observation of the same
/// feature.
pub fn impute_last(series: &RawSeries) -> Result<RawSeries> {
    let k = series.k();
    let mut out = series.clone();
    for f in 0..k {
        let mut last: Option<f64> = None;
        for t in 0..series.len() {
            let idx = t * k + f;
            if series.missing[idx] {
                match last {
                    Some(v) => out.values[idx] = v,
                    None => {
                        return Err(Error::MissingAtStart {
                            unit: series.unit_id.clone(),
                            feature: series.feature_names[f].clone(),
                        })
                    }
                }
            } else {
                last = Some(series.values[idx]);
            }
        }
    }
    out.missing.iter_mut().for_each(|m| *m = false);
    Ok(out)
}

/// Per-feature min and max of the training data.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScalingParams {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl ScalingParams {
    pub fn scale(&self, feature: usize, x: f64) -> f64 {
        let range = self.max[feature] - self.min[feature];
        if range == 0.0 {
            0.0
        } else {
            (x - self.min[feature]) / range
        }
    }

    pub fn unscale(&self, feature: usize, x: f64) -> f64 {
        let range = self.max[feature] - self.min[feature];
        if range == 0.0 {
            self.min[feature]
        } else {
            x * range + self.min[feature]
        }
    }
}

/// Fit min-max scaling over all (training) series jointly.
pub fn fit_scale(train: &[RawSeries]) -> Result<ScalingParams> {
    let first = train.first().ok_or(Error::EmptyDataset("fit_scale"))?;
    let k = first.k();
    let mut min = vec![f64::INFINITY; k];
    let mut max = vec![f64::NEG_INFINITY; k];
    for s in train {
        if s.k() != k {
            return Err(Error::shape("fit_scale", format!("K={k}"), format!("K={}", s.k())));
        }
        for (i, v) in s.values.iter().enumerate() {
            if s.missing[i] {
                continue;
            }
            let f = i % k;
            min[f] = min[f].min(*v);
            max[f] = max[f].max(*v);
        }
    }
    for f in 0..k {
        if !min[f].is_finite() {
            // never observed: treat as a degenerate feature at 0
            min[f] = 0.0;
            max[f] = 0.0;
        }
    }
    Ok(ScalingParams { min, max })
}

/// Affine map into the training range. Values outside it are not clipped.
pub fn apply_scale(series: &RawSeries, params: &ScalingParams) -> RawSeries {
    let k = series.k();
    let mut out = series.clone();
    for (i, v) in out.values.iter_mut().enumerate() {
        if !series.missing[i] {
            *v = params.scale(i % k, *v);
        }
    }
    out
}

pub fn invert_scale(series: &RawSeries, params: &ScalingParams) -> RawSeries {
    let k = series.k();
    let mut out = series.clone();
    for (i, v) in out.values.iter_mut().enumerate() {
        if !series.missing[i] {
            *v = params.unscale(i % k, *v);
        }
    }
    out
}

/// Dense (stride 1) sliding windows over a set of units.
///
/// Window `s` covers rows `start[s] .. start[s] + M` of unit `unit[s]`. The
/// `max_horizon` rows after each window are kept in `futures`, so targets at
/// any horizon up to `max_horizon` (and full future rows for recursive
/// strategies) are available.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedDataset {
    pub m: usize,
    pub k: usize,
    pub max_horizon: usize,
    pub target_feature: usize,
    /// Requested horizons, ascending.
    pub horizons: Vec<usize>,
    /// `S × M × K`.
    pub windows: Vec<f64>,
    /// `S × max_horizon × K`.
    pub futures: Vec<f64>,
    /// Index into `unit_ids` for every window.
    pub unit_of_window: Vec<usize>,
    pub start_of_window: Vec<usize>,
    pub unit_ids: Vec<String>,
    /// Units too short for a single window.
    pub skipped_units: Vec<String>,
}

impl WindowedDataset {
    pub fn len(&self) -> usize {
        self.unit_of_window.len()
    }

    pub fn is_empty(&self) -> bool {
        self.unit_of_window.is_empty()
    }

    /// Window `s` as `M × K` row-major.
    pub fn window(&self, s: usize) -> &[f64] {
        let w = self.m * self.k;
        &self.windows[s * w..(s + 1) * w]
    }

    /// Observation `h` steps after the last row of window `s` (`1 ≤ h ≤ max_horizon`).
    pub fn future_row(&self, s: usize, h: usize) -> &[f64] {
        let base = s * self.max_horizon * self.k + (h - 1) * self.k;
        &self.futures[base..base + self.k]
    }

    pub fn target(&self, s: usize, horizon: usize) -> f64 {
        self.future_row(s, horizon)[self.target_feature]
    }

    /// Target vector for one horizon, length `S`.
    pub fn targets(&self, horizon: usize) -> Vec<f64> {
        (0..self.len()).map(|s| self.target(s, horizon)).collect()
    }

    pub fn targets_by_horizon(&self) -> BTreeMap<usize, Vec<f64>> {
        self.horizons.iter().map(|&h| (h, self.targets(h))).collect()
    }

    pub fn unit_id(&self, s: usize) -> &str {
        &self.unit_ids[self.unit_of_window[s]]
    }
}

/// Build stride-1 windows of length `m` with targets at every horizon in
/// `horizons`. Units with `T < m + max(horizons)` are skipped and listed in
/// `skipped_units`.
pub fn make_windows(
    series: &[RawSeries],
    m: usize,
    horizons: &[usize],
    target_feature: usize,
) -> Result<WindowedDataset> {
    if m < 1 {
        return Err(Error::invalid("window length M must be >= 1"));
    }
    let max_h = horizons.iter().copied().max().unwrap_or(0);
    if max_h < 1 {
        return Err(Error::invalid("need at least one horizon N >= 1"));
    }
    let k = series.first().map(|s| s.k()).unwrap_or(1);
    if target_feature >= k {
        return Err(Error::invalid(format!("target feature {target_feature} out of range for K={k}")));
    }
    let mut hs: Vec<usize> = horizons.to_vec();
    hs.sort_unstable();
    hs.dedup();
    let mut ds = WindowedDataset {
        m,
        k,
        max_horizon: max_h,
        target_feature,
        horizons: hs,
        windows: Vec::new(),
        futures: Vec::new(),
        unit_of_window: Vec::new(),
        start_of_window: Vec::new(),
        unit_ids: Vec::new(),
        skipped_units: Vec::new(),
    };
    for s in series {
        if s.k() != k {
            return Err(Error::shape("make_windows", format!("K={k}"), format!("K={}", s.k())));
        }
        if s.has_missing() {
            return Err(Error::invalid(format!("unit {} has missing values; impute first", s.unit_id)));
        }
        let t = s.len();
        if t < m + max_h {
            ds.skipped_units.push(s.unit_id.clone());
            continue;
        }
        let unit_idx = ds.unit_ids.len();
        ds.unit_ids.push(s.unit_id.clone());
        for start in 0..=(t - m - max_h) {
            ds.windows.extend_from_slice(&s.values[start * k..(start + m) * k]);
            ds.futures
                .extend_from_slice(&s.values[(start + m) * k..(start + m + max_h) * k]);
            ds.unit_of_window.push(unit_idx);
            ds.start_of_window.push(start);
        }
    }
    Ok(ds)
}

/// Unit-level split into train / test / validation.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct UnitSplit {
    pub train: Vec<String>,
    pub test: Vec<String>,
    pub validation: Vec<String>,
}

/// Shuffle unit ids with `seed` and cut them by `fractions`
/// (train, test, validation). Sizes are rounded; validation takes the rest.
pub fn split_units(units: &[String], fractions: (f64, f64, f64), seed: u64) -> Result<UnitSplit> {
    let n = units.len();
    if n < 3 {
        return Err(Error::TooFewUnits { needed: 3, got: n });
    }
    let (a, b, c) = fractions;
    let total = a + b + c;
    if !(a > 0.0 && b > 0.0 && c > 0.0) || !(total - 1.0).abs().lt(&1e-9) {
        return Err(Error::invalid("split fractions must be positive and sum to 1"));
    }
    let mut order: Vec<String> = units.to_vec();
    order.sort();
    let mut rng = seeded(seed);
    shuffle(&mut rng, &mut order);
    let clamp = |x: f64| (math::round(x) as usize).clamp(1, n - 2);
    let n_train = clamp(a * n as f64);
    let n_test = (math::round(b * n as f64) as usize).clamp(1, n - n_train - 1);
    let validation = order.split_off(n_train + n_test);
    let test = order.split_off(n_train);
    Ok(UnitSplit {
        train: order,
        test,
        validation,
    })
}

/// Pick the series whose ids are in `ids`, in the order of `ids`.
pub fn select_units(series: &[RawSeries], ids: &[String]) -> Vec<RawSeries> {
    ids.iter()
        .filter_map(|id| series.iter().find(|s| &s.unit_id == id).cloned())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use proptest::prelude::*;

    fn names(k: usize) -> Vec<String> {
        (0..k).map(|i| format!("f{i}")).collect()
    }

    fn series(id: &str, t: usize, k: usize) -> RawSeries {
        let values = (0..t * k).map(|i| i as f64).collect();
        RawSeries::new(id, names(k), values).unwrap()
    }

    #[test]
    fn impute_forward_fills() {
        let mut s = RawSeries::new("u", names(1), vec![1.0, f64::NAN, 3.0]).unwrap();
        s.missing[1] = true;
        let out = impute_last(&s).unwrap();
        assert_eq!(out.values, vec![1.0, 1.0, 3.0]);
        assert!(!out.has_missing());
    }

    #[test]
    fn impute_without_gaps_is_identity() {
        let s = series("u", 5, 2);
        assert_eq!(impute_last(&s).unwrap(), s);
    }

    #[test]
    fn impute_rejects_missing_first_value() {
        let mut s = RawSeries::new("u7", names(1), vec![f64::NAN, 2.0]).unwrap();
        s.missing[0] = true;
        let err = impute_last(&s).unwrap_err();
        assert_eq!(
            err,
            Error::MissingAtStart {
                unit: "u7".to_string(),
                feature: "f0".to_string()
            }
        );
    }

    #[test]
    fn scaling_examples() {
        let s = RawSeries::new("u", names(1), vec![2.0, 4.0, 6.0]).unwrap();
        let p = fit_scale(core::slice::from_ref(&s)).unwrap();
        assert_eq!((p.min[0], p.max[0]), (2.0, 6.0));
        assert_eq!(apply_scale(&s, &p).values, vec![0.0, 0.5, 1.0]);
        // unseen test value is not clipped
        assert_eq!(p.scale(0, 8.0), 1.5);

        let c = RawSeries::new("c", names(1), vec![5.0, 5.0]).unwrap();
        let pc = fit_scale(core::slice::from_ref(&c)).unwrap();
        assert_eq!(apply_scale(&c, &pc).values, vec![0.0, 0.0]);
    }

    #[test]
    fn window_counts() {
        let ds = make_windows(&[series("a", 10, 2)], 4, &[2], 0).unwrap();
        assert_eq!(ds.len(), 5);
        let ds = make_windows(&[series("a", 5, 2)], 4, &[2], 0).unwrap();
        assert_eq!(ds.len(), 0);
        assert_eq!(ds.skipped_units, vec!["a".to_string()]);
    }

    #[test]
    fn single_step_windows_target_next_value() {
        let s = RawSeries::new("a", names(1), vec![10.0, 20.0, 30.0]).unwrap();
        let ds = make_windows(&[s], 1, &[1], 0).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.window(0), &[10.0]);
        assert_eq!(ds.window(1), &[20.0]);
        assert_eq!(ds.targets(1), vec![20.0, 30.0]);
    }

    #[test]
    fn windows_never_straddle_units() {
        let ds = make_windows(&[series("a", 7, 1), series("b", 6, 1)], 3, &[1, 2], 0).unwrap();
        assert_eq!(ds.len(), 3 + 2);
        for s in 0..ds.len() {
            let start = ds.start_of_window[s];
            // values are the row index in the source unit
            assert_eq!(ds.window(s)[0], start as f64);
            assert_eq!(ds.target(s, 2), (start + 3 + 1) as f64);
        }
    }

    #[test]
    fn split_sizes_and_determinism() {
        let ids: Vec<String> = (0..10).map(|i| format!("u{i}")).collect();
        let a = split_units(&ids, (0.6, 0.2, 0.2), 3).unwrap();
        assert_eq!((a.train.len(), a.test.len(), a.validation.len()), (6, 2, 2));
        assert_eq!(a, split_units(&ids, (0.6, 0.2, 0.2), 3).unwrap());
        let mut all: Vec<String> = a.train.iter().chain(&a.test).chain(&a.validation).cloned().collect();
        all.sort();
        let mut sorted = ids.clone();
        sorted.sort();
        assert_eq!(all, sorted);
        assert!(split_units(&ids[..2], (0.6, 0.2, 0.2), 3).is_err());
    }

    proptest! {
        #[test]
        fn scale_round_trip(values in prop::collection::vec(-1e6f64..1e6, 2..40)) {
            let s = RawSeries::new("u", names(2), values[..values.len() / 2 * 2].to_vec()).unwrap();
            prop_assume!(!s.is_empty());
            let p = fit_scale(core::slice::from_ref(&s)).unwrap();
            let back = invert_scale(&apply_scale(&s, &p), &p);
            for (i, (a, b)) in s.values.iter().zip(&back.values).enumerate() {
                let f = i % 2;
                if p.max[f] > p.min[f] {
                    let scale = a.abs().max(p.max[f] - p.min[f]);
                    prop_assert!((a - b).abs() <= 1e-12 * scale);
                }
            }
        }

        #[test]
        fn window_count_formula(t in 1usize..60, m in 1usize..10, n in 1usize..10) {
            prop_assume!(t >= m + n);
            let ds = make_windows(&[series("a", t, 1)], m, &[n], 0).unwrap();
            prop_assert_eq!(ds.len(), t - m - n + 1);
        }

        #[test]
        fn split_is_a_partition(n in 3usize..60, seed in 0u64..1000) {
            let ids: Vec<String> = (0..n).map(|i| format!("u{i}")).collect();
            let s = split_units(&ids, (0.6, 0.2, 0.2), seed).unwrap();
            prop_assert_eq!(s.train.len() + s.test.len() + s.validation.len(), n);
            for id in &s.test {
                prop_assert!(!s.train.contains(id) && !s.validation.contains(id));
            }
            for id in &s.validation {
                prop_assert!(!s.train.contains(id));
            }
        }
    }
}
