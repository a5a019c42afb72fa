//! Direct (DF), iterative (IF) and generative (GenF) forecasting under one
//! evaluation harness.
//!
//! All three consume an [`ExperimentData`] (scaled train / validation / test
//! units) and report metrics on the unscaled target feature of the test units.
//!
//! GenF with synthetic length `L` and horizon `N`:
//!
//! 1. ITC splits the training units into `G` and `P`.
//! 2. A CWGAN is trained on one-step pairs from `G`.
//! 3. Every `P`, validation and test window is rolled forward `L` steps with
//!    the generator; the window now ends `L` steps later.
//! 4. A predictor learns the target at the original step `M + N` from the
//!    shifted windows, i.e. at effective horizon `N − L`.

use crate::cwgan::{generate_recursive, train_cwgan, Cwgan, EpochLog, GenConfig};
use crate::data::{apply_scale, fit_scale, impute_last, make_windows, select_units, split_units, RawSeries, ScalingParams, WindowedDataset};
use crate::metrics::MetricSet;
use crate::mi::{itc_partition, score_units, ItcPartition};
use crate::nn::Mat;
use crate::predictor::{train_predictor, PredConfig, PredDataset, PredEpochLog, Transformer};
use crate::rng::derive_seed;
use crate::{Error, Result};
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum StrategyKind {
    Df,
    If,
    Genf,
}

impl StrategyKind {
    pub fn label(&self) -> &'static str {
        match self {
            StrategyKind::Df => "DF",
            StrategyKind::If => "IF",
            StrategyKind::Genf => "GenF",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StrategySpec {
    pub kind: StrategyKind,
    /// Synthetic window length.
    pub l: usize,
    /// Prediction horizon.
    pub n: usize,
    /// Observation window.
    pub m: usize,
}

impl StrategySpec {
    pub fn df(n: usize, m: usize) -> Self {
        StrategySpec { kind: StrategyKind::Df, l: 0, n, m }
    }

    /// IF behaves as `L = N − 1` with the one-step model as generator.
    pub fn iterative(n: usize, m: usize) -> Self {
        StrategySpec {
            kind: StrategyKind::If,
            l: n.saturating_sub(1),
            n,
            m,
        }
    }

    pub fn genf(l: usize, n: usize, m: usize) -> Self {
        StrategySpec { kind: StrategyKind::Genf, l, n, m }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 || self.m < 1 {
            return Err(Error::invalid("N and M must be >= 1"));
        }
        match self.kind {
            StrategyKind::Df if self.l != 0 => Err(Error::invalid("DF has L = 0")),
            StrategyKind::If if self.l + 1 != self.n => Err(Error::invalid("IF has L = N - 1")),
            StrategyKind::Genf if self.l >= self.n => Err(Error::SyntheticWindow { l: self.l, n: self.n }),
            _ => Ok(()),
        }
    }
}

/// Independent seeds for every stochastic stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Seeds {
    pub split: u64,
    pub itc: u64,
    pub gan: u64,
    pub predictor: u64,
    pub noise: u64,
}

impl Seeds {
    pub fn from_master(seed: u64) -> Self {
        Seeds {
            split: derive_seed(seed, 1),
            itc: derive_seed(seed, 2),
            gan: derive_seed(seed, 3),
            predictor: derive_seed(seed, 4),
            noise: derive_seed(seed, 5),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct StrategyConfig {
    pub m: usize,
    pub target_feature: usize,
    pub gen: GenConfig,
    pub pred: PredConfig,
    pub itc_groups: usize,
    pub itc_k: usize,
    pub itc_fraction: f64,
    /// Generator draws averaged per test window.
    pub noise_draws: usize,
}

impl Default for StrategyConfig {
    fn default() -> Self {
        StrategyConfig {
            m: 20,
            target_feature: 0,
            gen: GenConfig::default(),
            pred: PredConfig::default(),
            itc_groups: 4,
            itc_k: 3,
            itc_fraction: 0.5,
            noise_draws: 1,
        }
    }
}

impl StrategyConfig {
    pub fn validate(&self) -> Result<()> {
        self.gen.validate()?;
        self.pred.validate()?;
        if self.m < 1 || self.noise_draws < 1 || self.itc_groups < 1 || self.itc_k < 1 {
            return Err(Error::invalid("m, noise_draws, itc_groups and itc_k must be >= 1"));
        }
        Ok(())
    }
}

/// Imputed, split and scaled units.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentData {
    pub train: Vec<RawSeries>,
    pub validation: Vec<RawSeries>,
    pub test: Vec<RawSeries>,
    pub scaling: ScalingParams,
}

impl ExperimentData {
    /// Impute, split units `(train, test, validation)` and scale with
    /// parameters fitted on the training units.
    pub fn prepare(raw: &[RawSeries], fractions: (f64, f64, f64), split_seed: u64) -> Result<Self> {
        let imputed = raw.iter().map(impute_last).collect::<Result<Vec<_>>>()?;
        let ids: Vec<String> = imputed.iter().map(|s| s.unit_id.clone()).collect();
        let split = split_units(&ids, fractions, split_seed)?;
        let pick = |ids: &[String]| select_units(&imputed, ids);
        let (train, test, validation) = (pick(&split.train), pick(&split.test), pick(&split.validation));
        let scaling = fit_scale(&train)?;
        let scale = |v: Vec<RawSeries>| v.iter().map(|s| apply_scale(s, &scaling)).collect::<Vec<_>>();
        Ok(ExperimentData {
            train: scale(train),
            validation: scale(validation),
            test: scale(test),
            scaling,
        })
    }

    fn audit(&self) -> Result<()> {
        let test: BTreeSet<&str> = self.test.iter().map(|s| s.unit_id.as_str()).collect();
        for s in self.train.iter().chain(&self.validation) {
            if test.contains(s.unit_id.as_str()) {
                return Err(Error::UnitLeakage(s.unit_id.clone()));
            }
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.train.first().map_or(0, RawSeries::k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ParamCounts {
    pub generator: usize,
    pub critic: usize,
    pub predictor: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PredictionRow {
    pub window_id: usize,
    pub unit: String,
    pub horizon: usize,
    pub y_true: f64,
    pub y_pred: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ForecastReport {
    pub strategy: StrategyKind,
    pub l: usize,
    pub n: usize,
    pub m: usize,
    pub seeds: Seeds,
    /// Metrics at horizon `n` on the unscaled target feature.
    pub metrics: MetricSet,
    /// MSE of the synthetic block against the true future (scaled, all features, test windows).
    pub generation_mse: Option<f64>,
    pub param_counts: ParamCounts,
    pub config_hash: Option<String>,
    /// Every unit read by any training stage.
    pub training_units: Vec<String>,
    pub test_units: Vec<String>,
    pub predictions: Vec<PredictionRow>,
}

/// Trained predictor plus its loss curve, kept for checkpointing.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub report: ForecastReport,
    pub predictor: Transformer,
    pub pred_log: Vec<PredEpochLog>,
}

fn windows(series: &[RawSeries], m: usize, n: usize, tf: usize) -> Result<WindowedDataset> {
    make_windows(series, m, &[n], tf)
}

fn unit_ids(series: &[RawSeries]) -> Vec<String> {
    let mut ids: Vec<String> = series.iter().map(|s| s.unit_id.clone()).collect();
    ids.sort();
    ids
}

fn window_mat(ds: &WindowedDataset, s: usize) -> Mat {
    Mat {
        rows: ds.m,
        cols: ds.k,
        data: ds.window(s).to_vec(),
    }
}

#[allow(clippy::too_many_arguments)]
fn finish(
    kind: StrategyKind,
    spec: (usize, usize, usize),
    seeds: &Seeds,
    data: &ExperimentData,
    test: &WindowedDataset,
    preds_scaled: &[f64],
    training_units: Vec<String>,
    param_counts: ParamCounts,
    generation_mse: Option<f64>,
) -> Result<ForecastReport> {
    let (l, n, m) = spec;
    let tf = test.target_feature;
    let mut y_true = Vec::with_capacity(test.len());
    let mut y_pred = Vec::with_capacity(test.len());
    let mut predictions = Vec::with_capacity(test.len());
    for s in 0..test.len() {
        let t = data.scaling.unscale(tf, test.target(s, n));
        let p = data.scaling.unscale(tf, preds_scaled[s]);
        y_true.push(t);
        y_pred.push(p);
        predictions.push(PredictionRow {
            window_id: s,
            unit: String::from(test.unit_id(s)),
            horizon: n,
            y_true: t,
            y_pred: p,
        });
    }
    Ok(ForecastReport {
        strategy: kind,
        l,
        n,
        m,
        seeds: *seeds,
        metrics: MetricSet::compute(&y_true, &y_pred)?,
        generation_mse,
        param_counts,
        config_hash: None,
        training_units,
        test_units: unit_ids(&data.test),
        predictions,
    })
}

fn check_common(data: &ExperimentData, n: usize, cfg: &StrategyConfig) -> Result<()> {
    cfg.validate()?;
    data.audit()?;
    if n < 1 {
        return Err(Error::invalid("horizon N must be >= 1"));
    }
    if data.train.is_empty() || data.test.is_empty() {
        return Err(Error::EmptyDataset("train or test units"));
    }
    Ok(())
}

fn train_units(data: &ExperimentData) -> Vec<String> {
    let mut ids = unit_ids(&data.train);
    ids.extend(unit_ids(&data.validation));
    ids.sort();
    ids
}

fn predictor_only(pc: usize) -> ParamCounts {
    ParamCounts {
        predictor: pc,
        total: pc,
        ..ParamCounts::default()
    }
}

/// Train the DF predictor: window → target `N` steps ahead.
pub fn train_direct(
    data: &ExperimentData,
    n: usize,
    cfg: &StrategyConfig,
    seeds: &Seeds,
) -> Result<(Transformer, Vec<PredEpochLog>)> {
    check_common(data, n, cfg)?;
    let tf = cfg.target_feature;
    let train = PredDataset::direct(&windows(&data.train, cfg.m, n, tf)?, n)?;
    let val = if data.validation.is_empty() {
        None
    } else {
        Some(PredDataset::direct(&windows(&data.validation, cfg.m, n, tf)?, n)?)
    };
    train_predictor(&train, val.as_ref(), &cfg.pred, seeds.predictor)
}

/// Score a DF predictor on the test units.
pub fn evaluate_direct(
    data: &ExperimentData,
    model: &Transformer,
    n: usize,
    cfg: &StrategyConfig,
    seeds: &Seeds,
) -> Result<ForecastReport> {
    check_common(data, n, cfg)?;
    let test = windows(&data.test, cfg.m, n, cfg.target_feature)?;
    let preds = (0..test.len())
        .map(|s| Ok(model.predict(&window_mat(&test, s))?[0]))
        .collect::<Result<Vec<f64>>>()?;
    finish(
        StrategyKind::Df,
        (0, n, cfg.m),
        seeds,
        data,
        &test,
        &preds,
        train_units(data),
        predictor_only(model.param_count()),
        None,
    )
}

/// One predictor mapping the window to the target `N` steps ahead.
pub fn run_direct(data: &ExperimentData, n: usize, cfg: &StrategyConfig, seeds: &Seeds) -> Result<RunArtifacts> {
    let (model, pred_log) = train_direct(data, n, cfg, seeds)?;
    let report = evaluate_direct(data, &model, n, cfg, seeds)?;
    Ok(RunArtifacts {
        report,
        predictor: model,
        pred_log,
    })
}

/// Apply a one-step model `n` times, dropping the oldest row and appending
/// the prediction each time. Returns the final prediction (all K features).
pub fn iterate_one_step(model: &Transformer, window: &Mat, n: usize) -> Result<Vec<f64>> {
    if model.out_dim != window.cols {
        return Err(Error::shape("iterate_one_step", format!("{} outputs", window.cols), format!("{}", model.out_dim)));
    }
    let mut cur = window.clone();
    let mut last = Vec::new();
    for _ in 0..n {
        last = model.predict(&cur)?;
        cur.data.drain(..cur.cols);
        cur.data.extend_from_slice(&last);
    }
    Ok(last)
}

/// Train the IF one-step model (all K features as output).
pub fn train_iterative(
    data: &ExperimentData,
    n: usize,
    cfg: &StrategyConfig,
    seeds: &Seeds,
) -> Result<(Transformer, Vec<PredEpochLog>)> {
    check_common(data, n, cfg)?;
    let tf = cfg.target_feature;
    let train = PredDataset::next_step(&windows(&data.train, cfg.m, 1, tf)?)?;
    let val = if data.validation.is_empty() {
        None
    } else {
        Some(PredDataset::next_step(&windows(&data.validation, cfg.m, 1, tf)?)?)
    };
    train_predictor(&train, val.as_ref(), &cfg.pred, seeds.predictor)
}

/// Score a one-step model applied recursively `N` times.
pub fn evaluate_iterative(
    data: &ExperimentData,
    model: &Transformer,
    n: usize,
    cfg: &StrategyConfig,
    seeds: &Seeds,
) -> Result<ForecastReport> {
    check_common(data, n, cfg)?;
    let tf = cfg.target_feature;
    let test = windows(&data.test, cfg.m, n, tf)?;
    let preds = (0..test.len())
        .map(|s| Ok(iterate_one_step(model, &window_mat(&test, s), n)?[tf]))
        .collect::<Result<Vec<f64>>>()?;
    finish(
        StrategyKind::If,
        (n - 1, n, cfg.m),
        seeds,
        data,
        &test,
        &preds,
        train_units(data),
        predictor_only(model.param_count()),
        None,
    )
}

/// A K-output one-step model applied recursively `N` times.
pub fn run_iterative(data: &ExperimentData, n: usize, cfg: &StrategyConfig, seeds: &Seeds) -> Result<RunArtifacts> {
    let (model, pred_log) = train_iterative(data, n, cfg, seeds)?;
    let report = evaluate_iterative(data, &model, n, cfg, seeds)?;
    Ok(RunArtifacts {
        report,
        predictor: model,
        pred_log,
    })
}

/// ITC partition and trained CWGAN, shared by every `L` of a sweep.
#[derive(Debug, Clone)]
pub struct GenfStage {
    pub partition: ItcPartition,
    pub gan: Cwgan,
    pub gan_log: Vec<EpochLog>,
}

/// Steps 1–2 of GenF: ITC split of the training units and CWGAN training on `G`.
pub fn prepare_genf(data: &ExperimentData, cfg: &StrategyConfig, seeds: &Seeds) -> Result<GenfStage> {
    let partition = itc_split(data, cfg, seeds)?;
    let (gan, gan_log) = train_cwgan(&gan_windows(data, &partition, cfg)?, &cfg.gen, seeds.gan)?;
    Ok(GenfStage {
        partition,
        gan,
        gan_log,
    })
}

/// Step 1 of GenF alone: score the training units and split them into `G` and `P`.
pub fn itc_split(data: &ExperimentData, cfg: &StrategyConfig, seeds: &Seeds) -> Result<ItcPartition> {
    cfg.validate()?;
    data.audit()?;
    let scores = score_units(&data.train, cfg.itc_k)?;
    let groups = cfg.itc_groups.min(scores.len());
    itc_partition(&scores, groups, cfg.itc_fraction, seeds.itc)
}

/// One-step `(window, next row)` pairs from the `G` units.
pub fn gan_windows(data: &ExperimentData, partition: &ItcPartition, cfg: &StrategyConfig) -> Result<WindowedDataset> {
    let g_units = select_units(&data.train, &partition.subset_g);
    make_windows(&g_units, cfg.m, &[1], cfg.target_feature)
}

/// Shift every window of `ds` by `l` generated steps; targets stay at horizon `n`.
/// Also returns the generation MSE against the true future rows.
pub fn shift_windows(
    gan: &Cwgan,
    ds: &WindowedDataset,
    l: usize,
    n: usize,
    noise_seed: u64,
    draws: usize,
) -> Result<(Vec<PredDataset>, f64)> {
    if l >= n {
        return Err(Error::SyntheticWindow { l, n });
    }
    let mut out: Vec<PredDataset> = (0..draws).map(|_| PredDataset::new(ds.m, ds.k, 1)).collect();
    let mut gen_se = 0.0;
    let mut count = 0usize;
    for s in 0..ds.len() {
        let w = window_mat(ds, s);
        for (d, dst) in out.iter_mut().enumerate() {
            let seed = derive_seed(derive_seed(noise_seed, d as u64), s as u64);
            let g = generate_recursive(&gan.generator, &w, l, seed)?;
            dst.push(&g.window.data, &[ds.target(s, n)])?;
            for j in 0..l {
                for (a, b) in g.block.row(j).iter().zip(ds.future_row(s, j + 1)) {
                    gen_se += (a - b) * (a - b);
                    count += 1;
                }
            }
        }
    }
    let gen_mse = if count > 0 { gen_se / count as f64 } else { 0.0 };
    Ok((out, gen_mse))
}

fn check_l(l: usize, n: usize) -> Result<()> {
    if l >= n {
        return Err(Error::SyntheticWindow { l, n });
    }
    if l == 0 {
        return Err(Error::invalid("GenF needs L >= 1; L = 0 is DF"));
    }
    Ok(())
}

/// Step 3 of GenF: train the predictor on shifted `P` windows.
pub fn train_genf(
    data: &ExperimentData,
    stage: &GenfStage,
    n: usize,
    l: usize,
    cfg: &StrategyConfig,
    seeds: &Seeds,
) -> Result<(Transformer, Vec<PredEpochLog>)> {
    check_common(data, n, cfg)?;
    check_l(l, n)?;
    let tf = cfg.target_feature;
    let p_units = select_units(&data.train, &stage.partition.subset_p);
    let p_ds = windows(&p_units, cfg.m, n, tf)?;
    let (mut p_shifted, _) = shift_windows(&stage.gan, &p_ds, l, n, derive_seed(seeds.noise, 1), 1)?;
    let train = p_shifted.remove(0);
    let val = if data.validation.is_empty() {
        None
    } else {
        let v = windows(&data.validation, cfg.m, n, tf)?;
        Some(shift_windows(&stage.gan, &v, l, n, derive_seed(seeds.noise, 2), 1)?.0.remove(0))
    };
    train_predictor(&train, val.as_ref(), &cfg.pred, seeds.predictor)
}

/// Step 4 of GenF: shift every test window with the generator and predict.
/// Predictions are averaged over `cfg.noise_draws` generator draws.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_genf(
    data: &ExperimentData,
    gan: &Cwgan,
    model: &Transformer,
    n: usize,
    l: usize,
    cfg: &StrategyConfig,
    seeds: &Seeds,
) -> Result<ForecastReport> {
    check_common(data, n, cfg)?;
    check_l(l, n)?;
    let test = windows(&data.test, cfg.m, n, cfg.target_feature)?;
    let (test_shifted, gen_mse) = shift_windows(gan, &test, l, n, derive_seed(seeds.noise, 3), cfg.noise_draws)?;
    let mut preds = vec![0.0; test.len()];
    for draw in &test_shifted {
        for (s, p) in preds.iter_mut().enumerate() {
            *p += model.predict(&draw.input(s))?[0];
        }
    }
    let inv = 1.0 / cfg.noise_draws as f64;
    preds.iter_mut().for_each(|p| *p *= inv);
    let (g, c) = gan.param_counts();
    let pc = model.param_count();
    finish(
        StrategyKind::Genf,
        (l, n, cfg.m),
        seeds,
        data,
        &test,
        &preds,
        train_units(data),
        ParamCounts {
            generator: g,
            critic: c,
            predictor: pc,
            total: g + c + pc,
        },
        Some(gen_mse),
    )
}

/// Steps 3–4 of GenF given a prepared stage.
pub fn run_genf_with(
    data: &ExperimentData,
    stage: &GenfStage,
    n: usize,
    l: usize,
    cfg: &StrategyConfig,
    seeds: &Seeds,
) -> Result<RunArtifacts> {
    let (model, pred_log) = train_genf(data, stage, n, l, cfg, seeds)?;
    let report = evaluate_genf(data, &stage.gan, &model, n, l, cfg, seeds)?;
    Ok(RunArtifacts {
        report,
        predictor: model,
        pred_log,
    })
}

/// Full GenF run. `L = 0` is plain DF; `L ≥ N` is rejected.
pub fn run_genf(data: &ExperimentData, n: usize, l: usize, cfg: &StrategyConfig, seeds: &Seeds) -> Result<RunArtifacts> {
    if l >= n {
        return Err(Error::SyntheticWindow { l, n });
    }
    if l == 0 {
        return run_direct(data, n, cfg, seeds);
    }
    let stage = prepare_genf(data, cfg, seeds)?;
    run_genf_with(data, &stage, n, l, cfg, seeds)
}

/// DF and IF anchors followed by GenF for every `L` in `l_set`. The ITC split
/// and the CWGAN are trained once and shared across `L`.
pub fn sweep_l(
    data: &ExperimentData,
    n: usize,
    l_set: &[usize],
    cfg: &StrategyConfig,
    seeds: &Seeds,
) -> Result<Vec<ForecastReport>> {
    if let Some(&bad) = l_set.iter().find(|&&l| l >= n) {
        return Err(Error::SyntheticWindow { l: bad, n });
    }
    let mut out = vec![run_direct(data, n, cfg, seeds)?.report, run_iterative(data, n, cfg, seeds)?.report];
    let needs_gan = l_set.iter().any(|&l| l > 0);
    let stage = if needs_gan { Some(prepare_genf(data, cfg, seeds)?) } else { None };
    for &l in l_set {
        let report = match &stage {
            Some(st) if l > 0 => run_genf_with(data, st, n, l, cfg, seeds)?.report,
            _ => run_direct(data, n, cfg, seeds)?.report,
        };
        out.push(report);
    }
    Ok(out)
}

/// Dispatch on a spec.
pub fn run(spec: &StrategySpec, data: &ExperimentData, cfg: &StrategyConfig, seeds: &Seeds) -> Result<RunArtifacts> {
    spec.validate()?;
    if spec.m != cfg.m {
        return Err(Error::invalid(format!("spec M={} differs from config M={}", spec.m, cfg.m)));
    }
    match spec.kind {
        StrategyKind::Df => run_direct(data, spec.n, cfg, seeds),
        StrategyKind::If => run_iterative(data, spec.n, cfg, seeds),
        StrategyKind::Genf => run_genf(data, spec.n, spec.l, cfg, seeds),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::ProcessSpec;

    fn tiny_cfg() -> StrategyConfig {
        StrategyConfig {
            m: 4,
            gen: GenConfig {
                epochs: 2,
                batch: 16,
                n_critic: 1,
                ..GenConfig::default()
            },
            pred: PredConfig {
                epochs: 2,
                batch: 16,
                d_model: 6,
                heads: 2,
                d_ff: 8,
                enc_layers: 1,
                dec_layers: 1,
                patience: 5,
                ..PredConfig::default()
            },
            itc_groups: 2,
            ..StrategyConfig::default()
        }
    }

    fn tiny_data() -> ExperimentData {
        let raw = ProcessSpec::default_var(10, 30, 4).simulate().unwrap();
        ExperimentData::prepare(&raw, (0.6, 0.2, 0.2), 1).unwrap()
    }

    #[test]
    fn spec_rules() {
        assert!(StrategySpec::df(8, 20).validate().is_ok());
        assert_eq!(StrategySpec::iterative(8, 20).l, 7);
        assert!(StrategySpec::genf(4, 8, 20).validate().is_ok());
        assert_eq!(
            StrategySpec::genf(8, 8, 20).validate(),
            Err(Error::SyntheticWindow { l: 8, n: 8 })
        );
    }

    #[test]
    fn seeds_are_distinct() {
        let s = Seeds::from_master(3);
        let all = [s.split, s.itc, s.gan, s.predictor, s.noise];
        let set: BTreeSet<u64> = all.iter().copied().collect();
        assert_eq!(set.len(), 5);
        assert_eq!(s, Seeds::from_master(3));
    }

    #[test]
    fn genf_l0_is_direct() {
        let data = tiny_data();
        let cfg = tiny_cfg();
        let seeds = Seeds::from_master(1);
        let a = run_genf(&data, 3, 0, &cfg, &seeds).unwrap().report;
        let b = run_direct(&data, 3, &cfg, &seeds).unwrap().report;
        assert_eq!(a, b);
        assert_eq!(
            run_genf(&data, 3, 3, &cfg, &seeds).unwrap_err(),
            Error::SyntheticWindow { l: 3, n: 3 }
        );
    }

    #[test]
    fn training_never_sees_test_units() {
        let data = tiny_data();
        let cfg = tiny_cfg();
        let r = run_genf(&data, 3, 1, &cfg, &Seeds::from_master(2)).unwrap().report;
        for u in &r.test_units {
            assert!(!r.training_units.contains(u));
        }
        let mut leaky = data.clone();
        leaky.train.push(leaky.test[0].clone());
        assert!(matches!(run_direct(&leaky, 3, &cfg, &Seeds::from_master(2)), Err(Error::UnitLeakage(_))));
    }

    #[test]
    fn iterative_n1_matches_one_step_model() {
        let data = tiny_data();
        let cfg = tiny_cfg();
        let seeds = Seeds::from_master(3);
        let run = run_iterative(&data, 1, &cfg, &seeds).unwrap();
        let test = make_windows(&data.test, cfg.m, &[1], 0).unwrap();
        for row in run.report.predictions.iter().take(5) {
            let direct = run.predictor.predict(&window_mat(&test, row.window_id)).unwrap()[0];
            assert_eq!(row.y_pred, data.scaling.unscale(0, direct));
        }
    }

    #[test]
    fn genf_is_deterministic() {
        let data = tiny_data();
        let cfg = tiny_cfg();
        let seeds = Seeds::from_master(4);
        let a = run_genf(&data, 3, 2, &cfg, &seeds).unwrap().report;
        let b = run_genf(&data, 3, 2, &cfg, &seeds).unwrap().report;
        assert_eq!(a, b);
        assert!(a.generation_mse.unwrap() >= 0.0);
        assert_eq!(a.param_counts.total, a.param_counts.generator + a.param_counts.critic + a.param_counts.predictor);
    }

    #[test]
    fn shifted_window_indexing() {
        // constant generator: every synthetic step equals the output bias
        let mut gan = Cwgan::new(1, &GenConfig::default(), 0);
        let bias = gan.generator.head.layers.last().unwrap().b.unwrap();
        for p in gan.generator.ps.params_mut() {
            p.value.fill(0.0);
        }
        gan.generator.ps.value_mut(bias)[0] = -1.0;
        let values: Vec<f64> = (1..=10).map(f64::from).collect();
        let unit = RawSeries::new("u", vec![String::from("x")], values).unwrap();
        let ds = make_windows(&[unit], 4, &[3], 0).unwrap();
        let (shifted, gen_mse) = shift_windows(&gan, &ds, 2, 3, 0, 1).unwrap();
        assert_eq!(shifted[0].input(0).data, vec![3.0, 4.0, -1.0, -1.0]);
        assert_eq!(shifted[0].target(0), &[7.0]);
        assert_eq!(shifted[0].input(1).data, vec![4.0, 5.0, -1.0, -1.0]);
        assert_eq!(shifted[0].target(1), &[8.0]);
        // window s: true future rows are s+5, s+6 against -1
        let expect = (0..ds.len())
            .map(|s| {
                let a = (s + 5) as f64 + 1.0;
                let b = (s + 6) as f64 + 1.0;
                a * a + b * b
            })
            .sum::<f64>()
            / (2 * ds.len()) as f64;
        assert!((gen_mse - expect).abs() < 1e-12);
        assert!(shift_windows(&gan, &ds, 3, 3, 0, 1).is_err());
    }

    #[test]
    fn sweep_rows() {
        let data = tiny_data();
        let cfg = tiny_cfg();
        let rows = sweep_l(&data, 4, &[1, 2, 3], &cfg, &Seeds::from_master(5)).unwrap();
        let kinds: Vec<(StrategyKind, usize)> = rows.iter().map(|r| (r.strategy, r.l)).collect();
        assert_eq!(
            kinds,
            vec![
                (StrategyKind::Df, 0),
                (StrategyKind::If, 3),
                (StrategyKind::Genf, 1),
                (StrategyKind::Genf, 2),
                (StrategyKind::Genf, 3)
            ]
        );
        assert!(sweep_l(&data, 4, &[4], &cfg, &Seeds::from_master(5)).is_err());
    }
}
