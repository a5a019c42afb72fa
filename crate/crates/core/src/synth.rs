//! Synthetic processes with known conditional means.

use crate::data::RawSeries;
use crate::rng::{derive_seed, normal, seeded};
use crate::theory::{Forecaster, KnownProcess, TestSet};
use crate::{math, Error, Result};
use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum ProcessKind {
    /// `x_t = c + Σ_j A_j x_{t−j} + e_t`; each `A_j` is `K × K` row-major.
    Var { lags: Vec<Vec<f64>>, intercept: Vec<f64> },
    /// `x_t = level + slope·t + amplitude·sin(2πt/period) + e_t`, per feature.
    TrendSeasonal { level: f64, slope: f64, amplitude: f64, period: f64 },
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProcessSpec {
    pub kind: ProcessKind,
    pub k: usize,
    pub units: usize,
    pub t: usize,
    pub noise_sigma: f64,
    pub seed: u64,
    /// Discarded leading steps.
    pub burn_in: usize,
    /// Initial row for every lag; zeros when absent.
    pub init: Option<Vec<f64>>,
    pub allow_unstable: bool,
}

impl ProcessSpec {
    /// Univariate AR(p) with coefficients `phi`.
    pub fn ar(phi: &[f64], noise_sigma: f64, units: usize, t: usize, seed: u64) -> Self {
        ProcessSpec {
            kind: ProcessKind::Var {
                lags: phi.iter().map(|p| vec![*p]).collect(),
                intercept: vec![0.0],
            },
            k: 1,
            units,
            t,
            noise_sigma,
            seed,
            burn_in: 100,
            init: None,
            allow_unstable: false,
        }
    }

    /// Benchmark process: a 3-feature VAR(2). Each feature carries a damped
    /// oscillation (roots `0.95·e^{±iπ/6}`, period 12) and feeds the next
    /// feature cyclically with weight 0.03.
    pub fn default_var(units: usize, t: usize, seed: u64) -> Self {
        let a1 = 1.9 * libm::cos(core::f64::consts::PI / 6.0);
        let a2 = -0.9025;
        let c = 0.03;
        ProcessSpec {
            kind: ProcessKind::Var {
                lags: vec![
                    vec![a1, c, 0.0, 0.0, a1, c, c, 0.0, a1],
                    vec![a2, 0.0, 0.0, 0.0, a2, 0.0, 0.0, 0.0, a2],
                ],
                intercept: vec![0.0, 0.0, 0.0],
            },
            k: 3,
            units,
            t,
            noise_sigma: 0.1,
            seed,
            burn_in: 200,
            init: None,
            allow_unstable: false,
        }
    }

    pub fn feature_names(&self) -> Vec<String> {
        (0..self.k).map(|i| format!("x{i}")).collect()
    }

    fn check(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::invalid("process needs K >= 1"));
        }
        if let Some(init) = &self.init {
            if init.len() != self.k {
                return Err(Error::shape("ProcessSpec.init", format!("{}", self.k), format!("{}", init.len())));
            }
        }
        if let ProcessKind::Var { lags, intercept } = &self.kind {
            if lags.is_empty() || lags.iter().any(|a| a.len() != self.k * self.k) || intercept.len() != self.k {
                return Err(Error::invalid("VAR coefficient shapes do not match K"));
            }
            if !self.allow_unstable {
                let rho = spectral_radius(&companion(lags, self.k));
                if rho >= 1.0 {
                    return Err(Error::Unstable(rho));
                }
            }
        }
        Ok(())
    }

    /// Draw `units` independent series of length `t`.
    pub fn simulate(&self) -> Result<Vec<RawSeries>> {
        self.check()?;
        (0..self.units)
            .map(|u| {
                let values = self.simulate_unit(derive_seed(self.seed, u as u64));
                RawSeries::new(format!("u{u:04}"), self.feature_names(), values)
            })
            .collect()
    }

    fn simulate_unit(&self, seed: u64) -> Vec<f64> {
        let k = self.k;
        let mut rng = seeded(seed);
        let total = self.burn_in + self.t;
        let mut out = Vec::with_capacity(total * k);
        match &self.kind {
            ProcessKind::Var { lags, intercept } => {
                let p = lags.len();
                let init = self.init.clone().unwrap_or_else(|| vec![0.0; k]);
                // history[0] is the most recent row
                let mut history: Vec<Vec<f64>> = vec![init.clone(); p];
                out.extend_from_slice(&init);
                for _ in 1..total {
                    let mut next = var_mean_step(lags, intercept, &history, k);
                    for v in next.iter_mut() {
                        *v += self.noise_sigma * normal(&mut rng);
                    }
                    out.extend_from_slice(&next);
                    history.pop();
                    history.insert(0, next);
                }
            }
            ProcessKind::TrendSeasonal { level, slope, amplitude, period } => {
                for t in 0..total {
                    let tf = t as f64;
                    let base = level + slope * tf + amplitude * math::sin(2.0 * core::f64::consts::PI * tf / period);
                    for _ in 0..k {
                        out.push(base + self.noise_sigma * normal(&mut rng));
                    }
                }
            }
        }
        out.split_off(self.burn_in * k)
    }

    /// `E[x_{M+h} | window]` for VAR processes; `window` is `M × K` row-major
    /// with at least as many rows as lags.
    pub fn conditional_mean(&self, window: &[f64], horizon: usize) -> Result<Vec<f64>> {
        let k = self.k;
        let ProcessKind::Var { lags, intercept } = &self.kind else {
            return Err(Error::invalid("conditional mean is only available for VAR processes"));
        };
        let p = lags.len();
        let rows = window.len() / k;
        if window.len() % k != 0 || rows < p {
            return Err(Error::shape("conditional_mean", format!(">= {p} rows of {k}"), format!("{}", window.len())));
        }
        let mut history: Vec<Vec<f64>> = (0..p).map(|j| window[(rows - 1 - j) * k..(rows - j) * k].to_vec()).collect();
        let mut next = history[0].clone();
        for _ in 0..horizon {
            next = var_mean_step(lags, intercept, &history, k);
            history.pop();
            history.insert(0, next.clone());
        }
        Ok(next)
    }

    /// Variance of feature `feature` at `horizon` around its conditional mean.
    pub fn conditional_variance(&self, horizon: usize, feature: usize) -> Result<f64> {
        let ProcessKind::Var { lags, .. } = &self.kind else {
            return Err(Error::invalid("conditional variance is only available for VAR processes"));
        };
        // Impulse responses Ψ_j (K × K) of the VAR; var = σ² Σ_{j<h} ‖row_feature(Ψ_j)‖².
        let k = self.k;
        let mut psi: Vec<Vec<f64>> = Vec::with_capacity(horizon);
        let mut identity = vec![0.0; k * k];
        for i in 0..k {
            identity[i * k + i] = 1.0;
        }
        psi.push(identity);
        for j in 1..horizon {
            let mut next = vec![0.0; k * k];
            for (lag, a) in lags.iter().enumerate() {
                if lag + 1 > j {
                    break;
                }
                let prev = &psi[j - lag - 1];
                for r in 0..k {
                    for c in 0..k {
                        next[r * k + c] += (0..k).map(|q| a[r * k + q] * prev[q * k + c]).sum::<f64>();
                    }
                }
            }
            psi.push(next);
        }
        let s2 = self.noise_sigma * self.noise_sigma;
        Ok(psi
            .iter()
            .map(|m| (0..k).map(|c| m[feature * k + c] * m[feature * k + c]).sum::<f64>())
            .sum::<f64>()
            * s2)
    }
}

fn var_mean_step(lags: &[Vec<f64>], intercept: &[f64], history: &[Vec<f64>], k: usize) -> Vec<f64> {
    let mut next = intercept.to_vec();
    for (a, x) in lags.iter().zip(history) {
        for r in 0..k {
            next[r] += (0..k).map(|c| a[r * k + c] * x[c]).sum::<f64>();
        }
    }
    next
}

/// Companion matrix of a VAR(p), `Kp × Kp` row-major.
fn companion(lags: &[Vec<f64>], k: usize) -> (Vec<f64>, usize) {
    let p = lags.len();
    let n = k * p;
    let mut c = vec![0.0; n * n];
    for (j, a) in lags.iter().enumerate() {
        for r in 0..k {
            for q in 0..k {
                c[r * n + j * k + q] = a[r * k + q];
            }
        }
    }
    for i in k..n {
        c[i * n + i - k] = 1.0;
    }
    (c, n)
}

/// Spectral radius via Gelfand's formula, `ρ = lim ‖C^m‖^{1/m}`, with
/// `m = 2^20` reached by normalised repeated squaring.
fn spectral_radius((c, n): &(Vec<f64>, usize)) -> f64 {
    const SQUARINGS: i32 = 20;
    let n = *n;
    let mut b = c.clone();
    let mut log_norm = 0.0;
    let mut norm = math::sqrt(b.iter().map(|v| v * v).sum());
    if norm == 0.0 {
        return 0.0;
    }
    b.iter_mut().for_each(|v| *v /= norm);
    log_norm += math::ln(norm);
    for _ in 0..SQUARINGS {
        let mut sq = vec![0.0; n * n];
        for i in 0..n {
            for q in 0..n {
                let a = b[i * n + q];
                if a != 0.0 {
                    for j in 0..n {
                        sq[i * n + j] += a * b[q * n + j];
                    }
                }
            }
        }
        norm = math::sqrt(sq.iter().map(|v| v * v).sum());
        if norm == 0.0 {
            return 0.0;
        }
        sq.iter_mut().for_each(|v| *v /= norm);
        b = sq;
        log_norm = 2.0 * log_norm + math::ln(norm);
    }
    math::exp(log_norm / math::pow(2.0, SQUARINGS as f64))
}

/// Univariate AR(1) with known dynamics, used to check the bias-variance
/// decomposition against a fitted forecaster.
#[derive(Debug, Clone)]
pub struct Ar1Benchmark {
    pub phi: f64,
    pub sigma: f64,
    pub train_units: usize,
    pub train_len: usize,
    pub window: usize,
    pub test_windows: usize,
}

impl KnownProcess for Ar1Benchmark {
    type Sample = Vec<RawSeries>;

    fn training_set(&self, seed: u64) -> Vec<RawSeries> {
        ProcessSpec::ar(&[self.phi], self.sigma, self.train_units, self.train_len, seed)
            .simulate()
            .expect("stationary AR(1)")
    }

    fn test_set(&self, horizon: usize, seed: u64) -> TestSet {
        let spec = ProcessSpec::ar(&[self.phi], self.sigma, self.test_windows, self.window + horizon, seed);
        let series = spec.simulate().expect("stationary AR(1)");
        let mut windows = Vec::with_capacity(series.len());
        let mut conditional_mean = Vec::with_capacity(series.len());
        let mut realised = Vec::with_capacity(series.len());
        for s in &series {
            let w = s.values[..self.window].to_vec();
            conditional_mean.push(spec.conditional_mean(&w, horizon).expect("VAR")[0]);
            realised.push(s.values[self.window + horizon - 1]);
            windows.push(w);
        }
        TestSet {
            windows,
            conditional_mean,
            realised,
        }
    }

    fn noise_variance(&self, horizon: usize) -> f64 {
        ProcessSpec::ar(&[self.phi], self.sigma, 1, 1, 0)
            .conditional_variance(horizon, 0)
            .expect("VAR")
    }
}

/// Least-squares AR(1) coefficient pooled over units.
pub fn fit_ar1(series: &[RawSeries]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for s in series {
        for t in 1..s.len() {
            let (x, y) = (s.get(t - 1, 0), s.get(t, 0));
            num += x * y;
            den += x * x;
        }
    }
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Forecaster factory: fit AR(1) by least squares, forecast `φ̂^h · y_M`.
pub fn ar1_forecaster(train: &Vec<RawSeries>, horizon: usize, _seed: u64) -> Result<Forecaster> {
    let phi = fit_ar1(train);
    let gain = math::pow(phi, horizon as f64);
    Ok(Box::new(move |w: &[f64]| gain * w[w.len() - 1]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_ar1_is_geometric() {
        let mut spec = ProcessSpec::ar(&[0.9], 0.0, 1, 30, 0);
        spec.burn_in = 0;
        spec.init = Some(vec![1.0]);
        let s = &spec.simulate().unwrap()[0];
        for t in 0..30 {
            let expect = math::pow(0.9, t as f64);
            assert!((s.values[t] - expect).abs() <= 1e-14 * expect);
        }
    }

    #[test]
    fn ar1_conditional_mean() {
        let spec = ProcessSpec::ar(&[0.9], 1.0, 1, 10, 0);
        let u = spec.conditional_mean(&[0.3, -1.0, 2.0], 3).unwrap();
        assert!((u[0] - 0.9f64 * 0.9 * 0.9 * 2.0).abs() < 1e-15);
    }

    #[test]
    fn deterministic_per_seed() {
        let a = ProcessSpec::default_var(3, 50, 9).simulate().unwrap();
        let b = ProcessSpec::default_var(3, 50, 9).simulate().unwrap();
        assert_eq!(a, b);
        let c = ProcessSpec::default_var(3, 50, 10).simulate().unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn unstable_spec_is_rejected() {
        assert!(matches!(ProcessSpec::ar(&[1.01], 1.0, 1, 10, 0).simulate(), Err(Error::Unstable(_))));
        assert!(matches!(ProcessSpec::ar(&[1.0], 1.0, 1, 10, 0).simulate(), Err(Error::Unstable(_))));
        let mut spec = ProcessSpec::ar(&[1.01], 1.0, 1, 10, 0);
        spec.allow_unstable = true;
        assert!(spec.simulate().is_ok());
    }

    #[test]
    fn spectral_radius_of_known_matrices() {
        // AR(2) with complex roots of modulus sqrt(0.5)
        let rho = spectral_radius(&companion(&[vec![1.0], vec![-0.5]], 1));
        assert!((rho - math::sqrt(0.5)).abs() < 1e-4);
        let rho = spectral_radius(&companion(&[vec![0.5]], 1));
        assert!((rho - 0.5).abs() < 1e-12);
    }

    #[test]
    fn default_var_is_stationary() {
        let ProcessKind::Var { lags, .. } = ProcessSpec::default_var(1, 1, 0).kind else {
            unreachable!()
        };
        assert!(spectral_radius(&companion(&lags, 3)) < 1.0);
    }

    #[test]
    fn ar1_autocovariance() {
        // γ(lag) = φ^lag σ² / (1 − φ²)
        let phi = 0.7;
        let s = &ProcessSpec::ar(&[phi], 1.0, 1, 10_000, 5).simulate().unwrap()[0];
        let mean = s.values.iter().sum::<f64>() / s.len() as f64;
        for lag in 0..3 {
            let n = s.len() - lag;
            let cov = (0..n)
                .map(|t| (s.values[t] - mean) * (s.values[t + lag] - mean))
                .sum::<f64>()
                / n as f64;
            let expect = math::pow(phi, lag as f64) / (1.0 - phi * phi);
            assert!((cov - expect).abs() <= 0.05 * expect, "lag {lag}: {cov} vs {expect}");
        }
    }

    #[test]
    fn ar1_noise_variance_closed_form() {
        let b = Ar1Benchmark {
            phi: 0.8,
            sigma: 0.5,
            train_units: 1,
            train_len: 10,
            window: 4,
            test_windows: 1,
        };
        // σ² (1 + φ² + φ⁴)
        let expect = 0.25 * (1.0 + 0.64 + 0.64 * 0.64);
        assert!((b.noise_variance(3) - expect).abs() < 1e-15);
    }
}
