//! Bias-variance bounds for direct, iterative and generative forecasting.
//!
//! The iterative bias grows through the quadratic recurrence
//! `b(k+1) = b(k) · (L1 + 1 + b(k) · L2)` with `b(1) = α·σ_I²`. The three
//! upper bounds on bias + variance are
//!
//! * `U_dir  = (N − 1)·β1 + σ_D²·β2`
//! * `U_iter = b(N)²`
//! * `U_genf = b(L)²·β0 + (N − L − 1)·β1 + σ_D²·β2`
//!
//! `b(0)` is taken to be 0, which makes `U_genf(0) = U_dir`.
//!
//! [`empirical_bv`] measures the noise / bias / variance split of an actual
//! forecaster by Monte-Carlo over independently drawn training sets.

use crate::metrics;
use crate::rng::derive_seed;
use crate::{Error, Result};
use alloc::boxed::Box;
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TheoryParams {
    /// First- and second-order Lipschitz constants of the iterative forecaster.
    pub l1: f64,
    pub l2: f64,
    /// Parameter-noise variances of the iterative and direct forecasters.
    pub sigma_i_sq: f64,
    pub sigma_d_sq: f64,
    pub beta0: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub alpha: f64,
    /// Prediction horizon.
    pub n: usize,
    /// Synthetic window length.
    pub l: usize,
}

impl TheoryParams {
    pub fn validate(&self) -> Result<()> {
        let reals = [
            self.l1,
            self.l2,
            self.sigma_i_sq,
            self.sigma_d_sq,
            self.beta0,
            self.beta1,
            self.beta2,
            self.alpha,
        ];
        if reals.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::invalid("theory parameters must be finite and nonnegative"));
        }
        if self.l > self.n {
            return Err(Error::invalid("synthetic window longer than horizon"));
        }
        Ok(())
    }
}

/// Evaluate the bias recurrence at step `k ≥ 1`.
pub fn b_alpha(k: usize, p: &TheoryParams) -> Result<f64> {
    if k < 1 {
        return Err(Error::invalid("b_alpha is defined for k >= 1"));
    }
    Ok(b_alpha_total(k, p))
}

// b(0) := 0 boundary convention.
fn b_alpha_total(k: usize, p: &TheoryParams) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let mut b = p.alpha * p.sigma_i_sq;
    for _ in 1..k {
        b *= p.l1 + 1.0 + b * p.l2;
    }
    b
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Bounds {
    pub u_dir: f64,
    pub u_iter: f64,
    pub u_genf: f64,
}

pub fn u_dir(p: &TheoryParams) -> f64 {
    (p.n as f64 - 1.0) * p.beta1 + p.sigma_d_sq * p.beta2
}

pub fn u_iter(p: &TheoryParams) -> f64 {
    let b = b_alpha_total(p.n, p);
    b * b
}

/// `U_genf` for an explicit synthetic window length `l < n`.
pub fn u_genf_at(p: &TheoryParams, l: usize) -> Result<f64> {
    if l >= p.n {
        return Err(Error::SyntheticWindow { l, n: p.n });
    }
    let b = b_alpha_total(l, p);
    Ok(b * b * p.beta0 + (p.n - l - 1) as f64 * p.beta1 + p.sigma_d_sq * p.beta2)
}

pub fn bounds(p: &TheoryParams) -> Result<Bounds> {
    p.validate()?;
    Ok(Bounds {
        u_dir: u_dir(p),
        u_iter: u_iter(p),
        u_genf: u_genf_at(p, p.l)?,
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CorollaryVerdict {
    /// The β0 threshold condition holds, so some `0 < L < N` beats both bounds.
    pub holds_some_l: bool,
    /// Additionally `U_dir ≈ U_iter`, so every `0 < L < N` wins.
    pub holds_all_l: bool,
    pub threshold: f64,
    /// Minimiser of `U_genf` over `1..N`, from the exhaustive grid.
    pub argmin_l: usize,
    /// `(L, U_genf(L))` for `L = 1..N−1`.
    pub grid: Vec<(usize, f64)>,
    pub u_dir: f64,
    pub u_iter: f64,
}

/// Evaluate the β0 threshold and the exhaustive `L` grid.
///
/// `rel_tol` realises the "≈" between `U_dir` and `U_iter` (default 1e-3).
pub fn corollary_check(p: &TheoryParams, rel_tol: f64) -> Result<CorollaryVerdict> {
    p.validate()?;
    if p.n < 2 {
        return Err(Error::invalid("corollary needs N >= 2"));
    }
    let b1 = b_alpha_total(1, p);
    let bn = b_alpha_total(p.n, p);
    let bn1 = b_alpha_total(p.n - 1, p);
    let first = p.beta1 / (b1 * b1);
    let second = (bn * bn - p.sigma_d_sq * p.beta2) / (bn1 * bn1);
    // NaN (0/0) compares false, which is the conservative verdict.
    let threshold = if first.is_nan() || second.is_nan() {
        f64::NAN
    } else {
        first.min(second)
    };
    let holds_some_l = p.beta0 < threshold;
    let ud = u_dir(p);
    let ui = u_iter(p);
    let scale = ud.abs().max(ui.abs());
    let close = (ud - ui).abs() <= rel_tol * scale;
    let grid: Vec<(usize, f64)> = (1..p.n)
        .map(|l| (l, u_genf_at(p, l).expect("l < n")))
        .collect();
    let argmin_l = grid
        .iter()
        .fold((0usize, f64::INFINITY), |best, &(l, u)| if u < best.1 { (l, u) } else { best })
        .0;
    Ok(CorollaryVerdict {
        holds_some_l,
        holds_all_l: holds_some_l && close,
        threshold,
        argmin_l,
        grid,
        u_dir: ud,
        u_iter: ui,
    })
}

/// The two renderings of the GenF bias + variance sum: the main-text form
/// `B_iter(L) + V_iter(L) + B_dir(N−L) + V_dir(N−L) + E[γ²]` and the form where
/// `E[γ²]` already carries the iterative part.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SGenF {
    pub with_iterative_terms: f64,
    pub gamma_form: f64,
}

pub fn s_genf(b_iter_l: f64, v_iter_l: f64, b_dir: f64, v_dir: f64, gamma_sq: f64) -> SGenF {
    SGenF {
        with_iterative_terms: b_iter_l + v_iter_l + b_dir + v_dir + gamma_sq,
        gamma_form: gamma_sq + b_dir + v_dir,
    }
}

/// Mean squared difference between predictions made from synthetic-tail and
/// true-tail windows; the empirical `E[γ²]`.
pub fn estimate_gamma_sq(pred_synthetic: &[f64], pred_true: &[f64]) -> Result<f64> {
    if pred_synthetic.is_empty() && pred_true.is_empty() {
        return Ok(0.0);
    }
    metrics::mse(pred_true, pred_synthetic)
}

/// Noise / bias / variance split of a forecaster's MSE.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BvEstimate {
    pub bias_sq: f64,
    pub variance: f64,
    pub noise: f64,
    pub mse: f64,
    pub ensemble_size: usize,
}

/// A process with an analytically known conditional mean.
pub trait KnownProcess {
    type Sample;
    /// Independent training set for ensemble member `seed`.
    fn training_set(&self, seed: u64) -> Self::Sample;
    /// Test inputs, their conditional means `u` and realised targets.
    fn test_set(&self, horizon: usize, seed: u64) -> TestSet;
    /// Variance of the target around its conditional mean.
    fn noise_variance(&self, horizon: usize) -> f64;
}

pub struct TestSet {
    /// Row-major test windows.
    pub windows: Vec<Vec<f64>>,
    pub conditional_mean: Vec<f64>,
    pub realised: Vec<f64>,
}

pub type Forecaster = Box<dyn Fn(&[f64]) -> f64>;

/// Train `ensemble` forecasters on independent training draws and split the
/// error on a common test set into bias², variance and the known noise term.
pub fn empirical_bv<P, F>(
    process: &P,
    mut factory: F,
    horizon: usize,
    ensemble: usize,
    seed: u64,
) -> Result<BvEstimate>
where
    P: KnownProcess,
    F: FnMut(&P::Sample, usize, u64) -> Result<Forecaster>,
{
    if ensemble < 2 {
        return Err(Error::invalid("ensemble size must be at least 2"));
    }
    let test = process.test_set(horizon, derive_seed(seed, 0));
    let n = test.windows.len();
    if n == 0 {
        return Err(Error::EmptyDataset("bias-variance test set"));
    }
    let mut preds = alloc::vec![0.0; ensemble * n];
    for r in 0..ensemble {
        let member_seed = derive_seed(seed, 1 + r as u64);
        let train = process.training_set(member_seed);
        let f = factory(&train, horizon, member_seed)?;
        for (i, w) in test.windows.iter().enumerate() {
            preds[r * n + i] = f(w);
        }
    }
    let mut bias_sq = 0.0;
    let mut variance = 0.0;
    let mut mse = 0.0;
    for i in 0..n {
        let col = (0..ensemble).map(|r| preds[r * n + i]);
        let mean = col.clone().sum::<f64>() / ensemble as f64;
        let var = col.clone().map(|p| (p - mean) * (p - mean)).sum::<f64>() / ensemble as f64;
        let err = col.map(|p| (test.realised[i] - p) * (test.realised[i] - p)).sum::<f64>() / ensemble as f64;
        let b = test.conditional_mean[i] - mean;
        bias_sq += b * b;
        variance += var;
        mse += err;
    }
    Ok(BvEstimate {
        bias_sq: bias_sq / n as f64,
        variance: variance / n as f64,
        noise: process.noise_variance(horizon),
        mse: mse / n as f64,
        ensemble_size: ensemble,
    })
}
