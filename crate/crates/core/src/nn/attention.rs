//! Scaled dot-product multi-head attention with an output projection.

use super::linear::Linear;
use super::params::ParamStore;
use super::tensor::{mat_mul, mat_mul_t, mat_t_mul, Mat};
use crate::math::{exp, sqrt};
use crate::{Error, Result};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AttentionConfig {
    pub heads: usize,
    pub d_model: usize,
    pub d_k: usize,
    pub causal: bool,
}

impl AttentionConfig {
    pub fn new(heads: usize, d_model: usize, causal: bool) -> Result<Self> {
        if heads == 0 || d_model % heads != 0 {
            return Err(Error::invalid(format!("{heads} heads do not divide d_model {d_model}")));
        }
        let cfg = AttentionConfig {
            heads,
            d_model,
            d_k: d_model / heads,
            causal,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d_k < 1 || self.heads * self.d_k != self.d_model {
            return Err(Error::invalid(format!(
                "heads·d_k = {}·{} must equal d_model {}",
                self.heads, self.d_k, self.d_model
            )));
        }
        Ok(())
    }
}

/// Which score entries are replaced by `−∞` before the softmax.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mask<'a> {
    None,
    /// Query `i` may attend to keys `0..=i`.
    Causal,
    /// `true` marks a valid key.
    KeyPadding(&'a [bool]),
}

impl Mask<'_> {
    #[inline]
    fn allows(&self, q: usize, k: usize) -> bool {
        match self {
            Mask::None => true,
            Mask::Causal => k <= q,
            Mask::KeyPadding(valid) => valid[k],
        }
    }
}

/// Numerically stable softmax. `−∞` entries get probability 0.
pub fn softmax(v: &[f64]) -> Vec<f64> {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return vec![f64::NAN; v.len()];
    }
    let e: Vec<f64> = v.iter().map(|&x| exp(x - max)).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiHeadAttention {
    pub cfg: AttentionConfig,
    pub wq: Linear,
    pub wk: Linear,
    pub wv: Linear,
    pub wo: Linear,
}

#[derive(Debug, Clone)]
pub struct AttnCache {
    q_in: Mat,
    kv_in: Mat,
    q: Mat,
    k: Mat,
    v: Mat,
    /// One `n_q×n_k` probability matrix per head.
    pub probs: Vec<Mat>,
    concat: Mat,
}

impl MultiHeadAttention {
    pub fn new(ps: &mut ParamStore, name: &str, cfg: AttentionConfig) -> Result<Self> {
        cfg.validate()?;
        let d = cfg.d_model;
        Ok(MultiHeadAttention {
            cfg,
            wq: Linear::new(ps, &format!("{name}.wq"), d, d, false),
            wk: Linear::new(ps, &format!("{name}.wk"), d, d, false),
            wv: Linear::new(ps, &format!("{name}.wv"), d, d, false),
            wo: Linear::new(ps, &format!("{name}.wo"), d, d, true),
        })
    }

    pub fn param_count(d_model: usize) -> usize {
        3 * Linear::param_count(d_model, d_model, false) + Linear::param_count(d_model, d_model, true)
    }

    /// Self-attention with the configured mask (causal or none).
    pub fn self_attend(&self, ps: &ParamStore, y: &Mat) -> Result<(Mat, AttnCache)> {
        let mask = if self.cfg.causal { Mask::Causal } else { Mask::None };
        self.forward(ps, y, y, mask)
    }

    pub fn forward(&self, ps: &ParamStore, q_in: &Mat, kv_in: &Mat, mask: Mask) -> Result<(Mat, AttnCache)> {
        if !q_in.is_finite() || !kv_in.is_finite() {
            return Err(Error::NonFinite("attention input"));
        }
        if let Mask::KeyPadding(valid) = mask {
            if valid.len() != kv_in.rows {
                return Err(Error::shape("attention mask", format!("{}", kv_in.rows), format!("{}", valid.len())));
            }
        }
        if matches!(mask, Mask::Causal) && q_in.rows > kv_in.rows {
            return Err(Error::invalid("causal mask needs at least as many keys as queries"));
        }
        let q = self.wq.forward(ps, q_in)?;
        let k = self.wk.forward(ps, kv_in)?;
        let v = self.wv.forward(ps, kv_in)?;
        let (nq, nk) = (q.rows, k.rows);
        let dk = self.cfg.d_k;
        let scale = 1.0 / sqrt(dk as f64);
        let mut concat = Mat::zeros(nq, self.cfg.d_model);
        let mut probs = Vec::with_capacity(self.cfg.heads);
        for h in 0..self.cfg.heads {
            let qh = q.cols_slice(h * dk, dk);
            let kh = k.cols_slice(h * dk, dk);
            let vh = v.cols_slice(h * dk, dk);
            let mut s = mat_mul_t(&qh, &kh);
            for i in 0..nq {
                let row = s.row_mut(i);
                for (j, val) in row.iter_mut().enumerate() {
                    *val = if mask.allows(i, j) { *val * scale } else { f64::NEG_INFINITY };
                }
                let p = softmax(row);
                if p.iter().any(|x| x.is_nan()) {
                    return Err(Error::invalid("attention row has no unmasked key"));
                }
                row.copy_from_slice(&p);
            }
            let _ = nk;
            concat.set_cols(h * dk, &mat_mul(&s, &vh));
            probs.push(s);
        }
        let out = self.wo.forward(ps, &concat)?;
        Ok((
            out,
            AttnCache {
                q_in: q_in.clone(),
                kv_in: kv_in.clone(),
                q,
                k,
                v,
                probs,
                concat,
            },
        ))
    }

    /// Returns `(∂/∂q_in, ∂/∂kv_in)`; for self-attention add the two.
    pub fn backward(&self, ps: &mut ParamStore, cache: &AttnCache, dy: &Mat) -> (Mat, Mat) {
        let dk = self.cfg.d_k;
        let scale = 1.0 / sqrt(dk as f64);
        let dconcat = self.wo.backward(ps, &cache.concat, dy);
        let mut dq = Mat::zeros(cache.q.rows, self.cfg.d_model);
        let mut dkm = Mat::zeros(cache.k.rows, self.cfg.d_model);
        let mut dv = Mat::zeros(cache.v.rows, self.cfg.d_model);
        for h in 0..self.cfg.heads {
            let p = &cache.probs[h];
            let doh = dconcat.cols_slice(h * dk, dk);
            let qh = cache.q.cols_slice(h * dk, dk);
            let kh = cache.k.cols_slice(h * dk, dk);
            let vh = cache.v.cols_slice(h * dk, dk);
            dv.add_cols(h * dk, &mat_t_mul(p, &doh));
            let dp = mat_mul_t(&doh, &vh);
            // dS = P ⊙ (dP − rowsum(dP ⊙ P)), then the 1/√d_k scale
            let mut ds = Mat::zeros(p.rows, p.cols);
            for i in 0..p.rows {
                let pr = p.row(i);
                let dr = dp.row(i);
                let dot: f64 = pr.iter().zip(dr).map(|(a, b)| a * b).sum();
                for (o, (a, b)) in ds.row_mut(i).iter_mut().zip(pr.iter().zip(dr)) {
                    *o = a * (b - dot) * scale;
                }
            }
            dq.add_cols(h * dk, &mat_mul(&ds, &kh));
            dkm.add_cols(h * dk, &mat_t_mul(&ds, &qh));
        }
        let dq_in = self.wq.backward(ps, &cache.q_in, &dq);
        let mut dkv_in = self.wk.backward(ps, &cache.kv_in, &dkm);
        dkv_in.add_assign(&self.wv.backward(ps, &cache.kv_in, &dv));
        (dq_in, dkv_in)
    }
}
