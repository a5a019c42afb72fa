//! Shallow transformer regressor.
//!
//! ```text
//! window (M×K) → √d·Linear(K→d) + sinusoidal positions
//!   → enc_layers × [causal self-attention, add & norm, FFN, add & norm]
//! learned query (1×d) + encoder output at the last valid position
//!   → dec_layers × [cross-attention over encoder output, add & norm, FFN, add & norm]
//!   → Linear(d→out_dim)
//! ```
//!
//! Norms are post-residual. Dropout is applied to the attention and FFN
//! outputs before each residual add, during training only.

use crate::data::WindowedDataset;
use crate::nn::{
    dropout, dropout_backward, relu_backward, relu_mat, sinusoidal, Adam, AttentionConfig, AttnCache, LayerNorm,
    Linear, LnCache, Mask, Mat, MultiHeadAttention, ParamId, ParamStore,
};
use crate::math::sqrt;
use crate::rng::{derive_seed, seeded, shuffle, SeededRng};
use crate::{Error, Result};
use alloc::format;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct PredConfig {
    pub enc_layers: usize,
    pub dec_layers: usize,
    pub heads: usize,
    pub d_model: usize,
    pub d_ff: usize,
    pub dropout: f64,
    pub lr: f64,
    pub batch: usize,
    pub epochs: usize,
    /// Early-stopping patience in epochs, on validation MSE.
    pub patience: usize,
    /// Training windows drawn per epoch; `None` uses all of them.
    pub epoch_samples: Option<usize>,
    /// Validation windows scored per epoch; `None` uses all of them.
    pub val_samples: Option<usize>,
}

impl Default for PredConfig {
    fn default() -> Self {
        PredConfig {
            enc_layers: 2,
            dec_layers: 2,
            heads: 3,
            d_model: 12,
            d_ff: 32,
            dropout: 0.1,
            lr: 0.001,
            batch: 64,
            epochs: 200,
            patience: 50,
            epoch_samples: None,
            val_samples: None,
        }
    }
}

impl PredConfig {
    pub fn validate(&self) -> Result<()> {
        AttentionConfig::new(self.heads, self.d_model, true)?;
        if self.batch < 1 || self.d_ff < 1 {
            return Err(Error::invalid("batch and d_ff must be >= 1"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::invalid("dropout must lie in [0, 1)"));
        }
        if !(self.lr >= 0.0) {
            return Err(Error::invalid("lr must be >= 0"));
        }
        Ok(())
    }

    pub fn param_count(&self, k: usize, out_dim: usize) -> usize {
        let d = self.d_model;
        let block = MultiHeadAttention::param_count(d)
            + 2 * LayerNorm::param_count(d)
            + Linear::param_count(d, self.d_ff, true)
            + Linear::param_count(self.d_ff, d, true);
        Linear::param_count(k, d, true) + (self.enc_layers + self.dec_layers) * block + d + Linear::param_count(d, out_dim, true)
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Block {
    attn: MultiHeadAttention,
    ln1: LayerNorm,
    ff1: Linear,
    ff2: Linear,
    ln2: LayerNorm,
}

struct BlockCache {
    attn: AttnCache,
    drop1: Option<Vec<f64>>,
    ln1: LnCache,
    x1: Mat,
    u: Mat,
    hidden: Mat,
    drop2: Option<Vec<f64>>,
    ln2: LnCache,
}

impl Block {
    fn new(ps: &mut ParamStore, name: &str, cfg: &PredConfig, causal: bool) -> Result<Self> {
        let d = cfg.d_model;
        Ok(Block {
            attn: MultiHeadAttention::new(ps, &format!("{name}.attn"), AttentionConfig::new(cfg.heads, d, causal)?)?,
            ln1: LayerNorm::new(ps, &format!("{name}.ln1"), d),
            ff1: Linear::new(ps, &format!("{name}.ff1"), d, cfg.d_ff, true),
            ff2: Linear::new(ps, &format!("{name}.ff2"), cfg.d_ff, d, true),
            ln2: LayerNorm::new(ps, &format!("{name}.ln2"), d),
        })
    }

    fn forward(
        &self,
        ps: &ParamStore,
        q: &Mat,
        kv: Option<&Mat>,
        mask: Mask,
        p_drop: f64,
        mut rng: Option<&mut SeededRng>,
    ) -> Result<(Mat, BlockCache)> {
        let (a, attn) = self.attn.forward(ps, q, kv.unwrap_or(q), mask)?;
        let (a, drop1) = dropout(&a, p_drop, rng.as_deref_mut());
        let (x1, ln1) = self.ln1.forward(ps, &q.add(&a));
        let u = self.ff1.forward(ps, &x1)?;
        let hidden = relu_mat(&u);
        let f = self.ff2.forward(ps, &hidden)?;
        let (f, drop2) = dropout(&f, p_drop, rng);
        let (x2, ln2) = self.ln2.forward(ps, &x1.add(&f));
        Ok((
            x2,
            BlockCache {
                attn,
                drop1,
                ln1,
                x1,
                u,
                hidden,
                drop2,
                ln2,
            },
        ))
    }

    /// Returns `(∂/∂q, ∂/∂kv)`; for self-attention `∂/∂kv` is already folded into `∂/∂q`.
    fn backward(&self, ps: &mut ParamStore, c: &BlockCache, dy: &Mat, self_attn: bool) -> (Mat, Option<Mat>) {
        let dr2 = self.ln2.backward(ps, &c.ln2, dy);
        let df = dropout_backward(&dr2, &c.drop2);
        let dhidden = self.ff2.backward(ps, &c.hidden, &df);
        let du = relu_backward(&c.u, &dhidden);
        let mut dx1 = self.ff1.backward(ps, &c.x1, &du);
        dx1.add_assign(&dr2);
        let dr1 = self.ln1.backward(ps, &c.ln1, &dx1);
        let da = dropout_backward(&dr1, &c.drop1);
        let (mut dq, dkv) = self.attn.backward(ps, &c.attn, &da);
        dq.add_assign(&dr1);
        if self_attn {
            dq.add_assign(&dkv);
            (dq, None)
        } else {
            (dq, Some(dkv))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transformer {
    pub cfg: PredConfig,
    pub ps: ParamStore,
    pub k: usize,
    pub out_dim: usize,
    embed: Linear,
    enc: Vec<Block>,
    query: ParamId,
    dec: Vec<Block>,
    head: Linear,
}

pub struct ForwardCache {
    x_in: Mat,
    enc: Vec<BlockCache>,
    enc_out: Mat,
    valid: usize,
    dec: Vec<BlockCache>,
    dec_out: Mat,
}

impl Transformer {
    pub fn new(k: usize, out_dim: usize, cfg: &PredConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut ps = ParamStore::new(seed);
        let d = cfg.d_model;
        let embed = Linear::new(&mut ps, "pred.embed", k, d, true);
        let enc = (0..cfg.enc_layers)
            .map(|l| Block::new(&mut ps, &format!("pred.enc{l}"), cfg, true))
            .collect::<Result<Vec<_>>>()?;
        let query = ps.add_uniform("pred.query", 1, d, d);
        let dec = (0..cfg.dec_layers)
            .map(|l| Block::new(&mut ps, &format!("pred.dec{l}"), cfg, false))
            .collect::<Result<Vec<_>>>()?;
        let head = Linear::new(&mut ps, "pred.head", d, out_dim, true);
        Ok(Transformer {
            cfg: cfg.clone(),
            ps,
            k,
            out_dim,
            embed,
            enc,
            query,
            dec,
            head,
        })
    }

    pub fn param_count(&self) -> usize {
        self.ps.param_count()
    }

    /// Inference on an `M×K` window (dropout off).
    pub fn predict(&self, window: &Mat) -> Result<Vec<f64>> {
        Ok(self.forward(window, window.rows, None)?.0)
    }

    /// Inference on a window whose rows past `valid` are padding. Padding rows
    /// never influence the output.
    pub fn predict_padded(&self, window: &Mat, valid: usize) -> Result<Vec<f64>> {
        Ok(self.forward(window, valid, None)?.0)
    }

    pub fn forward(&self, window: &Mat, valid: usize, mut rng: Option<&mut SeededRng>) -> Result<(Vec<f64>, ForwardCache)> {
        if window.cols != self.k || window.rows < 1 {
            return Err(Error::shape("predictor input", format!("Mx{}", self.k), format!("{}x{}", window.rows, window.cols)));
        }
        if valid < 1 || valid > window.rows {
            return Err(Error::invalid(format!("valid rows {valid} outside 1..={}", window.rows)));
        }
        if !window.is_finite() {
            return Err(Error::NonFinite("predictor input"));
        }
        let p = self.cfg.dropout;
        let scale = sqrt(self.cfg.d_model as f64);
        let mut x = self.embed.forward(&self.ps, window)?.map(|v| v * scale);
        x.add_assign(&sinusoidal(window.rows, self.cfg.d_model));
        let mut enc = Vec::with_capacity(self.enc.len());
        for b in &self.enc {
            let (y, c) = b.forward(&self.ps, &x, None, Mask::Causal, p, rng.as_deref_mut())?;
            enc.push(c);
            x = y;
        }
        let keys: Vec<bool> = (0..window.rows).map(|r| r < valid).collect();
        let mut q = Mat::row_vector(self.ps.value(self.query));
        for (qv, xv) in q.data.iter_mut().zip(x.row(valid - 1)) {
            *qv += xv;
        }
        let mut dec = Vec::with_capacity(self.dec.len());
        for b in &self.dec {
            let (y, c) = b.forward(&self.ps, &q, Some(&x), Mask::KeyPadding(&keys), p, rng.as_deref_mut())?;
            dec.push(c);
            q = y;
        }
        let out = self.head.forward(&self.ps, &q)?;
        Ok((
            out.data,
            ForwardCache {
                x_in: window.clone(),
                enc,
                enc_out: x,
                valid,
                dec,
                dec_out: q,
            },
        ))
    }

    /// Accumulate parameter gradients for the output adjoint `dout`; returns
    /// the gradient with respect to the input window.
    pub fn backward(&mut self, cache: &ForwardCache, dout: &[f64]) -> Mat {
        let ps = &mut self.ps;
        let mut dq = self.head.backward(ps, &cache.dec_out, &Mat::row_vector(dout));
        let mut denc = Mat::zeros(cache.enc_out.rows, cache.enc_out.cols);
        for (b, c) in self.dec.iter().zip(&cache.dec).rev() {
            let (dqi, dkv) = b.backward(ps, c, &dq, false);
            denc.add_assign(&dkv.expect("cross-attention"));
            dq = dqi;
        }
        for (g, d) in ps.grad_mut(self.query).iter_mut().zip(&dq.data) {
            *g += d;
        }
        for (g, d) in denc.row_mut(cache.valid - 1).iter_mut().zip(&dq.data) {
            *g += d;
        }
        let mut dx = denc;
        for (b, c) in self.enc.iter().zip(&cache.enc).rev() {
            dx = b.backward(ps, c, &dx, true).0;
        }
        let scale = sqrt(self.cfg.d_model as f64);
        self.embed.backward(ps, &cache.x_in, &dx.map(|v| v * scale))
    }
}

/// Inputs and regression targets for the predictor.
#[derive(Debug, Clone, PartialEq)]
pub struct PredDataset {
    pub m: usize,
    pub k: usize,
    pub out_dim: usize,
    /// `S × M × K`
    pub inputs: Vec<f64>,
    /// `S × out_dim`
    pub targets: Vec<f64>,
}

impl PredDataset {
    pub fn new(m: usize, k: usize, out_dim: usize) -> Self {
        PredDataset {
            m,
            k,
            out_dim,
            inputs: Vec::new(),
            targets: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.targets.len() / self.out_dim.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn push(&mut self, input: &[f64], target: &[f64]) -> Result<()> {
        if input.len() != self.m * self.k || target.len() != self.out_dim {
            return Err(Error::shape(
                "PredDataset::push",
                format!("{}x{} input, {} target", self.m, self.k, self.out_dim),
                format!("{} input, {} target", input.len(), target.len()),
            ));
        }
        self.inputs.extend_from_slice(input);
        self.targets.extend_from_slice(target);
        Ok(())
    }

    pub fn input(&self, s: usize) -> Mat {
        let w = self.m * self.k;
        Mat {
            rows: self.m,
            cols: self.k,
            data: self.inputs[s * w..(s + 1) * w].to_vec(),
        }
    }

    pub fn target(&self, s: usize) -> &[f64] {
        &self.targets[s * self.out_dim..(s + 1) * self.out_dim]
    }

    /// Windows with the target feature `horizon` steps ahead.
    pub fn direct(ds: &WindowedDataset, horizon: usize) -> Result<Self> {
        if horizon < 1 || horizon > ds.max_horizon {
            return Err(Error::invalid(format!("horizon {horizon} outside 1..={}", ds.max_horizon)));
        }
        let mut out = PredDataset::new(ds.m, ds.k, 1);
        for s in 0..ds.len() {
            out.push(ds.window(s), &[ds.target(s, horizon)])?;
        }
        Ok(out)
    }

    /// Windows with the full next observation as target.
    pub fn next_step(ds: &WindowedDataset) -> Result<Self> {
        let mut out = PredDataset::new(ds.m, ds.k, ds.k);
        for s in 0..ds.len() {
            out.push(ds.window(s), ds.future_row(s, 1))?;
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PredEpochLog {
    pub epoch: usize,
    pub train_mse: f64,
    /// NaN without a validation set.
    pub val_mse: f64,
}

/// Mean squared error of `model` over (a prefix of) `data`, dropout off.
pub fn evaluate_mse(model: &Transformer, data: &PredDataset, limit: Option<usize>) -> Result<f64> {
    let n = limit.map_or(data.len(), |l| l.min(data.len()));
    if n == 0 {
        return Err(Error::EmptyDataset("evaluation windows"));
    }
    let mut acc = 0.0;
    for s in 0..n {
        let y = model.predict(&data.input(s))?;
        acc += y.iter().zip(data.target(s)).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / data.out_dim as f64;
    }
    Ok(acc / n as f64)
}

/// Minimise MSE with Adam. With a validation set, training stops after
/// `patience` epochs without improvement and the best parameters are kept.
pub fn train_predictor(
    train: &PredDataset,
    val: Option<&PredDataset>,
    cfg: &PredConfig,
    seed: u64,
) -> Result<(Transformer, Vec<PredEpochLog>)> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::EmptyDataset("predictor training windows"));
    }
    let val = match val {
        Some(v) if !v.is_empty() => Some(v),
        _ => None,
    };
    let mut model = Transformer::new(train.k, train.out_dim, cfg, derive_seed(seed, 1))?;
    let mut rng = seeded(derive_seed(seed, 2));
    let mut opt = Adam::new(&model.ps, cfg.lr);
    let n = train.len();
    let per_epoch = cfg.epoch_samples.map_or(n, |e| e.min(n)).max(1);
    let mut order: Vec<usize> = (0..n).collect();
    let mut log = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, ParamStore)> = None;
    let mut since_best = 0usize;
    let od = train.out_dim as f64;
    for epoch in 0..cfg.epochs {
        shuffle(&mut rng, &mut order);
        let mut sse = 0.0;
        for chunk in order[..per_epoch].chunks(cfg.batch) {
            model.ps.zero_grads();
            let scale = 2.0 / (chunk.len() as f64 * od);
            for &s in chunk {
                let (y, cache) = model.forward(&train.input(s), train.m, Some(&mut rng))?;
                let t = train.target(s);
                let dout: Vec<f64> = y.iter().zip(t).map(|(a, b)| scale * (a - b)).collect();
                sse += y.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / od;
                model.backward(&cache, &dout);
            }
            opt.step(&mut model.ps);
        }
        let train_mse = sse / per_epoch as f64;
        if !train_mse.is_finite() {
            return Err(Error::NonFinite("predictor training loss"));
        }
        let val_mse = match val {
            Some(v) => evaluate_mse(&model, v, cfg.val_samples)?,
            None => f64::NAN,
        };
        log.push(PredEpochLog {
            epoch,
            train_mse,
            val_mse,
        });
        if val.is_some() {
            if best.as_ref().is_none_or(|(b, _)| val_mse < *b) {
                best = Some((val_mse, model.ps.clone()));
                since_best = 0;
            } else {
                since_best += 1;
                if since_best >= cfg.patience {
                    break;
                }
            }
        }
    }
    if let Some((_, ps)) = best {
        model.ps = ps;
    }
    Ok((model, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{grad_check_inputs, grad_check_params};
    use crate::rng::normal;

    fn rand_mat(rng: &mut SeededRng, r: usize, c: usize) -> Mat {
        Mat::from_vec(r, c, (0..r * c).map(|_| normal(rng)).collect()).unwrap()
    }

    #[test]
    fn default_param_count() {
        let cfg = PredConfig::default();
        let t = Transformer::new(3, 1, &cfg, 0).unwrap();
        assert_eq!(t.param_count(), cfg.param_count(3, 1));
        assert_eq!(t.param_count(), 5865);
    }

    #[test]
    fn config_validation() {
        let cfg = PredConfig {
            heads: 5,
            ..PredConfig::default()
        };
        assert!(cfg.validate().is_err());
        assert!(Transformer::new(3, 1, &cfg, 0).is_err());
    }

    #[test]
    fn scalar_output_and_determinism() {
        let mut rng = seeded(1);
        let cfg = PredConfig::default();
        let t = Transformer::new(3, 1, &cfg, 2).unwrap();
        for m in [1, 4, 20] {
            let w = rand_mat(&mut rng, m, 3);
            let y = t.predict(&w).unwrap();
            assert_eq!(y.len(), 1);
            assert_eq!(y, t.predict(&w).unwrap());
        }
        let mut w = rand_mat(&mut rng, 4, 3);
        w.data[2] = f64::NAN;
        assert_eq!(t.predict(&w).unwrap_err(), Error::NonFinite("predictor input"));
    }

    #[test]
    fn padding_rows_are_ignored() {
        let mut rng = seeded(3);
        let t = Transformer::new(2, 1, &PredConfig::default(), 3).unwrap();
        let mut w = rand_mat(&mut rng, 8, 2);
        for r in 5..8 {
            w.row_mut(r).fill(0.0);
        }
        let a = t.predict_padded(&w, 5).unwrap();
        for r in 5..8 {
            w.row_mut(r).copy_from_slice(&[7.0, -3.0]);
        }
        assert_eq!(a, t.predict_padded(&w, 5).unwrap());
        let short = Mat::from_vec(5, 2, w.data[..10].to_vec()).unwrap();
        assert!((a[0] - t.predict(&short).unwrap()[0]).abs() < 1e-12);
    }

    #[test]
    fn full_gradient_check() {
        for seed in 0..3 {
            let mut rng = seeded(20 + seed);
            let cfg = PredConfig {
                dropout: 0.0,
                ..PredConfig::default()
            };
            let mut t = Transformer::new(3, 1, &cfg, seed).unwrap();
            let w = rand_mat(&mut rng, 6, 3);
            t.ps.zero_grads();
            let (_, cache) = t.forward(&w, 6, None).unwrap();
            let dx = t.backward(&cache, &[1.0]);
            let frozen = t.clone();
            let rep = grad_check_params(&mut t.ps, |ps| {
                let mut m = frozen.clone();
                m.ps = ps.clone();
                m.predict(&w).unwrap()[0]
            });
            assert!(rep.max_rel_err <= 1e-4, "seed {seed}: {rep:?}");
            let mut x = w.data.clone();
            let rep = grad_check_inputs(&mut x, &dx.data, |x| frozen.predict(&Mat::from_vec(6, 3, x.to_vec()).unwrap()).unwrap()[0]);
            assert!(rep.max_rel_err <= 1e-4, "seed {seed}: {rep:?}");
        }
    }

    #[test]
    fn dropout_gradient_with_fixed_mask() {
        let mut rng = seeded(5);
        let mut t = Transformer::new(2, 2, &PredConfig::default(), 5).unwrap();
        let w = rand_mat(&mut rng, 4, 2);
        t.ps.zero_grads();
        let (_, cache) = t.forward(&w, 4, Some(&mut seeded(9))).unwrap();
        t.backward(&cache, &[0.3, -1.1]);
        let frozen = t.clone();
        let rep = grad_check_params(&mut t.ps, |ps| {
            let mut m = frozen.clone();
            m.ps = ps.clone();
            let y = m.forward(&w, 4, Some(&mut seeded(9))).unwrap().0;
            0.3 * y[0] - 1.1 * y[1]
        });
        assert!(rep.max_rel_err <= 1e-4, "{rep:?}");
    }

    #[test]
    fn learns_a_constant() {
        let mut rng = seeded(7);
        let mut data = PredDataset::new(5, 2, 1);
        for _ in 0..128 {
            data.push(&rand_mat(&mut rng, 5, 2).data, &[0.42]).unwrap();
        }
        let cfg = PredConfig {
            epochs: 200,
            dropout: 0.0,
            ..PredConfig::default()
        };
        let (model, log) = train_predictor(&data, None, &cfg, 1).unwrap();
        assert_eq!(log.len(), 200);
        assert!(evaluate_mse(&model, &data, None).unwrap() <= 1e-4);
    }

    #[test]
    fn empty_dataset_rejected() {
        let data = PredDataset::new(5, 2, 1);
        assert_eq!(
            train_predictor(&data, None, &PredConfig::default(), 0).unwrap_err(),
            Error::EmptyDataset("predictor training windows")
        );
    }
}
