//! Conditional Wasserstein GAN with gradient penalty for one-step generation.
//!
//! The generator reads the window `Y` with an LSTM, appends Gaussian noise to
//! the last hidden state and maps it through `Linear → tanh → Linear(K)` to a
//! synthetic next observation. The critic reads `[Y ⊕ x]` with its own LSTM
//! and scores the final hidden state with an unsquashed MLP head.
//!
//! Critic objective per batch:
//!
//! ```text
//! L_U = mean D(x̃|Y) − mean D(x|Y) + λ · mean (‖∇_x̂ D(x̂|Y)‖₂ − 1)²,  x̂ = ε x̃ + (1 − ε) x
//! ```
//!
//! Generator objective: `−mean D(x̃|Y) + η · mean ‖x − x̃‖₂` (or its square).

use crate::data::WindowedDataset;
use crate::math::sqrt;
use crate::nn::{Adam, Lstm, LstmStep, Mat, MlpCache, ParamStore, TanhMlp};
use crate::rng::{derive_seed, normal, seeded, shuffle, unit, SeededRng};
use crate::{Error, Result};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SupervisedNorm {
    /// `‖x − x̃‖₂`
    #[default]
    L2,
    /// `‖x − x̃‖₂²`
    L2Squared,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct GenConfig {
    pub noise_dim: usize,
    pub lstm_hidden: usize,
    /// Hidden widths of the generator head; the output layer of width K is appended.
    pub linear_widths: Vec<usize>,
    /// Hidden widths of the critic head; the scalar output layer is appended.
    pub critic_widths: Vec<usize>,
    pub lambda: f64,
    pub eta: f64,
    pub n_critic: usize,
    pub lr: f64,
    pub batch: usize,
    pub epochs: usize,
    /// Windows drawn per epoch; `None` uses every window.
    pub epoch_samples: Option<usize>,
    pub supervised_norm: SupervisedNorm,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            noise_dim: 8,
            lstm_hidden: 5,
            linear_widths: vec![12],
            critic_widths: vec![12, 4],
            lambda: 5.0,
            eta: 1.0,
            n_critic: 5,
            lr: 0.001,
            batch: 64,
            epochs: 200,
            epoch_samples: None,
            supervised_norm: SupervisedNorm::L2,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.eta >= 0.0) {
            return Err(Error::invalid("lambda and eta must be >= 0"));
        }
        if self.n_critic < 1 || self.batch < 1 || self.lstm_hidden < 1 {
            return Err(Error::invalid("n_critic, batch and lstm_hidden must be >= 1"));
        }
        if !(self.lr >= 0.0) {
            return Err(Error::invalid("lr must be >= 0"));
        }
        if self.linear_widths.contains(&0) || self.critic_widths.contains(&0) {
            return Err(Error::invalid("layer widths must be >= 1"));
        }
        Ok(())
    }

    pub fn generator_param_count(&self, k: usize) -> usize {
        let mut widths = self.linear_widths.clone();
        widths.push(k);
        Lstm::param_count(k, self.lstm_hidden) + TanhMlp::param_count(self.lstm_hidden + self.noise_dim, &widths)
    }

    pub fn critic_param_count(&self, k: usize) -> usize {
        let mut widths = self.critic_widths.clone();
        widths.push(1);
        Lstm::param_count(k, self.lstm_hidden) + TanhMlp::param_count(self.lstm_hidden, &widths)
    }
}

fn check_window(y: &Mat, k: usize) -> Result<()> {
    if y.rows < 1 || y.cols != k {
        return Err(Error::shape("window", format!("M>=1 rows of K={k}"), format!("{}x{}", y.rows, y.cols)));
    }
    if !y.is_finite() {
        return Err(Error::NonFinite("window"));
    }
    Ok(())
}

fn final_state(steps: &[LstmStep], d_h: usize) -> (Vec<f64>, Vec<f64>) {
    match steps.last() {
        Some(st) => (st.h.clone(), st.c.clone()),
        None => (vec![0.0; d_h], vec![0.0; d_h]),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub ps: ParamStore,
    pub lstm: Lstm,
    pub head: TanhMlp,
    pub k: usize,
    pub noise_dim: usize,
}

#[derive(Debug, Clone)]
pub struct GenCache {
    steps: Vec<LstmStep>,
    head: MlpCache,
}

impl Generator {
    pub fn new(k: usize, cfg: &GenConfig, seed: u64) -> Self {
        let mut ps = ParamStore::new(seed);
        let lstm = Lstm::new(&mut ps, "gen.lstm", k, cfg.lstm_hidden);
        let mut widths = cfg.linear_widths.clone();
        widths.push(k);
        let head = TanhMlp::new(&mut ps, "gen.head", cfg.lstm_hidden + cfg.noise_dim, &widths);
        Generator {
            ps,
            lstm,
            head,
            k,
            noise_dim: cfg.noise_dim,
        }
    }

    /// One synthetic next step `x̃_{M+1}` for window `y` and noise `z`.
    pub fn forward(&self, y: &Mat, z: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_cached(y, z)?.0)
    }

    pub fn forward_cached(&self, y: &Mat, z: &[f64]) -> Result<(Vec<f64>, GenCache)> {
        check_window(y, self.k)?;
        if z.len() != self.noise_dim {
            return Err(Error::shape("generator noise", format!("{}", self.noise_dim), format!("{}", z.len())));
        }
        let steps = self.lstm.forward_seq(&self.ps, y)?;
        let (h, _) = final_state(&steps, self.lstm.d_h);
        let mut input = h;
        input.extend_from_slice(z);
        let (out, head) = self.head.forward(&self.ps, &Mat::row_vector(&input))?;
        Ok((out.data, GenCache { steps, head }))
    }

    /// Accumulate parameter gradients for the adjoint `dout` of the output.
    pub fn backward(&mut self, cache: &GenCache, dout: &[f64]) {
        let dinput = self.head.backward(&mut self.ps, &cache.head, &Mat::row_vector(dout));
        let d_h = self.lstm.d_h;
        let dh = dinput.data[..d_h].to_vec();
        self.lstm.backward_seq(&mut self.ps, &cache.steps, &dh, &vec![0.0; d_h]);
    }

    pub fn draw_noise(&self, rng: &mut SeededRng) -> Vec<f64> {
        (0..self.noise_dim).map(|_| normal(rng)).collect()
    }
}

/// Anything that scores a candidate next step given its window.
pub trait CriticFn {
    fn score(&self, cond: &Mat, x: &[f64]) -> Result<f64>;

    /// `(D(x|cond), ∇_x D(x|cond))`.
    fn score_and_input_grad(&self, cond: &Mat, x: &[f64]) -> Result<(f64, Vec<f64>)>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct Critic {
    pub ps: ParamStore,
    pub lstm: Lstm,
    pub head: TanhMlp,
    pub k: usize,
}

struct LastStep {
    st: LstmStep,
    head: MlpCache,
    score: f64,
}

/// Scores and penalty of one critic training sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticSample {
    pub real_score: f64,
    pub fake_score: f64,
    pub penalty: f64,
}

impl Critic {
    pub fn new(k: usize, cfg: &GenConfig, seed: u64) -> Self {
        let mut ps = ParamStore::new(seed);
        let lstm = Lstm::new(&mut ps, "critic.lstm", k, cfg.lstm_hidden);
        let mut widths = cfg.critic_widths.clone();
        widths.push(1);
        let head = TanhMlp::new(&mut ps, "critic.head", cfg.lstm_hidden, &widths);
        Critic { ps, lstm, head, k }
    }

    /// Id of the scalar output bias.
    pub fn output_bias(&self) -> crate::nn::ParamId {
        self.head.layers.last().and_then(|l| l.b).expect("critic head has a bias")
    }

    fn last_step(&self, h: &[f64], c: &[f64], x: &[f64]) -> Result<LastStep> {
        if x.len() != self.k {
            return Err(Error::shape("critic candidate", format!("{}", self.k), format!("{}", x.len())));
        }
        let st = self.lstm.step(&self.ps, x, h, c)?;
        let (y, head) = self.head.forward(&self.ps, &Mat::row_vector(&st.h))?;
        Ok(LastStep { st, head, score: y.data[0] })
    }

    fn input_grad_of(&self, last: &LastStep) -> Vec<f64> {
        let dh = self.head.backward_input(&self.ps, &last.head, &Mat::row_vector(&[1.0]));
        let zeros = vec![0.0; self.lstm.d_h];
        self.lstm.step_backward_input(&self.ps, &last.st, &dh.data, &zeros).0
    }

    /// Accumulate the gradient of
    /// `w_real·D(real) + w_fake·D(fake) + w_pen·(‖∇D(x̂)‖ − 1)²`
    /// into the critic's gradient slots, with `x̂ = eps·fake + (1 − eps)·real`.
    ///
    /// The window prefix runs once and is shared by the three candidates.
    #[allow(clippy::too_many_arguments)]
    pub fn accumulate_sample(
        &mut self,
        cond: &Mat,
        real: &[f64],
        fake: &[f64],
        eps: f64,
        w_real: f64,
        w_fake: f64,
        w_pen: f64,
    ) -> Result<CriticSample> {
        check_window(cond, self.k)?;
        let d_h = self.lstm.d_h;
        let zeros = vec![0.0; d_h];
        let prefix = self.lstm.forward_seq(&self.ps, cond)?;
        let (h, c) = final_state(&prefix, d_h);
        let mut dh_sum = vec![0.0; d_h];
        let mut dc_sum = vec![0.0; d_h];
        let mut add = |a: &[f64], b: &[f64]| {
            for j in 0..d_h {
                dh_sum[j] += a[j];
                dc_sum[j] += b[j];
            }
        };

        let mut scores = [0.0; 2];
        for (slot, (x, w)) in [(real, w_real), (fake, w_fake)].into_iter().enumerate() {
            let last = self.last_step(&h, &c, x)?;
            scores[slot] = last.score;
            if w != 0.0 {
                let dh = self.head.backward(&mut self.ps, &last.head, &Mat::row_vector(&[w]));
                let (_, dhp, dcp) = self.lstm.step_backward(&mut self.ps, &last.st, &dh.data, &zeros);
                add(&dhp, &dcp);
            }
        }

        let x_hat = interpolate(real, fake, eps);
        let last = self.last_step(&h, &c, &x_hat)?;
        let g = self.input_grad_of(&last);
        let norm = sqrt(g.iter().map(|v| v * v).sum());
        let penalty = (norm - 1.0) * (norm - 1.0);
        if w_pen != 0.0 && norm > 0.0 {
            // d/dθ (‖g‖ − 1)² = ∂/∂θ (v · g) with v = 2(‖g‖ − 1) g/‖g‖ held fixed,
            // and v · g is the directional derivative of D along v.
            let s = 2.0 * (norm - 1.0) / norm;
            let v: Vec<f64> = g.iter().map(|x| s * x).collect();
            let tg = self.lstm.step_tangent(&self.ps, &last.st, &v, &zeros, &zeros);
            let mtg = self.head.tangent(&self.ps, &last.head, &Mat::row_vector(&tg.h_dot));
            let (dh, dh_dot) =
                self.head
                    .tangent_backward(&mut self.ps, &last.head, &mtg, &Mat::row_vector(&[0.0]), &Mat::row_vector(&[w_pen]));
            let adj = self
                .lstm
                .step_tangent_backward(&mut self.ps, &last.st, &tg, &dh.data, &zeros, &dh_dot.data, &zeros);
            add(&adj.dh, &adj.dc);
        }
        self.lstm.backward_seq(&mut self.ps, &prefix, &dh_sum, &dc_sum);
        Ok(CriticSample {
            real_score: scores[0],
            fake_score: scores[1],
            penalty,
        })
    }
}

impl CriticFn for Critic {
    fn score(&self, cond: &Mat, x: &[f64]) -> Result<f64> {
        check_window(cond, self.k)?;
        let prefix = self.lstm.forward_seq(&self.ps, cond)?;
        let (h, c) = final_state(&prefix, self.lstm.d_h);
        Ok(self.last_step(&h, &c, x)?.score)
    }

    fn score_and_input_grad(&self, cond: &Mat, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        check_window(cond, self.k)?;
        let prefix = self.lstm.forward_seq(&self.ps, cond)?;
        let (h, c) = final_state(&prefix, self.lstm.d_h);
        let last = self.last_step(&h, &c, x)?;
        Ok((last.score, self.input_grad_of(&last)))
    }
}

/// `x̂ = eps·fake + (1 − eps)·real`.
pub fn interpolate(real: &[f64], fake: &[f64], eps: f64) -> Vec<f64> {
    real.iter().zip(fake).map(|(r, f)| eps * f + (1.0 - eps) * r).collect()
}

/// `(‖∇_x̂ D(x̂|Y)‖₂ − 1)²` at the interpolate of `real` and `fake`.
pub fn gradient_penalty<C: CriticFn + ?Sized>(critic: &C, real: &[f64], fake: &[f64], cond: &Mat, eps: f64) -> Result<f64> {
    if real.len() != fake.len() {
        return Err(Error::shape("gradient_penalty", format!("{}", real.len()), format!("{}", fake.len())));
    }
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::invalid("eps must lie in [0, 1]"));
    }
    let (_, g) = critic.score_and_input_grad(cond, &interpolate(real, fake, eps))?;
    let norm = sqrt(g.iter().map(|v| v * v).sum());
    Ok((norm - 1.0) * (norm - 1.0))
}

/// One batch of conditioned real/fake pairs with their interpolation draws.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GanBatch {
    pub conds: Vec<Mat>,
    pub reals: Vec<Vec<f64>>,
    pub fakes: Vec<Vec<f64>>,
    pub eps: Vec<f64>,
}

impl GanBatch {
    pub fn len(&self) -> usize {
        self.conds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.conds.is_empty()
    }

    fn check(&self) -> Result<()> {
        let n = self.conds.len();
        if self.reals.len() != n || self.fakes.len() != n || self.eps.len() != n {
            return Err(Error::shape("GanBatch", format!("{n} entries"), "mismatched lengths"));
        }
        if n == 0 {
            return Err(Error::EmptyDataset("gan batch"));
        }
        Ok(())
    }
}

/// Components of the critic objective for one batch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnsupervisedLoss {
    /// `mean D(fake) − mean D(real)`
    pub wasserstein: f64,
    pub penalty_mean: f64,
    /// `wasserstein + λ · penalty_mean`
    pub total: f64,
}

pub fn loss_unsupervised<C: CriticFn + ?Sized>(critic: &C, batch: &GanBatch, lambda: f64) -> Result<UnsupervisedLoss> {
    batch.check()?;
    let n = batch.len() as f64;
    let mut real = 0.0;
    let mut fake = 0.0;
    let mut pen = 0.0;
    for s in 0..batch.len() {
        real += critic.score(&batch.conds[s], &batch.reals[s])?;
        fake += critic.score(&batch.conds[s], &batch.fakes[s])?;
        if lambda != 0.0 {
            pen += gradient_penalty(critic, &batch.reals[s], &batch.fakes[s], &batch.conds[s], batch.eps[s])?;
        }
    }
    let wasserstein = fake / n - real / n;
    let penalty_mean = pen / n;
    Ok(UnsupervisedLoss {
        wasserstein,
        penalty_mean,
        total: wasserstein + lambda * penalty_mean,
    })
}

/// Mean distance between real and generated steps under `norm`.
pub fn supervised_term(reals: &[Vec<f64>], fakes: &[Vec<f64>], norm: SupervisedNorm) -> Result<f64> {
    if reals.len() != fakes.len() || reals.is_empty() {
        return Err(Error::shape("supervised_term", format!("{}", reals.len()), format!("{}", fakes.len())));
    }
    let total: f64 = reals
        .iter()
        .zip(fakes)
        .map(|(r, f)| {
            let sq: f64 = r.iter().zip(f).map(|(a, b)| (a - b) * (a - b)).sum();
            match norm {
                SupervisedNorm::L2 => sqrt(sq),
                SupervisedNorm::L2Squared => sq,
            }
        })
        .sum();
    Ok(total / reals.len() as f64)
}

/// `L_S = L_U + η · mean ‖x − x̃‖`.
pub fn loss_supervised(l_u: f64, reals: &[Vec<f64>], fakes: &[Vec<f64>], eta: f64, norm: SupervisedNorm) -> Result<f64> {
    Ok(l_u + eta * supervised_term(reals, fakes, norm)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EpochLog {
    pub epoch: usize,
    /// Mean critic objective `L_U` over the epoch's critic batches.
    pub critic_loss: f64,
    /// Mean generator objective `−D(x̃) + η·sup`.
    pub gen_loss: f64,
    pub supervised_term: f64,
    pub penalty_mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cwgan {
    pub cfg: GenConfig,
    pub generator: Generator,
    pub critic: Critic,
}

impl Cwgan {
    pub fn new(k: usize, cfg: &GenConfig, seed: u64) -> Self {
        Cwgan {
            cfg: cfg.clone(),
            generator: Generator::new(k, cfg, derive_seed(seed, 1)),
            critic: Critic::new(k, cfg, derive_seed(seed, 2)),
        }
    }

    pub fn param_counts(&self) -> (usize, usize) {
        (self.generator.ps.param_count(), self.critic.ps.param_count())
    }
}

fn window_mat(ds: &WindowedDataset, s: usize) -> Mat {
    Mat {
        rows: ds.m,
        cols: ds.k,
        data: ds.window(s).to_vec(),
    }
}

/// Train on `(window, next observation)` pairs from `ds`.
///
/// Each generator update is preceded by `n_critic` critic updates on freshly
/// drawn batches. One epoch walks a permutation of the (optionally
/// subsampled) windows in generator batches.
pub fn train_cwgan(ds: &WindowedDataset, cfg: &GenConfig, seed: u64) -> Result<(Cwgan, Vec<EpochLog>)> {
    cfg.validate()?;
    if ds.is_empty() {
        return Err(Error::EmptyDataset("generator training windows"));
    }
    let mut gan = Cwgan::new(ds.k, cfg, seed);
    let mut rng = seeded(derive_seed(seed, 3));
    let mut opt_g = Adam::new(&gan.generator.ps, cfg.lr);
    let mut opt_c = Adam::new(&gan.critic.ps, cfg.lr);
    let n = ds.len();
    let per_epoch = cfg.epoch_samples.map_or(n, |e| e.min(n)).max(1);
    let b = cfg.batch;
    let mut order: Vec<usize> = (0..n).collect();
    let mut log = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        shuffle(&mut rng, &mut order);
        let mut critic_sum = 0.0;
        let mut pen_sum = 0.0;
        let mut critic_batches = 0usize;
        let mut gen_sum = 0.0;
        let mut sup_sum = 0.0;
        let mut gen_samples = 0usize;
        for chunk in order[..per_epoch].chunks(b) {
            for _ in 0..cfg.n_critic {
                gan.critic.ps.zero_grads();
                let inv = 1.0 / b as f64;
                let (mut wd, mut pen) = (0.0, 0.0);
                for _ in 0..b {
                    let s = rng.random_range(0..n);
                    let y = window_mat(ds, s);
                    let z = gan.generator.draw_noise(&mut rng);
                    let fake = gan.generator.forward(&y, &z)?;
                    let eps = unit(&mut rng);
                    let out =
                        gan.critic
                            .accumulate_sample(&y, ds.future_row(s, 1), &fake, eps, -inv, inv, cfg.lambda * inv)?;
                    wd += out.fake_score - out.real_score;
                    pen += out.penalty;
                }
                opt_c.step(&mut gan.critic.ps);
                critic_sum += (wd + cfg.lambda * pen) * inv;
                pen_sum += pen * inv;
                critic_batches += 1;
            }

            gan.generator.ps.zero_grads();
            let inv = 1.0 / chunk.len() as f64;
            for &s in chunk {
                let y = window_mat(ds, s);
                let real = ds.future_row(s, 1);
                let z = gan.generator.draw_noise(&mut rng);
                let (fake, cache) = gan.generator.forward_cached(&y, &z)?;
                let (score, grad) = gan.critic.score_and_input_grad(&y, &fake)?;
                let mut dout: Vec<f64> = grad.iter().map(|g| -g * inv).collect();
                let diff: Vec<f64> = fake.iter().zip(real).map(|(f, r)| f - r).collect();
                let sq: f64 = diff.iter().map(|d| d * d).sum();
                let sup = match cfg.supervised_norm {
                    SupervisedNorm::L2 => {
                        let norm = sqrt(sq);
                        if norm > 0.0 {
                            for (d, v) in dout.iter_mut().zip(&diff) {
                                *d += cfg.eta * inv * v / norm;
                            }
                        }
                        norm
                    }
                    SupervisedNorm::L2Squared => {
                        for (d, v) in dout.iter_mut().zip(&diff) {
                            *d += 2.0 * cfg.eta * inv * v;
                        }
                        sq
                    }
                };
                gan.generator.backward(&cache, &dout);
                gen_sum += -score + cfg.eta * sup;
                sup_sum += sup;
                gen_samples += 1;
            }
            opt_g.step(&mut gan.generator.ps);
        }
        let cb = critic_batches.max(1) as f64;
        let gs = gen_samples.max(1) as f64;
        log.push(EpochLog {
            epoch,
            critic_loss: critic_sum / cb,
            gen_loss: gen_sum / gs,
            supervised_term: sup_sum / gs,
            penalty_mean: pen_sum / cb,
        });
    }
    Ok((gan, log))
}

/// Generated rows and the window after the last prune-and-append.
#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    /// `L × K`
    pub block: Mat,
    /// `M × K`
    pub window: Mat,
}

/// Roll the generator forward `l` steps: each step drops the oldest row and
/// appends the new synthetic one. Noise comes from `noise_seed` alone.
pub fn generate_recursive(generator: &Generator, window: &Mat, l: usize, noise_seed: u64) -> Result<Generated> {
    check_window(window, generator.k)?;
    let (m, k) = (window.rows, window.cols);
    let mut rng = seeded(noise_seed);
    let mut cur = window.clone();
    let mut block = Mat::zeros(l, k);
    for j in 0..l {
        let z = generator.draw_noise(&mut rng);
        let x = generator.forward(&cur, &z)?;
        block.row_mut(j).copy_from_slice(&x);
        cur.data.drain(..k);
        cur.data.extend_from_slice(&x);
        debug_assert_eq!(cur.data.len(), m * k);
    }
    Ok(Generated { block, window: cur })
}
