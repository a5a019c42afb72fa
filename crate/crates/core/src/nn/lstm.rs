//! LSTM cell with gate order `[i, f, g, o]`:
//!
//! ```text
//! z = [x, h]W + b,  i = σ(z_i), f = σ(z_f), g = tanh(z_g), o = σ(z_o)
//! c' = f⊙c + i⊙g,   h' = o⊙tanh(c')
//! ```
//!
//! Besides the usual forward/backward pair the cell has a tangent pass
//! (forward-mode derivative along `(ẋ, ḣ, ċ)`) and its reverse. The critic's
//! gradient penalty differentiates the input gradient, and that is exactly
//! reverse-over-forward through the last step.

use super::params::{ParamId, ParamStore};
use super::tensor::{acc_at_b, matmul, matmul_bt, Mat};
use crate::math::{sigmoid, tanh};
use crate::{Error, Result};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lstm {
    pub w: ParamId,
    pub b: ParamId,
    pub d_in: usize,
    pub d_h: usize,
}

/// Everything one step keeps for its backward pass.
#[derive(Debug, Clone)]
pub struct LstmStep {
    pub xh: Vec<f64>,
    pub i: Vec<f64>,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub o: Vec<f64>,
    pub c_prev: Vec<f64>,
    pub c: Vec<f64>,
    pub tc: Vec<f64>,
    pub h: Vec<f64>,
}

/// Tangents of one step along a direction `(ẋ, ḣ, ċ)`.
#[derive(Debug, Clone)]
pub struct LstmTangent {
    pub xh_dot: Vec<f64>,
    pub z_dot: Vec<f64>,
    pub c_prev_dot: Vec<f64>,
    pub i_dot: Vec<f64>,
    pub f_dot: Vec<f64>,
    pub g_dot: Vec<f64>,
    pub o_dot: Vec<f64>,
    pub c_dot: Vec<f64>,
    pub tc_dot: Vec<f64>,
    pub h_dot: Vec<f64>,
}

/// Adjoints produced by [`Lstm::step_tangent_backward`].
#[derive(Debug, Clone)]
pub struct TangentAdjoints {
    pub dx: Vec<f64>,
    pub dh: Vec<f64>,
    pub dc: Vec<f64>,
    pub dx_dot: Vec<f64>,
    pub dh_dot: Vec<f64>,
    pub dc_dot: Vec<f64>,
}

impl Lstm {
    pub fn new(ps: &mut ParamStore, name: &str, d_in: usize, d_h: usize) -> Self {
        let fan = d_in + d_h;
        let w = ps.add_uniform(&format!("{name}.w"), fan, 4 * d_h, fan);
        let b = ps.add_uniform(&format!("{name}.b"), 1, 4 * d_h, fan);
        Lstm { w, b, d_in, d_h }
    }

    pub fn param_count(d_in: usize, d_h: usize) -> usize {
        4 * ((d_in + d_h) * d_h + d_h)
    }

    pub fn step(&self, ps: &ParamStore, x: &[f64], h: &[f64], c: &[f64]) -> Result<LstmStep> {
        if x.len() != self.d_in || h.len() != self.d_h || c.len() != self.d_h {
            return Err(Error::shape(
                "lstm_step",
                format!("x {}, h {}, c {}", self.d_in, self.d_h, self.d_h),
                format!("x {}, h {}, c {}", x.len(), h.len(), c.len()),
            ));
        }
        let d = self.d_h;
        let mut xh = Vec::with_capacity(self.d_in + d);
        xh.extend_from_slice(x);
        xh.extend_from_slice(h);
        let mut z = matmul(&Mat::row_vector(&xh), ps.value(self.w), 4 * d).data;
        for (zv, bv) in z.iter_mut().zip(ps.value(self.b)) {
            *zv += bv;
        }
        let i: Vec<f64> = z[..d].iter().map(|&v| sigmoid(v)).collect();
        let f: Vec<f64> = z[d..2 * d].iter().map(|&v| sigmoid(v)).collect();
        let g: Vec<f64> = z[2 * d..3 * d].iter().map(|&v| tanh(v)).collect();
        let o: Vec<f64> = z[3 * d..].iter().map(|&v| sigmoid(v)).collect();
        let c_new: Vec<f64> = (0..d).map(|k| f[k] * c[k] + i[k] * g[k]).collect();
        let tc: Vec<f64> = c_new.iter().map(|&v| tanh(v)).collect();
        let h_new: Vec<f64> = (0..d).map(|k| o[k] * tc[k]).collect();
        Ok(LstmStep {
            xh,
            i,
            f,
            g,
            o,
            c_prev: c.to_vec(),
            c: c_new,
            tc,
            h: h_new,
        })
    }

    /// Backward through one step given `∂/∂h'` and `∂/∂c'`.
    /// Returns `(∂/∂x, ∂/∂h, ∂/∂c)` and accumulates parameter gradients.
    pub fn step_backward(
        &self,
        ps: &mut ParamStore,
        st: &LstmStep,
        dh: &[f64],
        dc: &[f64],
    ) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let (dz, dc_prev) = self.gate_adjoints(st, dh, dc);
        let dxh = self.accumulate(ps, &st.xh, &dz, true);
        (dxh[..self.d_in].to_vec(), dxh[self.d_in..].to_vec(), dc_prev)
    }

    /// Same as [`Lstm::step_backward`] but leaves parameter gradients alone.
    pub fn step_backward_input(
        &self,
        ps: &ParamStore,
        st: &LstmStep,
        dh: &[f64],
        dc: &[f64],
    ) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let (dz, dc_prev) = self.gate_adjoints(st, dh, dc);
        let dxh = matmul_bt(&Mat::row_vector(&dz), ps.value(self.w), self.d_in + self.d_h).data;
        (dxh[..self.d_in].to_vec(), dxh[self.d_in..].to_vec(), dc_prev)
    }

    fn gate_adjoints(&self, st: &LstmStep, dh: &[f64], dc: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let d = self.d_h;
        let mut dz = vec![0.0; 4 * d];
        let mut dc_prev = vec![0.0; d];
        for k in 0..d {
            let dct = dc[k] + dh[k] * st.o[k] * (1.0 - st.tc[k] * st.tc[k]);
            let (i, f, g, o) = (st.i[k], st.f[k], st.g[k], st.o[k]);
            dz[k] = dct * g * i * (1.0 - i);
            dz[d + k] = dct * st.c_prev[k] * f * (1.0 - f);
            dz[2 * d + k] = dct * i * (1.0 - g * g);
            dz[3 * d + k] = dh[k] * st.tc[k] * o * (1.0 - o);
            dc_prev[k] = dct * f;
        }
        (dz, dc_prev)
    }

    /// `W̄ += xhᵀ dz`, optionally `b̄ += dz`; returns `dz Wᵀ`.
    fn accumulate(&self, ps: &mut ParamStore, xh: &[f64], dz: &[f64], bias: bool) -> Vec<f64> {
        let dz_m = Mat::row_vector(dz);
        acc_at_b(ps.grad_mut(self.w), &Mat::row_vector(xh), &dz_m);
        if bias {
            for (g, v) in ps.grad_mut(self.b).iter_mut().zip(dz) {
                *g += v;
            }
        }
        matmul_bt(&dz_m, ps.value(self.w), self.d_in + self.d_h).data
    }

    /// Run from a zero state over the rows of `xs`.
    pub fn forward_seq(&self, ps: &ParamStore, xs: &Mat) -> Result<Vec<LstmStep>> {
        self.forward_seq_from(ps, xs, &vec![0.0; self.d_h], &vec![0.0; self.d_h])
    }

    pub fn forward_seq_from(&self, ps: &ParamStore, xs: &Mat, h0: &[f64], c0: &[f64]) -> Result<Vec<LstmStep>> {
        let mut steps: Vec<LstmStep> = Vec::with_capacity(xs.rows);
        for t in 0..xs.rows {
            let st = match steps.last() {
                Some(prev) => self.step(ps, xs.row(t), &prev.h, &prev.c)?,
                None => self.step(ps, xs.row(t), h0, c0)?,
            };
            steps.push(st);
        }
        Ok(steps)
    }

    /// Backpropagate adjoints of the final `(h, c)` through every step.
    /// Returns per-step input gradients and the adjoints of the initial state.
    pub fn backward_seq(
        &self,
        ps: &mut ParamStore,
        steps: &[LstmStep],
        dh_last: &[f64],
        dc_last: &[f64],
    ) -> (Mat, Vec<f64>, Vec<f64>) {
        let mut dxs = Mat::zeros(steps.len(), self.d_in);
        let mut dh = dh_last.to_vec();
        let mut dc = dc_last.to_vec();
        for (t, st) in steps.iter().enumerate().rev() {
            let (dx, dh_prev, dc_prev) = self.step_backward(ps, st, &dh, &dc);
            dxs.row_mut(t).copy_from_slice(&dx);
            dh = dh_prev;
            dc = dc_prev;
        }
        (dxs, dh, dc)
    }

    /// Directional derivative of one step along `(ẋ, ḣ, ċ)`.
    pub fn step_tangent(&self, ps: &ParamStore, st: &LstmStep, x_dot: &[f64], h_dot: &[f64], c_dot: &[f64]) -> LstmTangent {
        let d = self.d_h;
        let mut xh_dot = Vec::with_capacity(self.d_in + d);
        xh_dot.extend_from_slice(x_dot);
        xh_dot.extend_from_slice(h_dot);
        let z_dot = matmul(&Mat::row_vector(&xh_dot), ps.value(self.w), 4 * d).data;
        let mut t = LstmTangent {
            xh_dot,
            c_prev_dot: c_dot.to_vec(),
            i_dot: vec![0.0; d],
            f_dot: vec![0.0; d],
            g_dot: vec![0.0; d],
            o_dot: vec![0.0; d],
            c_dot: vec![0.0; d],
            tc_dot: vec![0.0; d],
            h_dot: vec![0.0; d],
            z_dot,
        };
        for k in 0..d {
            let (i, f, g, o) = (st.i[k], st.f[k], st.g[k], st.o[k]);
            t.i_dot[k] = i * (1.0 - i) * t.z_dot[k];
            t.f_dot[k] = f * (1.0 - f) * t.z_dot[d + k];
            t.g_dot[k] = (1.0 - g * g) * t.z_dot[2 * d + k];
            t.o_dot[k] = o * (1.0 - o) * t.z_dot[3 * d + k];
            t.c_dot[k] = t.f_dot[k] * st.c_prev[k] + f * c_dot[k] + t.i_dot[k] * g + i * t.g_dot[k];
            t.tc_dot[k] = (1.0 - st.tc[k] * st.tc[k]) * t.c_dot[k];
            t.h_dot[k] = t.o_dot[k] * st.tc[k] + o * t.tc_dot[k];
        }
        t
    }

    /// Reverse pass through the primal and tangent outputs of one step.
    ///
    /// `dh`, `dc` are adjoints of `h'`, `c'`; `dh_dot`, `dc_dot` of `ḣ'`, `ċ'`.
    /// Parameter gradients are accumulated into the store.
    #[allow(clippy::too_many_arguments)]
    pub fn step_tangent_backward(
        &self,
        ps: &mut ParamStore,
        st: &LstmStep,
        tg: &LstmTangent,
        dh: &[f64],
        dc: &[f64],
        dh_dot: &[f64],
        dc_dot: &[f64],
    ) -> TangentAdjoints {
        let d = self.d_h;
        let mut dz = vec![0.0; 4 * d];
        let mut dz_dot = vec![0.0; 4 * d];
        let mut dc_prev = vec![0.0; d];
        let mut dc_prev_dot = vec![0.0; d];
        for k in 0..d {
            let (i, f, g, o, tc) = (st.i[k], st.f[k], st.g[k], st.o[k], st.tc[k]);
            let (zi, zf, zg, zo) = (tg.z_dot[k], tg.z_dot[d + k], tg.z_dot[2 * d + k], tg.z_dot[3 * d + k]);
            let cp = st.c_prev[k];
            let cp_dot = tg.c_prev_dot[k];
            // h' = o τ and ḣ' = ȯ τ + o τ̇
            let o_dot_b = dh_dot[k] * tc;
            let mut tau_b = dh_dot[k] * tg.o_dot[k] + dh[k] * o;
            let mut o_b = dh_dot[k] * tg.tc_dot[k] + dh[k] * tc;
            let tau_dot_b = dh_dot[k] * o;
            // τ̇ = (1 − τ²) ċ'
            let c_dot_b = dc_dot[k] + tau_dot_b * (1.0 - tc * tc);
            tau_b += tau_dot_b * (-2.0 * tc * tg.c_dot[k]);
            // τ = tanh(c')
            let c_b = dc[k] + tau_b * (1.0 - tc * tc);
            // ċ' = ḟ c + f ċ + i̇ g + i ġ
            let f_dot_b = c_dot_b * cp;
            let i_dot_b = c_dot_b * g;
            let g_dot_b = c_dot_b * i;
            let mut f_b = c_dot_b * cp_dot + c_b * cp;
            let mut i_b = c_dot_b * tg.g_dot[k] + c_b * g;
            let mut g_b = c_dot_b * tg.i_dot[k] + c_b * i;
            dc_prev[k] = c_dot_b * tg.f_dot[k] + c_b * f;
            dc_prev_dot[k] = c_dot_b * f;
            // gate tangents: σ̇ = σ(1−σ)ż, ġ = (1−g²)ż
            dz_dot[k] = i_dot_b * i * (1.0 - i);
            i_b += i_dot_b * (1.0 - 2.0 * i) * zi;
            dz_dot[d + k] = f_dot_b * f * (1.0 - f);
            f_b += f_dot_b * (1.0 - 2.0 * f) * zf;
            dz_dot[2 * d + k] = g_dot_b * (1.0 - g * g);
            g_b += g_dot_b * (-2.0 * g * zg);
            dz_dot[3 * d + k] = o_dot_b * o * (1.0 - o);
            o_b += o_dot_b * (1.0 - 2.0 * o) * zo;
            // gates
            dz[k] = i_b * i * (1.0 - i);
            dz[d + k] = f_b * f * (1.0 - f);
            dz[2 * d + k] = g_b * (1.0 - g * g);
            dz[3 * d + k] = o_b * o * (1.0 - o);
        }
        let dxh = self.accumulate(ps, &st.xh, &dz, true);
        let dxh_dot = self.accumulate(ps, &tg.xh_dot, &dz_dot, false);
        TangentAdjoints {
            dx: dxh[..self.d_in].to_vec(),
            dh: dxh[self.d_in..].to_vec(),
            dc: dc_prev,
            dx_dot: dxh_dot[..self.d_in].to_vec(),
            dh_dot: dxh_dot[self.d_in..].to_vec(),
            dc_dot: dc_prev_dot,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::gradcheck::{grad_check_inputs, grad_check_params};
    use crate::rng::{normal, seeded};

    fn rand_vec(rng: &mut crate::rng::SeededRng, n: usize) -> Vec<f64> {
        (0..n).map(|_| normal(rng)).collect()
    }

    #[test]
    fn zero_weights_give_zero_hidden() {
        let mut ps = ParamStore::new(0);
        let l = Lstm::new(&mut ps, "l", 3, 4);
        ps.params_mut().iter_mut().for_each(|p| p.value.fill(0.0));
        let st = l.step(&ps, &[1.0, -2.0, 3.0], &[0.0; 4], &[0.0; 4]).unwrap();
        assert!(st.h.iter().all(|&v| v == 0.0));
        assert!(l.step(&ps, &[1.0], &[0.0; 4], &[0.0; 4]).is_err());
    }

    #[test]
    fn param_count_formula() {
        assert_eq!(Lstm::param_count(6, 5), 240);
        let mut ps = ParamStore::new(0);
        Lstm::new(&mut ps, "l", 6, 5);
        assert_eq!(ps.param_count(), 240);
    }

    #[test]
    fn three_step_unroll_gradients() {
        for seed in 0..10 {
            let mut rng = seeded(100 + seed);
            let mut ps = ParamStore::new(seed);
            let l = Lstm::new(&mut ps, "l", 3, 4);
            let xs = Mat::from_vec(3, 3, rand_vec(&mut rng, 9)).unwrap();
            let wh = rand_vec(&mut rng, 4);
            let wc = rand_vec(&mut rng, 4);
            let loss = |ps: &ParamStore, xs: &Mat| {
                let steps = l.forward_seq(ps, xs).unwrap();
                let last = steps.last().unwrap();
                let a: f64 = last.h.iter().zip(&wh).map(|(h, w)| h * w).sum();
                let b: f64 = last.c.iter().zip(&wc).map(|(c, w)| c * w).sum();
                a + b
            };
            ps.zero_grads();
            let steps = l.forward_seq(&ps, &xs).unwrap();
            let (dxs, _, _) = l.backward_seq(&mut ps, &steps, &wh, &wc);
            let rep = grad_check_params(&mut ps, |ps| loss(ps, &xs));
            assert!(rep.max_rel_err <= 1e-4, "seed {seed}: {rep:?}");
            let mut x = xs.data.clone();
            let rep = grad_check_inputs(&mut x, &dxs.data, |x| {
                loss(&ps, &Mat::from_vec(3, 3, x.to_vec()).unwrap())
            });
            assert!(rep.max_rel_err <= 1e-4, "seed {seed}: {rep:?}");
        }
    }

    #[test]
    fn tangent_matches_finite_difference() {
        let mut rng = seeded(7);
        let mut ps = ParamStore::new(7);
        let l = Lstm::new(&mut ps, "l", 2, 3);
        let (x, h, c) = (rand_vec(&mut rng, 2), rand_vec(&mut rng, 3), rand_vec(&mut rng, 3));
        let (xd, hd, cd) = (rand_vec(&mut rng, 2), rand_vec(&mut rng, 3), rand_vec(&mut rng, 3));
        let st = l.step(&ps, &x, &h, &c).unwrap();
        let tg = l.step_tangent(&ps, &st, &xd, &hd, &cd);
        let eps = 1e-6;
        let shift = |s: f64, a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(u, v)| u + s * v).collect() };
        let p = l.step(&ps, &shift(eps, &x, &xd), &shift(eps, &h, &hd), &shift(eps, &c, &cd)).unwrap();
        let m = l.step(&ps, &shift(-eps, &x, &xd), &shift(-eps, &h, &hd), &shift(-eps, &c, &cd)).unwrap();
        for k in 0..3 {
            assert!(((p.h[k] - m.h[k]) / (2.0 * eps) - tg.h_dot[k]).abs() < 1e-8);
            assert!(((p.c[k] - m.c[k]) / (2.0 * eps) - tg.c_dot[k]).abs() < 1e-8);
        }
    }

    #[test]
    fn tangent_reverse_gradients() {
        for seed in 0..10 {
            let mut rng = seeded(200 + seed);
            let mut ps = ParamStore::new(seed);
            let l = Lstm::new(&mut ps, "l", 2, 3);
            let (x, h, c) = (rand_vec(&mut rng, 2), rand_vec(&mut rng, 3), rand_vec(&mut rng, 3));
            let (xd, hd, cd) = (rand_vec(&mut rng, 2), rand_vec(&mut rng, 3), rand_vec(&mut rng, 3));
            let w: Vec<Vec<f64>> = (0..4).map(|_| rand_vec(&mut rng, 3)).collect();
            let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| u * v).sum::<f64>();
            let loss = |ps: &ParamStore, x: &[f64], h: &[f64], c: &[f64]| {
                let st = l.step(ps, x, h, c).unwrap();
                let tg = l.step_tangent(ps, &st, &xd, &hd, &cd);
                dot(&st.h, &w[0]) + dot(&st.c, &w[1]) + dot(&tg.h_dot, &w[2]) + dot(&tg.c_dot, &w[3])
            };
            ps.zero_grads();
            let st = l.step(&ps, &x, &h, &c).unwrap();
            let tg = l.step_tangent(&ps, &st, &xd, &hd, &cd);
            let adj = l.step_tangent_backward(&mut ps, &st, &tg, &w[0], &w[1], &w[2], &w[3]);
            let rep = grad_check_params(&mut ps, |ps| loss(ps, &x, &h, &c));
            assert!(rep.max_rel_err <= 1e-4, "seed {seed}: {rep:?}");
            let mut xv = x.clone();
            assert!(grad_check_inputs(&mut xv, &adj.dx, |xv| loss(&ps, xv, &h, &c)).max_rel_err <= 1e-4);
            let mut hv = h.clone();
            assert!(grad_check_inputs(&mut hv, &adj.dh, |hv| loss(&ps, &x, hv, &c)).max_rel_err <= 1e-4);
            let mut cv = c.clone();
            assert!(grad_check_inputs(&mut cv, &adj.dc, |cv| loss(&ps, &x, &h, cv)).max_rel_err <= 1e-4);
        }
    }
}
