//! Stack of linear layers with `tanh` between them and a linear output.
//! Supports the tangent pass used by the gradient penalty.

use super::linear::Linear;
use super::params::ParamStore;
use super::tensor::Mat;
use crate::math::tanh;
use crate::Result;
use alloc::format;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq)]
pub struct TanhMlp {
    pub layers: Vec<Linear>,
}

#[derive(Debug, Clone)]
pub struct MlpCache {
    /// Input of every layer; entry `l > 0` is `tanh` of layer `l − 1`'s output.
    xs: Vec<Mat>,
}

#[derive(Debug, Clone)]
pub struct MlpTangent {
    xs_dot: Vec<Mat>,
    /// Pre-activation tangents of the hidden layers.
    us_dot: Vec<Mat>,
    pub y_dot: Mat,
}

impl TanhMlp {
    /// `widths` lists every layer's output size, the last one included.
    pub fn new(ps: &mut ParamStore, name: &str, d_in: usize, widths: &[usize]) -> Self {
        let mut layers = Vec::with_capacity(widths.len());
        let mut d = d_in;
        for (l, &w) in widths.iter().enumerate() {
            layers.push(Linear::new(ps, &format!("{name}.{l}"), d, w, true));
            d = w;
        }
        TanhMlp { layers }
    }

    pub fn param_count(d_in: usize, widths: &[usize]) -> usize {
        let mut d = d_in;
        widths
            .iter()
            .map(|&w| {
                let c = Linear::param_count(d, w, true);
                d = w;
                c
            })
            .sum()
    }

    pub fn forward(&self, ps: &ParamStore, x: &Mat) -> Result<(Mat, MlpCache)> {
        let mut xs = Vec::with_capacity(self.layers.len());
        let mut cur = x.clone();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let u = layer.forward(ps, &cur)?;
            xs.push(cur);
            cur = if l < last { u.map(tanh) } else { u };
        }
        Ok((cur, MlpCache { xs }))
    }

    pub fn backward(&self, ps: &mut ParamStore, cache: &MlpCache, dy: &Mat) -> Mat {
        self.backward_impl(Some(ps), None, cache, dy)
    }

    /// `∂/∂x` without touching parameter gradients.
    pub fn backward_input(&self, ps: &ParamStore, cache: &MlpCache, dy: &Mat) -> Mat {
        self.backward_impl(None, Some(ps), cache, dy)
    }

    fn backward_impl(&self, mut acc: Option<&mut ParamStore>, ro: Option<&ParamStore>, cache: &MlpCache, dy: &Mat) -> Mat {
        let mut d = dy.clone();
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let dx = match acc.as_deref_mut() {
                Some(ps) => layer.backward(ps, &cache.xs[l], &d),
                None => layer.backward_input(ro.expect("store"), &d),
            };
            d = if l > 0 { super::tanh_backward(&cache.xs[l], &dx) } else { dx };
        }
        d
    }

    pub fn tangent(&self, ps: &ParamStore, cache: &MlpCache, x_dot: &Mat) -> MlpTangent {
        let mut xs_dot = Vec::with_capacity(self.layers.len());
        let mut us_dot = Vec::with_capacity(self.layers.len());
        let mut cur = x_dot.clone();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let u_dot = layer.forward_tangent(ps, &cur);
            xs_dot.push(cur);
            if l < last {
                let a = &cache.xs[l + 1];
                cur = Mat {
                    rows: a.rows,
                    cols: a.cols,
                    data: a.data.iter().zip(&u_dot.data).map(|(a, u)| (1.0 - a * a) * u).collect(),
                };
                us_dot.push(u_dot);
            } else {
                cur = u_dot;
            }
        }
        MlpTangent {
            xs_dot,
            us_dot,
            y_dot: cur,
        }
    }

    /// Reverse pass through the primal and tangent outputs. Returns the
    /// adjoints of `x` and `ẋ`.
    pub fn tangent_backward(
        &self,
        ps: &mut ParamStore,
        cache: &MlpCache,
        tg: &MlpTangent,
        dy: &Mat,
        dy_dot: &Mat,
    ) -> (Mat, Mat) {
        let mut d = dy.clone();
        let mut d_dot = dy_dot.clone();
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let dx = layer.backward(ps, &cache.xs[l], &d);
            let dx_dot = layer.backward_tangent(ps, &tg.xs_dot[l], &d_dot);
            if l == 0 {
                return (dx, dx_dot);
            }
            // x_l = tanh(u), ẋ_l = (1 − x_l²) u̇
            let a = &cache.xs[l];
            let u_dot = &tg.us_dot[l - 1];
            let mut du = Mat::zeros(a.rows, a.cols);
            let mut du_dot = Mat::zeros(a.rows, a.cols);
            for j in 0..a.data.len() {
                let av = a.data[j];
                let g = 1.0 - av * av;
                du_dot.data[j] = dx_dot.data[j] * g;
                du.data[j] = (dx.data[j] + dx_dot.data[j] * (-2.0 * av * u_dot.data[j])) * g;
            }
            d = du;
            d_dot = du_dot;
        }
        unreachable!("mlp has at least one layer")
    }
}
