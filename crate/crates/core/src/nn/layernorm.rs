use super::params::{ParamId, ParamStore};
use super::tensor::Mat;
use crate::math::sqrt;
use alloc::format;
use alloc::vec::Vec;

const LN_EPS: f64 = 1e-5;

/// Per-row normalisation with learned gain and shift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerNorm {
    pub gamma: ParamId,
    pub beta: ParamId,
    pub d: usize,
}

#[derive(Debug, Clone)]
pub struct LnCache {
    xhat: Mat,
    inv_std: Vec<f64>,
}

impl LayerNorm {
    pub fn new(ps: &mut ParamStore, name: &str, d: usize) -> Self {
        LayerNorm {
            gamma: ps.add_const(&format!("{name}.gamma"), 1, d, 1.0),
            beta: ps.add_const(&format!("{name}.beta"), 1, d, 0.0),
            d,
        }
    }

    pub fn param_count(d: usize) -> usize {
        2 * d
    }

    pub fn forward(&self, ps: &ParamStore, x: &Mat) -> (Mat, LnCache) {
        let (g, b) = (ps.value(self.gamma), ps.value(self.beta));
        let mut xhat = Mat::zeros(x.rows, x.cols);
        let mut y = Mat::zeros(x.rows, x.cols);
        let mut inv_std = Vec::with_capacity(x.rows);
        let n = x.cols as f64;
        for r in 0..x.rows {
            let row = x.row(r);
            let mean = row.iter().sum::<f64>() / n;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            let is = 1.0 / sqrt(var + LN_EPS);
            inv_std.push(is);
            for c in 0..x.cols {
                let xh = (row[c] - mean) * is;
                xhat.data[r * x.cols + c] = xh;
                y.data[r * x.cols + c] = g[c] * xh + b[c];
            }
        }
        (y, LnCache { xhat, inv_std })
    }

    pub fn backward(&self, ps: &mut ParamStore, cache: &LnCache, dy: &Mat) -> Mat {
        let d = self.d;
        let n = d as f64;
        let mut dx = Mat::zeros(dy.rows, d);
        {
            let gg = ps.grad_mut(self.gamma);
            for r in 0..dy.rows {
                for c in 0..d {
                    gg[c] += dy.get(r, c) * cache.xhat.get(r, c);
                }
            }
        }
        {
            let gb = ps.grad_mut(self.beta);
            for r in 0..dy.rows {
                for c in 0..d {
                    gb[c] += dy.get(r, c);
                }
            }
        }
        let g = ps.value(self.gamma);
        for r in 0..dy.rows {
            let xh = cache.xhat.row(r);
            let dxh: Vec<f64> = (0..d).map(|c| dy.get(r, c) * g[c]).collect();
            let m1 = dxh.iter().sum::<f64>() / n;
            let m2 = dxh.iter().zip(xh).map(|(a, b)| a * b).sum::<f64>() / n;
            for c in 0..d {
                dx.data[r * d + c] = cache.inv_std[r] * (dxh[c] - m1 - xh[c] * m2);
            }
        }
        dx
    }
}
