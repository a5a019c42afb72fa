use super::params::{ParamId, ParamStore};
use super::tensor::{acc_at_b, matmul, matmul_bt, Mat};
use crate::{Error, Result};
use alloc::format;

/// Affine map `y = xW + b`, `W` stored `d_in×d_out`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Linear {
    pub w: ParamId,
    pub b: Option<ParamId>,
    pub d_in: usize,
    pub d_out: usize,
}

impl Linear {
    pub fn new(ps: &mut ParamStore, name: &str, d_in: usize, d_out: usize, bias: bool) -> Self {
        let w = ps.add_uniform(&format!("{name}.w"), d_in, d_out, d_in);
        let b = bias.then(|| ps.add_uniform(&format!("{name}.b"), 1, d_out, d_in));
        Linear { w, b, d_in, d_out }
    }

    pub fn param_count(d_in: usize, d_out: usize, bias: bool) -> usize {
        d_in * d_out + if bias { d_out } else { 0 }
    }

    pub fn forward(&self, ps: &ParamStore, x: &Mat) -> Result<Mat> {
        if x.cols != self.d_in {
            return Err(Error::shape("linear", format!("{} inputs", self.d_in), format!("{}", x.cols)));
        }
        let mut y = matmul(x, ps.value(self.w), self.d_out);
        if let Some(b) = self.b {
            let b = ps.value(b);
            for r in 0..y.rows {
                for (v, bv) in y.row_mut(r).iter_mut().zip(b) {
                    *v += bv;
                }
            }
        }
        Ok(y)
    }

    /// Tangent of the forward map: `ẏ = ẋW`.
    pub fn forward_tangent(&self, ps: &ParamStore, x_dot: &Mat) -> Mat {
        matmul(x_dot, ps.value(self.w), self.d_out)
    }

    /// Accumulate `∂/∂W` and `∂/∂b` into the store and return `∂/∂x`.
    pub fn backward(&self, ps: &mut ParamStore, x: &Mat, dy: &Mat) -> Mat {
        acc_at_b(ps.grad_mut(self.w), x, dy);
        if let Some(b) = self.b {
            let gb = ps.grad_mut(b);
            for r in 0..dy.rows {
                for (g, d) in gb.iter_mut().zip(dy.row(r)) {
                    *g += d;
                }
            }
        }
        self.backward_input(ps, dy)
    }

    /// `∂/∂x` only; parameter gradients are left untouched.
    pub fn backward_input(&self, ps: &ParamStore, dy: &Mat) -> Mat {
        matmul_bt(dy, ps.value(self.w), self.d_in)
    }

    /// Reverse pass of [`Linear::forward_tangent`]: accumulates into `W` only.
    pub fn backward_tangent(&self, ps: &mut ParamStore, x_dot: &Mat, dy_dot: &Mat) -> Mat {
        acc_at_b(ps.grad_mut(self.w), x_dot, dy_dot);
        self.backward_input(ps, dy_dot)
    }
}
