//! Differentiable building blocks with hand-written reverse-mode gradients.
//!
//! Layers own only [`ParamId`] handles; values and gradient slots live in a
//! [`ParamStore`]. A forward call returns its output plus whatever the backward
//! call needs, and backward accumulates into the store's gradient slots.

pub mod adam;
pub mod attention;
pub mod dropout;
pub mod gradcheck;
pub mod layernorm;
pub mod linear;
pub mod lstm;
pub mod mlp;
pub mod params;
pub mod positional;
pub mod tensor;

pub use adam::Adam;
pub use attention::{softmax, AttentionConfig, AttnCache, Mask, MultiHeadAttention};
pub use dropout::{dropout, dropout_backward};
pub use gradcheck::{grad_check_inputs, grad_check_params, rel_err, GradReport, FD_EPS};
pub use layernorm::{LayerNorm, LnCache};
pub use linear::Linear;
pub use lstm::{Lstm, LstmStep, LstmTangent, TangentAdjoints};
pub use mlp::{MlpCache, MlpTangent, TanhMlp};
pub use params::{Param, ParamId, ParamStore};
pub use positional::sinusoidal;
pub use tensor::Mat;

/// `tanh` applied elementwise.
pub fn tanh_mat(x: &Mat) -> Mat {
    x.map(crate::math::tanh)
}

/// Backward of `a = tanh(u)` given the output `a`.
pub fn tanh_backward(a: &Mat, da: &Mat) -> Mat {
    Mat {
        rows: a.rows,
        cols: a.cols,
        data: a.data.iter().zip(&da.data).map(|(a, d)| d * (1.0 - a * a)).collect(),
    }
}

pub fn relu_mat(x: &Mat) -> Mat {
    x.map(|v| v.max(0.0))
}

/// Backward of `a = relu(u)` given the input `u`.
pub fn relu_backward(u: &Mat, da: &Mat) -> Mat {
    Mat {
        rows: u.rows,
        cols: u.cols,
        data: u.data.iter().zip(&da.data).map(|(u, d)| if *u > 0.0 { *d } else { 0.0 }).collect(),
    }
}
