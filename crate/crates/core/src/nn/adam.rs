use super::params::ParamStore;
use crate::math::{pow, sqrt};
use alloc::vec;
use alloc::vec::Vec;

/// Adam with bias correction.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(ps: &ParamStore, lr: f64) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: ps.params().iter().map(|p| vec![0.0; p.len()]).collect(),
            v: ps.params().iter().map(|p| vec![0.0; p.len()]).collect(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// Apply one update from the gradient slots. Slots are left as they are.
    pub fn step(&mut self, ps: &mut ParamStore) {
        self.t += 1;
        let bc1 = 1.0 - pow(self.beta1, self.t as f64);
        let bc2 = 1.0 - pow(self.beta2, self.t as f64);
        for (k, p) in ps.params_mut().iter_mut().enumerate() {
            let (m, v) = (&mut self.m[k], &mut self.v[k]);
            for j in 0..p.value.len() {
                let g = p.grad[j];
                m[j] = self.beta1 * m[j] + (1.0 - self.beta1) * g;
                v[j] = self.beta2 * v[j] + (1.0 - self.beta2) * g * g;
                let mh = m[j] / bc1;
                let vh = v[j] / bc2;
                p.value[j] -= self.lr * mh / (sqrt(vh) + self.eps);
            }
        }
    }
}
