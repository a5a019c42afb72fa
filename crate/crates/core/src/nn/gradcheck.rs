//! Central finite-difference checks against analytic gradients.

use super::params::ParamStore;

pub const FD_EPS: f64 = 1e-5;
const DENOM_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradReport {
    pub max_rel_err: f64,
    /// Flat index of the worst entry.
    pub worst: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub checked: usize,
}

impl GradReport {
    fn empty() -> Self {
        GradReport {
            max_rel_err: 0.0,
            worst: 0,
            analytic: 0.0,
            numeric: 0.0,
            checked: 0,
        }
    }

    fn record(&mut self, idx: usize, a: f64, n: f64) {
        let err = rel_err(a, n);
        if err > self.max_rel_err || self.checked == 0 {
            self.max_rel_err = err;
            self.worst = idx;
            self.analytic = a;
            self.numeric = n;
        }
        self.checked += 1;
    }
}

/// `|a − n| / max(|a|, |n|, 1e-8)`.
pub fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(DENOM_FLOOR)
}

/// Compare the gradient slots of `ps` with central differences of `loss`.
/// The caller fills the slots first (zero, forward, backward).
pub fn grad_check_params(ps: &mut ParamStore, mut loss: impl FnMut(&ParamStore) -> f64) -> GradReport {
    let analytic = ps.flat_grads();
    let mut rep = GradReport::empty();
    for (idx, &a) in analytic.iter().enumerate() {
        let orig = *ps.flat_value_mut(idx);
        *ps.flat_value_mut(idx) = orig + FD_EPS;
        let up = loss(ps);
        *ps.flat_value_mut(idx) = orig - FD_EPS;
        let down = loss(ps);
        *ps.flat_value_mut(idx) = orig;
        rep.record(idx, a, (up - down) / (2.0 * FD_EPS));
    }
    rep
}

/// Same check for gradients with respect to a plain input vector.
pub fn grad_check_inputs(x: &mut [f64], analytic: &[f64], mut loss: impl FnMut(&[f64]) -> f64) -> GradReport {
    assert_eq!(x.len(), analytic.len());
    let mut rep = GradReport::empty();
    for idx in 0..x.len() {
        let orig = x[idx];
        x[idx] = orig + FD_EPS;
        let up = loss(x);
        x[idx] = orig - FD_EPS;
        let down = loss(x);
        x[idx] = orig;
        rep.record(idx, analytic[idx], (up - down) / (2.0 * FD_EPS));
    }
    rep
}
