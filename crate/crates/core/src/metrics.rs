//! Point-forecast error metrics.
//!
//! sMAPE uses the symmetric `2|y − ŷ| / (|y| + |ŷ|)` form, so it is bounded by
//! 200%. A term where both values are zero counts as zero error.

use crate::{Error, Result};
use alloc::format;

/// MSE, MAE and sMAPE over one set of paired values.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricSet {
    pub mse: f64,
    pub mae: f64,
    /// Percent, in `[0, 200]`.
    pub smape: f64,
    pub n: usize,
}

fn check(y: &[f64], y_hat: &[f64]) -> Result<()> {
    if y.len() != y_hat.len() {
        return Err(Error::shape("metrics", format!("{}", y.len()), format!("{}", y_hat.len())));
    }
    if y.is_empty() {
        return Err(Error::invalid("metrics need at least one value"));
    }
    Ok(())
}

pub fn mse(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    check(y, y_hat)?;
    let sum: f64 = y.iter().zip(y_hat).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(sum / y.len() as f64)
}

pub fn mae(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    check(y, y_hat)?;
    let sum: f64 = y.iter().zip(y_hat).map(|(a, b)| (a - b).abs()).sum();
    Ok(sum / y.len() as f64)
}

pub fn smape(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    check(y, y_hat)?;
    let sum: f64 = y
        .iter()
        .zip(y_hat)
        .map(|(a, b)| {
            let denom = a.abs() + b.abs();
            if denom == 0.0 {
                0.0
            } else {
                2.0 * (a - b).abs() / denom
            }
        })
        .sum();
    Ok(100.0 * sum / y.len() as f64)
}

impl MetricSet {
    pub fn compute(y: &[f64], y_hat: &[f64]) -> Result<Self> {
        Ok(MetricSet {
            mse: mse(y, y_hat)?,
            mae: mae(y, y_hat)?,
            smape: smape(y, y_hat)?,
            n: y.len(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;
    use proptest::prelude::*;

    #[test]
    fn identical_inputs_have_zero_error() {
        let y = [1.0, -2.0, 3.5];
        assert_eq!(mse(&y, &y).unwrap(), 0.0);
        assert_eq!(mae(&y, &y).unwrap(), 0.0);
        assert_eq!(smape(&y, &y).unwrap(), 0.0);
    }

    #[test]
    fn hand_values() {
        assert_eq!(mse(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(mae(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(mse(&[2.0], &[5.0]).unwrap(), 9.0);
        assert_eq!(mae(&[2.0], &[5.0]).unwrap(), 3.0);
        let s = smape(&[100.0], &[50.0]).unwrap();
        assert!((s - 200.0 / 3.0).abs() < 1e-12);
        assert_eq!(smape(&[0.0], &[0.0]).unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_lengths() {
        assert!(mse(&[1.0], &[1.0, 2.0]).is_err());
        assert!(mae(&[], &[]).is_err());
        assert!(smape(&[1.0, 2.0], &[1.0]).is_err());
    }

    proptest! {
        #[test]
        fn smape_is_symmetric_and_bounded(pairs in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 1..50)) {
            let (y, y_hat): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let a = smape(&y, &y_hat).unwrap();
            prop_assert_eq!(a, smape(&y_hat, &y).unwrap());
            prop_assert!((0.0..=200.0).contains(&a));
        }

        #[test]
        fn mae_bounded_by_root_mse(pairs in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 1..50)) {
            let (y, y_hat): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let m = MetricSet::compute(&y, &y_hat).unwrap();
            prop_assert!(m.mae <= crate::math::sqrt(m.mse) * (1.0 + 1e-12) + 1e-12);
        }
    }
}
