use super::tensor::Mat;
use crate::rng::{unit, SeededRng};
use alloc::vec::Vec;

/// Inverted Bernoulli dropout. Returns the scaled keep-mask for the backward
/// pass; with `rng = None` or `p = 0` it is the identity.
pub fn dropout(x: &Mat, p: f64, rng: Option<&mut SeededRng>) -> (Mat, Option<Vec<f64>>) {
    match rng {
        Some(rng) if p > 0.0 => {
            let keep = 1.0 / (1.0 - p);
            let mask: Vec<f64> = (0..x.data.len()).map(|_| if unit(rng) < p { 0.0 } else { keep }).collect();
            let y = Mat {
                rows: x.rows,
                cols: x.cols,
                data: x.data.iter().zip(&mask).map(|(a, m)| a * m).collect(),
            };
            (y, Some(mask))
        }
        _ => (x.clone(), None),
    }
}

pub fn dropout_backward(dy: &Mat, mask: &Option<Vec<f64>>) -> Mat {
    match mask {
        Some(m) => Mat {
            rows: dy.rows,
            cols: dy.cols,
            data: dy.data.iter().zip(m).map(|(a, b)| a * b).collect(),
        },
        None => dy.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn identity_at_inference() {
        let x = Mat::from_vec(1, 3, alloc::vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(dropout(&x, 0.5, None).0, x);
        let mut rng = seeded(0);
        assert_eq!(dropout(&x, 0.0, Some(&mut rng)).0, x);
    }

    #[test]
    fn kept_entries_are_rescaled() {
        let x = Mat::from_vec(1, 1000, alloc::vec![1.0; 1000]).unwrap();
        let mut rng = seeded(1);
        let (y, mask) = dropout(&x, 0.2, Some(&mut rng));
        assert!(y.data.iter().all(|&v| v == 0.0 || (v - 1.25).abs() < 1e-15));
        let dropped = y.data.iter().filter(|&&v| v == 0.0).count();
        assert!((150..250).contains(&dropped));
        assert_eq!(dropout_backward(&x, &mask), y);
    }
}
