use super::tensor::Mat;
use crate::math::{cos, pow, sin};

/// Sinusoidal position vectors: `sin(p/10000^(2i/d))` on even columns and
/// `cos` of the same angle on odd ones.
pub fn sinusoidal(n: usize, d: usize) -> Mat {
    let mut pe = Mat::zeros(n, d);
    for p in 0..n {
        for c in 0..d {
            let angle = p as f64 / pow(10000.0, (2 * (c / 2)) as f64 / d as f64);
            pe.data[p * d + c] = if c % 2 == 0 { sin(angle) } else { cos(angle) };
        }
    }
    pe
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_position() {
        let pe = sinusoidal(3, 4);
        assert_eq!(pe.row(0), &[0.0, 1.0, 0.0, 1.0]);
        assert!((pe.get(1, 0) - 1f64.sin()).abs() < 1e-15);
        assert!((pe.get(1, 3) - (0.01f64).cos()).abs() < 1e-15);
    }
}
