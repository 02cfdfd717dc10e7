//! Separable n-dimensional FFT over row-major buffers.

use num_complex::Complex64;
use rustfft::FftPlanner;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    /// Unnormalized inverse; divide by the cell count to invert `Forward`.
    Inverse,
}

pub fn fft_nd(data: &mut [Complex64], sides: &[usize], dir: Direction) {
    let total: usize = sides.iter().product();
    assert_eq!(data.len(), total);
    let mut planner = FftPlanner::<f64>::new();
    let mut stride = 1;
    for axis in (0..sides.len()).rev() {
        let n = sides[axis];
        let fft = match dir {
            Direction::Forward => planner.plan_fft_forward(n),
            Direction::Inverse => planner.plan_fft_inverse(n),
        };
        let outer = total / (n * stride);
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        for o in 0..outer {
            for s in 0..stride {
                let base = o * n * stride + s;
                for k in 0..n {
                    line[k] = data[base + k * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for k in 0..n {
                    data[base + k * stride] = line[k];
                }
            }
        }
        stride *= n;
    }
}

/// Signed integer frequency of DFT bin `k` on an axis of length `n`.
pub fn signed_frequency(k: usize, n: usize) -> i64 {
    if k <= n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

pub fn to_complex(values: &[f64]) -> Vec<Complex64> {
    values.iter().map(|&v| Complex64::new(v, 0.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_3d() {
        let sides = [4, 3, 5];
        let orig: Vec<f64> = (0..60).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut buf = to_complex(&orig);
        fft_nd(&mut buf, &sides, Direction::Forward);
        fft_nd(&mut buf, &sides, Direction::Inverse);
        for (a, b) in orig.iter().zip(&buf) {
            assert!((a - b.re / 60.0).abs() < 1e-12);
        }
    }

    #[test]
    fn frequencies() {
        assert_eq!(signed_frequency(0, 8), 0);
        assert_eq!(signed_frequency(4, 8), 4);
        assert_eq!(signed_frequency(5, 8), -3);
    }
}
