//! N-dimensional FFT helpers on row-major tensor grids.

use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

/// In-place unnormalized FFT of a row-major array with the given shape.
pub(crate) fn fft_nd(data: &mut [Complex64], shape: &[usize], direction: FftDirection) {
    debug_assert_eq!(data.len(), shape.iter().product::<usize>());
    let mut planner = FftPlanner::new();
    let mut stride = 1;
    for axis in (0..shape.len()).rev() {
        let n = shape[axis];
        let fft = planner.plan_fft(n, direction);
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        let block = n * stride;
        for outer in (0..data.len()).step_by(block) {
            for inner in 0..stride {
                let base = outer + inner;
                for (i, v) in line.iter_mut().enumerate() {
                    *v = data[base + i * stride];
                }
                fft.process(&mut line);
                for (i, v) in line.iter().enumerate() {
                    data[base + i * stride] = *v;
                }
            }
        }
        stride *= n;
    }
}

/// Row-major position of a signed mode vector in an FFT array of `shape`.
pub(crate) fn fft_index(modes: &[i64], shape: &[usize]) -> usize {
    let mut idx = 0;
    for (&m, &n) in modes.iter().zip(shape) {
        idx = idx * n + m.rem_euclid(n as i64) as usize;
    }
    idx
}

/// Iterates all mode vectors in `[-max, max]^dim`, last axis fastest.
pub(crate) fn mode_vectors(dim: usize, max: usize) -> impl Iterator<Item = Vec<i64>> {
    let side = 2 * max + 1;
    let total = side.pow(dim as u32);
    (0..total).map(move |mut flat| {
        let mut m = vec![0i64; dim];
        for a in (0..dim).rev() {
            m[a] = (flat % side) as i64 - max as i64;
            flat /= side;
        }
        m
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forward_then_inverse_round_trips() {
        let shape = [4, 6, 2];
        let mut data: Vec<Complex64> = (0..48).map(|i| Complex64::new(i as f64, -(i as f64) / 3.0)).collect();
        let orig = data.clone();
        fft_nd(&mut data, &shape, FftDirection::Forward);
        fft_nd(&mut data, &shape, FftDirection::Inverse);
        for (a, b) in data.iter().zip(&orig) {
            assert!((a / 48.0 - b).norm() < 1e-12);
        }
    }

    #[test]
    fn signed_index_wraps() {
        assert_eq!(fft_index(&[-1, 2], &[8, 8]), 7 * 8 + 2);
        assert_eq!(mode_vectors(2, 1).count(), 9);
        assert_eq!(mode_vectors(2, 1).next().unwrap(), vec![-1, -1]);
    }
}
