//! Periodic 3-D complex FFT over the storage layout `[i][j][k]` (k fastest).

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub(crate) struct Fft3 {
    dims: [usize; 3],
    fwd: [Arc<dyn Fft<f64>>; 3],
    inv: [Arc<dyn Fft<f64>>; 3],
}

impl std::fmt::Debug for Fft3 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Fft3 {:?}", self.dims)
    }
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
    const B: usize = 32;
    for r0 in (0..rows).step_by(B) {
        for c0 in (0..cols).step_by(B) {
            for r in r0..(r0 + B).min(rows) {
                for c in c0..(c0 + B).min(cols) {
                    dst[c * rows + r] = src[r * cols + c];
                }
            }
        }
    }
}

impl Fft3 {
    pub(crate) fn new(dims: [usize; 3]) -> Self {
        let mut p = FftPlanner::new();
        let fwd = [p.plan_fft_forward(dims[0]), p.plan_fft_forward(dims[1]), p.plan_fft_forward(dims[2])];
        let inv = [p.plan_fft_inverse(dims[0]), p.plan_fft_inverse(dims[1]), p.plan_fft_inverse(dims[2])];
        Self { dims, fwd, inv }
    }

    pub(crate) fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    /// In-place unnormalized transform (inverse when `inverse`).
    pub(crate) fn process(&self, buf: &mut [Complex64], inverse: bool) {
        let [nx, ny, nl] = self.dims;
        let plans = if inverse { &self.inv } else { &self.fwd };
        // x3: contiguous lines
        let batch = nl * ny;
        buf.par_chunks_mut(batch).for_each(|c| plans[2].process(c));
        // x2: per x1-plane transpose to (nl × ny)
        buf.par_chunks_mut(ny * nl).for_each(|plane| {
            let mut t = vec![Complex64::new(0.0, 0.0); ny * nl];
            transpose(plane, &mut t, ny, nl);
            plans[1].process(&mut t);
            transpose(&t, plane, nl, ny);
        });
        // x1: whole-buffer transpose to ((ny·nl) × nx)
        let cols = ny * nl;
        let mut t = vec![Complex64::new(0.0, 0.0); buf.len()];
        transpose(buf, &mut t, nx, cols);
        t.par_chunks_mut(nx * 64.min(cols)).for_each(|c| plans[0].process(c));
        transpose(&t, buf, cols, nx);
    }
}

/// Smallest length ≥ n whose prime factors are 2, 3 and 5.
pub(crate) fn smooth_len(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r.is_multiple_of(p) {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_and_dc() {
        let f = Fft3::new([6, 4, 10]);
        let mut buf: Vec<Complex64> = (0..f.len()).map(|n| Complex64::new((n as f64).sin(), (n as f64 * 0.3).cos())).collect();
        let orig = buf.clone();
        f.process(&mut buf, false);
        let dc: Complex64 = orig.iter().sum();
        assert!((buf[0] - dc).norm() < 1e-10);
        f.process(&mut buf, true);
        let s = 1.0 / f.len() as f64;
        for (a, b) in buf.iter().zip(&orig) {
            assert!((a * s - b).norm() < 1e-12);
        }
    }

    #[test]
    fn smooth_lengths() {
        assert_eq!(smooth_len(7), 8);
        assert_eq!(smooth_len(131), 135);
        assert_eq!(smooth_len(1), 1);
    }
}
