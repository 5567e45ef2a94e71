//! Unitary 2-D DFT of real fields, vectorised as `[re..., im...]`.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

fn fft2(data: &mut [Complex64], rows: usize, cols: usize, inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let (row_fft, col_fft) = if inverse {
        (planner.plan_fft_inverse(cols), planner.plan_fft_inverse(rows))
    } else {
        (planner.plan_fft_forward(cols), planner.plan_fft_forward(rows))
    };
    for row in data.chunks_exact_mut(cols) {
        row_fft.process(row);
    }
    let mut column = vec![Complex64::new(0.0, 0.0); rows];
    for c in 0..cols {
        for r in 0..rows {
            column[r] = data[r * cols + c];
        }
        col_fft.process(&mut column);
        for r in 0..rows {
            data[r * cols + c] = column[r];
        }
    }
    let scale = 1.0 / ((rows * cols) as f64).sqrt();
    for v in data.iter_mut() {
        *v *= scale;
    }
}

/// Spectrum of a row-major real field, real parts then imaginary parts.
pub(crate) fn forward(values: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft2(&mut buf, rows, cols, false);
    buf.iter().map(|z| z.re).chain(buf.iter().map(|z| z.im)).collect()
}

/// Real part of the inverse transform, i.e. the inverse of the
/// conjugate-symmetric component of the stacked spectrum.
pub(crate) fn inverse(stacked: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let n = rows * cols;
    let mut buf: Vec<Complex64> = (0..n)
        .map(|i| Complex64::new(stacked[i], stacked[n + i]))
        .collect();
    fft2(&mut buf, rows, cols, true);
    buf.iter().map(|z| z.re).collect()
}
