//! Parallel-beam Radon transform and filtered back-projection.
//!
//! Geometry: pixel `(row, col)` sits at `x = col - cx`, `y = cy - row` with the
//! rotation centre `(cx, cy)` at the middle of the grid. Projection bin `i`
//! holds the line integral over `{x cos(theta) + y sin(theta) = s_i}` with
//! `s_i = (i - (n_s - 1) / 2) * s_spacing`.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Extent, Field2D};

/// Radon-space samples, one contiguous projection per angle.
#[derive(Debug, Clone, PartialEq)]
pub struct Sinogram {
    n_s: usize,
    angles: Vec<f64>,
    /// angle-major: projection `k` occupies `values[k * n_s..(k + 1) * n_s]`
    values: Vec<f64>,
    s_spacing: f64,
}

impl Sinogram {
    pub fn new(n_s: usize, angles: Vec<f64>, values: Vec<f64>, s_spacing: f64) -> Result<Self> {
        if n_s < 2 {
            return Err(Error::invalid(format!("need at least 2 radial samples, got {n_s}")));
        }
        if angles.is_empty() {
            return Err(Error::invalid("sinogram needs at least one angle"));
        }
        if angles.iter().any(|a| !(0.0..PI).contains(a)) {
            return Err(Error::invalid("projection angles must lie in [0, pi)"));
        }
        if angles.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("projection angles must be strictly increasing"));
        }
        if values.len() != n_s * angles.len() {
            return Err(Error::shape(
                format!("{} values", n_s * angles.len()),
                format!("{}", values.len()),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("sinogram values must be finite"));
        }
        if !(s_spacing > 0.0) {
            return Err(Error::invalid("radial spacing must be positive"));
        }
        Ok(Sinogram {
            n_s,
            angles,
            values,
            s_spacing,
        })
    }

    pub fn zeros(n_s: usize, n_angles: usize) -> Result<Self> {
        Sinogram::new(n_s, uniform_angles(n_angles)?, vec![0.0; n_s * n_angles], 1.0)
    }

    pub fn n_s(&self) -> usize {
        self.n_s
    }

    pub fn n_angles(&self) -> usize {
        self.angles.len()
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn s_spacing(&self) -> f64 {
        self.s_spacing
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Projection at angle index `k`, ordered by increasing `s`.
    pub fn projection(&self, k: usize) -> &[f64] {
        &self.values[k * self.n_s..(k + 1) * self.n_s]
    }

    pub fn projections(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.n_s)
    }

    /// Radial coordinate of bin `i`.
    pub fn s_coord(&self, i: usize) -> f64 {
        (i as f64 - (self.n_s as f64 - 1.0) / 2.0) * self.s_spacing
    }

    /// `n_s x n_angles` matrix view for export (rows = radial bins).
    pub fn to_field(&self) -> Result<Field2D> {
        let n_a = self.n_angles();
        let mut v = vec![0.0; self.n_s * n_a];
        for (k, proj) in self.projections().enumerate() {
            for (i, &p) in proj.iter().enumerate() {
                v[i * n_a + k] = p;
            }
        }
        Field2D::new(
            self.n_s,
            n_a.max(2),
            if n_a == 1 {
                v.iter().flat_map(|&x| [x, x]).collect()
            } else {
                v
            },
            Extent::new(0.0, PI, self.s_coord(0), self.s_coord(self.n_s - 1)),
        )
    }
}

/// `theta_k = k * pi / n` for `k = 0..n`.
pub fn uniform_angles(n_angles: usize) -> Result<Vec<f64>> {
    if n_angles == 0 {
        return Err(Error::invalid("number of projection angles must be at least 1"));
    }
    Ok((0..n_angles)
        .map(|k| k as f64 * PI / n_angles as f64)
        .collect())
}

/// Default angle count for a field: one angle per pixel along the longer side.
pub fn default_angle_count(rows: usize, cols: usize) -> usize {
    rows.max(cols)
}

/// Number of radial bins covering the image diagonal, rounded up to odd so the
/// centre bin sits on `s = 0`.
pub fn projection_length(rows: usize, cols: usize) -> usize {
    let diag = ((rows * rows + cols * cols) as f64).sqrt().ceil() as usize;
    if diag.is_multiple_of(2) {
        diag + 1
    } else {
        diag
    }
}

/// Frequency-domain filter applied before back-projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum RampFilter {
    /// Plain Ram-Lak ramp.
    #[default]
    RamLak,
    /// Ramp apodised by a Hann window.
    Hann,
}

/// Forward Radon transform with uniformly spaced angles.
pub fn radon_forward(field: &Field2D, n_angles: usize) -> Result<Sinogram> {
    let angles = uniform_angles(n_angles)?;
    let (rows, cols) = field.shape();
    let n_s = projection_length(rows, cols);
    let half = (n_s as f64 - 1.0) / 2.0;
    let cx = (cols as f64 - 1.0) / 2.0;
    let cy = (rows as f64 - 1.0) / 2.0;
    let img = field.values();

    let mut values = vec![0.0; n_s * n_angles];
    values
        .par_chunks_mut(n_s)
        .zip(angles.par_iter())
        .for_each(|(proj, &theta)| {
            let (sin, cos) = theta.sin_cos();
            for (i, out) in proj.iter_mut().enumerate() {
                let s = i as f64 - half;
                let mut acc = 0.0;
                for j in 0..n_s {
                    let t = j as f64 - half;
                    let x = s * cos - t * sin;
                    let y = s * sin + t * cos;
                    acc += bilinear(img, rows, cols, cy - y, cx + x);
                }
                // bilinear weights are non-negative, so this only removes -0.0
                *out = acc;
            }
        });
    Sinogram::new(n_s, angles, values, 1.0)
}

#[inline]
fn bilinear(img: &[f64], rows: usize, cols: usize, r: f64, c: f64) -> f64 {
    if r <= -1.0 || c <= -1.0 || r >= rows as f64 || c >= cols as f64 {
        return 0.0;
    }
    let r0 = r.floor();
    let c0 = c.floor();
    let fr = r - r0;
    let fc = c - c0;
    let r0 = r0 as isize;
    let c0 = c0 as isize;
    let at = |rr: isize, cc: isize| -> f64 {
        if rr < 0 || cc < 0 || rr >= rows as isize || cc >= cols as isize {
            0.0
        } else {
            img[rr as usize * cols + cc as usize]
        }
    };
    (1.0 - fr) * ((1.0 - fc) * at(r0, c0) + fc * at(r0, c0 + 1))
        + fr * ((1.0 - fc) * at(r0 + 1, c0) + fc * at(r0 + 1, c0 + 1))
}

/// Filtered back-projection with the Ram-Lak filter.
pub fn radon_inverse(sino: &Sinogram, rows: usize, cols: usize) -> Result<Field2D> {
    radon_inverse_with(sino, rows, cols, RampFilter::RamLak)
}

pub fn radon_inverse_with(
    sino: &Sinogram,
    rows: usize,
    cols: usize,
    filter: RampFilter,
) -> Result<Field2D> {
    if rows < 2 || cols < 2 {
        return Err(Error::invalid(format!("target shape {rows}x{cols} too small")));
    }
    let needed = projection_length(rows, cols);
    if sino.n_s() < needed {
        return Err(Error::shape(
            format!("at least {needed} radial samples for a {rows}x{cols} image"),
            format!("{}", sino.n_s()),
        ));
    }
    let filtered = filter_projections(sino, filter);
    let n_s = sino.n_s();
    let half = (n_s as f64 - 1.0) / 2.0;
    let ds = sino.s_spacing();
    let cx = (cols as f64 - 1.0) / 2.0;
    let cy = (rows as f64 - 1.0) / 2.0;
    let trig: Vec<(f64, f64)> = sino.angles().iter().map(|a| a.sin_cos()).collect();
    let scale = PI / (2.0 * sino.n_angles() as f64);

    let mut out = vec![0.0; rows * cols];
    out.par_chunks_mut(cols).enumerate().for_each(|(r, row)| {
        let y = cy - r as f64;
        for (c, px) in row.iter_mut().enumerate() {
            let x = c as f64 - cx;
            let mut acc = 0.0;
            for (proj, &(sin, cos)) in filtered.chunks_exact(n_s).zip(&trig) {
                let pos = (x * cos + y * sin) / ds + half;
                let i0 = pos.floor();
                let f = pos - i0;
                let i0 = i0 as isize;
                let v0 = if i0 >= 0 && (i0 as usize) < n_s { proj[i0 as usize] } else { 0.0 };
                let v1 = if i0 + 1 >= 0 && ((i0 + 1) as usize) < n_s {
                    proj[(i0 + 1) as usize]
                } else {
                    0.0
                };
                acc += (1.0 - f) * v0 + f * v1;
            }
            *px = acc * scale;
        }
    });
    Field2D::from_values(rows, cols, out)
}

fn filter_projections(sino: &Sinogram, filter: RampFilter) -> Vec<f64> {
    let n_s = sino.n_s();
    let size = (2 * n_s).next_power_of_two().max(64);
    let response = filter_response(size, filter);
    let mut planner = FftPlanner::<f64>::new();
    let fwd: Arc<dyn Fft<f64>> = planner.plan_fft_forward(size);
    let inv: Arc<dyn Fft<f64>> = planner.plan_fft_inverse(size);
    let mut out = vec![0.0; sino.values().len()];
    out.par_chunks_mut(n_s)
        .zip(sino.values().par_chunks(n_s))
        .for_each(|(dst, src)| {
            let mut buf = vec![Complex64::new(0.0, 0.0); size];
            for (b, &v) in buf.iter_mut().zip(src) {
                b.re = v;
            }
            fwd.process(&mut buf);
            for (b, &h) in buf.iter_mut().zip(&response) {
                *b *= h;
            }
            inv.process(&mut buf);
            let norm = 1.0 / size as f64;
            for (d, b) in dst.iter_mut().zip(&buf) {
                *d = b.re * norm;
            }
        });
    out
}

/// Discrete ramp response of length `size`, built from the band-limited
/// spatial Ram-Lak kernel so the DC term is not forced to zero.
pub fn filter_response(size: usize, filter: RampFilter) -> Vec<f64> {
    let mut kernel = vec![Complex64::new(0.0, 0.0); size];
    kernel[0].re = 0.25;
    for (k, v) in kernel.iter_mut().enumerate().skip(1) {
        let n = k.min(size - k);
        if n % 2 == 1 {
            v.re = -1.0 / (PI * n as f64).powi(2);
        }
    }
    FftPlanner::<f64>::new()
        .plan_fft_forward(size)
        .process(&mut kernel);
    kernel
        .iter()
        .enumerate()
        .map(|(k, z)| {
            let ramp = 2.0 * z.re;
            match filter {
                RampFilter::RamLak => ramp,
                RampFilter::Hann => {
                    let f = if k <= size / 2 {
                        k as f64 / size as f64
                    } else {
                        (k as f64 - size as f64) / size as f64
                    };
                    ramp * 0.5 * (1.0 + (2.0 * PI * f).cos())
                }
            }
        })
        .collect()
}
