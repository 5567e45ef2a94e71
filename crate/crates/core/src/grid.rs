//! Uniform-grid scalar fields, snapshot collections and error reports.
//!
//! All transform arithmetic works in pixel coordinates. The physical extent is
//! carried along as metadata so it survives a trip through the file formats.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical bounding box `(x_min, x_max, y_min, y_max)` of a field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extent {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Extent {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Self {
        Extent {
            x_min,
            x_max,
            y_min,
            y_max,
        }
    }

    /// Unit-pixel extent for a `rows x cols` grid.
    pub fn pixels(rows: usize, cols: usize) -> Self {
        Extent::new(0.0, cols as f64, 0.0, rows as f64)
    }
}

/// A 2-D scalar field stored row-major, top row first.
#[derive(Debug, Clone, PartialEq)]
pub struct Field2D {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    extent: Extent,
}

impl Field2D {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>, extent: Extent) -> Result<Self> {
        if rows < 2 || cols < 2 {
            return Err(Error::invalid(format!(
                "field must be at least 2x2, got {rows}x{cols}"
            )));
        }
        if values.len() != rows * cols {
            return Err(Error::shape(
                format!("{} values ({rows}x{cols})", rows * cols),
                format!("{} values", values.len()),
            ));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite value {} at cell ({}, {})",
                values[i],
                i / cols,
                i % cols
            )));
        }
        Ok(Field2D {
            rows,
            cols,
            values,
            extent,
        })
    }

    /// Field with a unit-pixel extent.
    pub fn from_values(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        Self::new(rows, cols, values, Extent::pixels(rows, cols))
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::from_values(rows, cols, vec![0.0; rows * cols])
    }

    pub fn constant(rows: usize, cols: usize, value: f64) -> Result<Self> {
        Self::from_values(rows, cols, vec![value; rows * cols])
    }

    /// Builds a field by evaluating `f(row, col)` at every cell.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                values.push(f(r, c));
            }
        }
        Self::from_values(rows, cols, values)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn extent(&self) -> Extent {
        self.extent
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    pub fn with_extent(mut self, extent: Extent) -> Self {
        self.extent = extent;
        self
    }

    /// Replaces the values while keeping shape and extent.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Field2D::new(self.rows, self.cols, values, self.extent)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        self.with_values(self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn same_shape(&self, other: &Field2D) -> bool {
        self.shape() == other.shape()
    }

    pub(crate) fn check_shape(&self, other: &Field2D) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::shape(
                format!("{}x{}", self.rows, self.cols),
                format!("{}x{}", other.rows, other.cols),
            ))
        }
    }

    /// Cell-wise `self - other`.
    pub fn difference(&self, other: &Field2D) -> Result<Field2D> {
        self.check_shape(other)?;
        self.with_values(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }

    pub fn scaled(&self, factor: f64) -> Result<Field2D> {
        self.map(|v| v * factor)
    }
}

/// Ordered snapshots with one parameter vector each.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotSet {
    snapshots: Vec<Field2D>,
    params: Vec<Vec<f64>>,
}

impl SnapshotSet {
    pub fn new(snapshots: Vec<Field2D>, params: Vec<Vec<f64>>) -> Result<Self> {
        if snapshots.is_empty() {
            return Err(Error::invalid("snapshot set is empty"));
        }
        if snapshots.len() != params.len() {
            return Err(Error::shape(
                format!("{} parameter vectors", snapshots.len()),
                format!("{}", params.len()),
            ));
        }
        let first = &snapshots[0];
        for s in &snapshots[1..] {
            first.check_shape(s)?;
        }
        let dim = params[0].len();
        if dim == 0 {
            return Err(Error::invalid("parameter vectors must be non-empty"));
        }
        for p in &params {
            if p.len() != dim {
                return Err(Error::shape(
                    format!("parameter dimension {dim}"),
                    format!("{}", p.len()),
                ));
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("non-finite parameter {p:?}")));
            }
        }
        Ok(SnapshotSet { snapshots, params })
    }

    /// Snapshots parametrised by a single scalar each.
    pub fn with_scalar_params(snapshots: Vec<Field2D>, params: &[f64]) -> Result<Self> {
        Self::new(snapshots, params.iter().map(|&p| vec![p]).collect())
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn snapshots(&self) -> &[Field2D] {
        &self.snapshots
    }

    pub fn params(&self) -> &[Vec<f64>] {
        &self.params
    }

    pub fn shape(&self) -> (usize, usize) {
        self.snapshots[0].shape()
    }

    pub fn param_dim(&self) -> usize {
        self.params[0].len()
    }

    /// Training sets must not repeat a parameter vector.
    pub fn check_distinct_params(&self) -> Result<()> {
        for i in 0..self.params.len() {
            for j in 0..i {
                if self.params[i] == self.params[j] {
                    return Err(Error::DuplicateParameter(self.params[i].clone()));
                }
            }
        }
        Ok(())
    }

    /// Sub-set at the given positions, in the given order.
    pub fn select(&self, indices: &[usize]) -> Result<SnapshotSet> {
        let mut snaps = Vec::with_capacity(indices.len());
        let mut params = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= self.len() {
                return Err(Error::invalid(format!(
                    "snapshot index {i} out of range (len {})",
                    self.len()
                )));
            }
            snaps.push(self.snapshots[i].clone());
            params.push(self.params[i].clone());
        }
        SnapshotSet::new(snaps, params)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormKind {
    L1,
    L2,
}

impl NormKind {
    fn label(self) -> &'static str {
        match self {
            NormKind::L1 => "L1",
            NormKind::L2 => "L2",
        }
    }
}

/// Per-snapshot relative errors and their mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub per_snapshot: Vec<f64>,
    pub mean: f64,
    pub norm_kind: NormKind,
}

impl ErrorReport {
    pub fn new(per_snapshot: Vec<f64>, norm_kind: NormKind) -> Result<Self> {
        if per_snapshot.is_empty() {
            return Err(Error::invalid("error report needs at least one entry"));
        }
        if per_snapshot.iter().any(|e| !(*e >= 0.0)) {
            return Err(Error::invalid("relative errors must be non-negative"));
        }
        let mean = per_snapshot.iter().sum::<f64>() / per_snapshot.len() as f64;
        Ok(ErrorReport {
            per_snapshot,
            mean,
            norm_kind,
        })
    }
}

/// `||truth - approx|| / ||truth||` over all cells.
pub fn relative_error(truth: &Field2D, approx: &Field2D, norm: NormKind) -> Result<f64> {
    truth.check_shape(approx)?;
    let pairs = truth.values().iter().zip(approx.values());
    let (num, den) = match norm {
        NormKind::L2 => {
            let (n, d) = pairs.fold((0.0, 0.0), |(n, d), (t, a)| {
                (n + (t - a) * (t - a), d + t * t)
            });
            (n.sqrt(), d.sqrt())
        }
        NormKind::L1 => pairs.fold((0.0, 0.0), |(n, d), (t, a)| {
            (n + (t - a).abs(), d + t.abs())
        }),
    };
    if den == 0.0 {
        return Err(Error::ZeroNorm(norm.label()));
    }
    Ok(num / den)
}

/// 1 where the value is strictly above `level`, 0 elsewhere.
pub fn threshold(field: &Field2D, level: f64) -> Field2D {
    field
        .map(|v| if v > level { 1.0 } else { 0.0 })
        .expect("thresholding preserves shape and finiteness")
}

/// Number of 4-connected regions of non-zero cells.
pub fn connected_components(field: &Field2D) -> usize {
    component_sizes(field).len()
}

/// Cell counts of the 4-connected regions of non-zero cells, largest first.
pub fn component_sizes(field: &Field2D) -> Vec<usize> {
    let (rows, cols) = field.shape();
    let v = field.values();
    let mut seen = vec![false; rows * cols];
    let mut stack = Vec::new();
    let mut sizes = Vec::new();
    for start in 0..rows * cols {
        if seen[start] || v[start] == 0.0 {
            continue;
        }
        let mut size = 0;
        seen[start] = true;
        stack.push(start);
        while let Some(i) = stack.pop() {
            size += 1;
            let (r, c) = (i / cols, i % cols);
            let mut visit = |j: usize| {
                if !seen[j] && v[j] != 0.0 {
                    seen[j] = true;
                    stack.push(j);
                }
            };
            if r > 0 {
                visit(i - cols);
            }
            if r + 1 < rows {
                visit(i + cols);
            }
            if c > 0 {
                visit(i - 1);
            }
            if c + 1 < cols {
                visit(i + 1);
            }
        }
        sizes.push(size);
    }
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    sizes
}

/// Separable Gaussian blur, kernel truncated at 4 sigma and renormalised,
/// with half-sample reflective boundaries.
pub fn smooth_gaussian(field: &Field2D, sigma_px: f64) -> Result<Field2D> {
    if !(sigma_px > 0.0) || !sigma_px.is_finite() {
        return Err(Error::invalid(format!(
            "smoothing sigma must be positive, got {sigma_px}"
        )));
    }
    let kernel = gaussian_kernel(sigma_px);
    let radius = (kernel.len() / 2) as isize;
    let (rows, cols) = field.shape();
    let src = field.values();

    let mut horiz = vec![0.0; rows * cols];
    for r in 0..rows {
        let row = &src[r * cols..(r + 1) * cols];
        for c in 0..cols {
            let mut acc = 0.0;
            for (k, w) in kernel.iter().enumerate() {
                let idx = reflect(c as isize + k as isize - radius, cols);
                acc += w * row[idx];
            }
            horiz[r * cols + c] = acc;
        }
    }
    let mut out = vec![0.0; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            let mut acc = 0.0;
            for (k, w) in kernel.iter().enumerate() {
                let idx = reflect(r as isize + k as isize - radius, rows);
                acc += w * horiz[idx * cols + c];
            }
            out[r * cols + c] = acc;
        }
    }
    field.with_values(out)
}

pub(crate) fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (4.0 * sigma).ceil() as usize;
    let mut k: Vec<f64> = (0..=2 * radius)
        .map(|i| {
            let x = i as f64 - radius as f64;
            (-0.5 * x * x / (sigma * sigma)).exp()
        })
        .collect();
    let total: f64 = k.iter().sum();
    k.iter_mut().for_each(|w| *w /= total);
    k
}

/// Half-sample symmetric reflection (`d c b a | a b c d | d c b a`).
fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let mut m = i.rem_euclid(period);
    if m >= n {
        m = period - 1 - m;
    }
    m as usize
}

/// Replaces each cell by `1 - value`; values must lie in `[0, 1]`.
pub fn invert_image(field: &Field2D) -> Result<Field2D> {
    if let Some(v) = field.values().iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::invalid(format!(
            "image inversion needs values in [0, 1], found {v}"
        )));
    }
    field.map(|v| 1.0 - v)
}
