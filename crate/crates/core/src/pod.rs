//! Proper orthogonal decomposition of snapshot matrices.

use std::io::Write;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::SnapshotSet;

/// Singular values below `ZERO_TOL * sigma_1` are treated as zero.
pub const ZERO_TOL: f64 = 1e-12;

/// Snapshots stacked as columns, optionally mean-centred.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotMatrix {
    data: DMatrix<f64>,
    centered: bool,
    mean: DVector<f64>,
}

impl SnapshotMatrix {
    /// One column per vector; all vectors must have the same length.
    pub fn from_columns(columns: &[Vec<f64>], center: bool) -> Result<Self> {
        let n = columns.len();
        if n == 0 {
            return Err(Error::invalid("snapshot matrix needs at least one column"));
        }
        let rows = columns[0].len();
        if rows == 0 {
            return Err(Error::invalid("snapshot vectors must be non-empty"));
        }
        if let Some(c) = columns.iter().find(|c| c.len() != rows) {
            return Err(Error::shape(format!("columns of length {rows}"), c.len()));
        }
        if columns.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("snapshot entries must be finite"));
        }
        let mut data = DMatrix::from_fn(rows, n, |i, j| columns[j][i]);
        let mean = if center {
            let m = data.column_mean();
            for mut col in data.column_iter_mut() {
                col -= &m;
            }
            m
        } else {
            DVector::zeros(rows)
        };
        Ok(SnapshotMatrix {
            data,
            centered: center,
            mean,
        })
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn centered(&self) -> bool {
        self.centered
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    /// State dimension `N`.
    pub fn n_rows(&self) -> usize {
        self.data.nrows()
    }

    /// Snapshot count `n`.
    pub fn n_cols(&self) -> usize {
        self.data.ncols()
    }
}

/// Flattens each snapshot row-major into a column.
pub fn assemble(snapshots: &SnapshotSet, center: bool) -> Result<SnapshotMatrix> {
    let cols: Vec<Vec<f64>> = snapshots
        .snapshots()
        .iter()
        .map(|f| f.values().to_vec())
        .collect();
    SnapshotMatrix::from_columns(&cols, center)
}

/// Leading left singular vectors and the full singular spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct PodBasis {
    modes: DMatrix<f64>,
    singular_values: Vec<f64>,
    spectrum: Vec<f64>,
    mean: DVector<f64>,
}

impl PodBasis {
    pub fn modes(&self) -> &DMatrix<f64> {
        &self.modes
    }

    /// Retained singular values, non-increasing.
    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    /// All `min(N, n)` singular values of the snapshot matrix.
    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn rank(&self) -> usize {
        self.modes.ncols()
    }

    pub fn dim(&self) -> usize {
        self.modes.nrows()
    }

    /// `modes^T (x - mean)`.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::shape(format!("vector of length {}", self.dim()), x.len()));
        }
        let centred = DVector::from_fn(x.len(), |i, _| x[i] - self.mean[i]);
        Ok(self.modes.tr_mul(&centred).iter().copied().collect())
    }

    /// `mean + modes a`.
    pub fn reconstruct(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        if coeffs.len() != self.rank() {
            return Err(Error::shape(format!("{} coefficients", self.rank()), coeffs.len()));
        }
        let a = DVector::from_column_slice(coeffs);
        Ok((&self.modes * a + &self.mean).iter().copied().collect())
    }

    /// Coefficients of every snapshot column of `mat` (already centred if the
    /// matrix was), as an `r x n` matrix.
    pub fn coefficients(&self, mat: &SnapshotMatrix) -> Result<DMatrix<f64>> {
        if mat.n_rows() != self.dim() {
            return Err(Error::shape(format!("{} rows", self.dim()), mat.n_rows()));
        }
        Ok(self.modes.tr_mul(mat.data()))
    }
}

/// Thin SVD keeping the `r` leading triplets.
pub fn compute_basis(mat: &SnapshotMatrix, r: usize) -> Result<PodBasis> {
    let k = mat.n_rows().min(mat.n_cols());
    if r < 1 || r > k {
        return Err(Error::invalid(format!("rank {r} outside 1..={k}")));
    }
    let (u, s) = thin_svd(mat.data())?;
    Ok(PodBasis {
        modes: u.columns(0, r).into_owned(),
        singular_values: s[..r].to_vec(),
        spectrum: s,
        mean: mat.mean().clone(),
    })
}

/// All singular values of the snapshot matrix, non-increasing.
pub fn singular_values(mat: &SnapshotMatrix) -> Result<Vec<f64>> {
    Ok(thin_svd(mat.data())?.1)
}

/// Left singular vectors (`N x min(N, n)`) and singular values, sorted
/// non-increasing with ties in input order.
fn thin_svd(x: &DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let (n_rows, n_cols) = x.shape();
    let k = n_rows.min(n_cols);
    let (mut u, mut s) = if 4 * n_cols <= n_rows {
        // method of snapshots on the small Gram matrix
        let gram = x.tr_mul(x);
        let eig = SymmetricEigen::try_new(gram, f64::EPSILON, 10_000)
            .ok_or_else(|| Error::Decomposition("Gram eigensolver did not converge".into()))?;
        let order = descending(eig.eigenvalues.as_slice());
        let s: Vec<f64> = order
            .iter()
            .map(|&i| eig.eigenvalues[i].max(0.0).sqrt())
            .collect();
        let sigma1 = s[0];
        let mut u = DMatrix::zeros(n_rows, k);
        for (j, &i) in order.iter().enumerate() {
            if s[j] > ZERO_TOL * sigma1 {
                let col = x * eig.eigenvectors.column(i) / s[j];
                u.set_column(j, &col);
            }
        }
        (u, s)
    } else {
        let svd = x
            .clone()
            .try_svd(true, false, f64::EPSILON, 10_000)
            .ok_or_else(|| Error::Decomposition("SVD did not converge".into()))?;
        let raw_u = svd.u.expect("requested U");
        let order = descending(svd.singular_values.as_slice());
        let s: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
        let mut u = DMatrix::zeros(n_rows, k);
        for (j, &i) in order.iter().enumerate() {
            u.set_column(j, &raw_u.column(i));
        }
        (u, s)
    };
    let sigma1 = s[0];
    for (j, v) in s.iter_mut().enumerate() {
        if !(*v > ZERO_TOL * sigma1) {
            *v = 0.0;
            u.column_mut(j).fill(0.0);
        }
    }
    orthonormalize(&mut u);
    fix_signs(&mut u);
    Ok((u, s))
}

fn descending(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    idx
}

/// Two passes of modified Gram-Schmidt; columns that vanish are replaced by
/// the first coordinate vector independent of the preceding columns.
fn orthonormalize(u: &mut DMatrix<f64>) {
    let (n, k) = u.shape();
    let mut next_unit = 0;
    for j in 0..k {
        let mut ok = false;
        let start = u.column(j).norm();
        if start > 0.0 {
            for _ in 0..2 {
                for i in 0..j {
                    let d = u.column(i).dot(&u.column(j));
                    let qi = u.column(i).clone_owned();
                    u.column_mut(j).axpy(-d, &qi, 1.0);
                }
            }
            let norm = u.column(j).norm();
            if norm > 1e-6 * start {
                u.column_mut(j).unscale_mut(norm);
                ok = true;
            }
        }
        while !ok && next_unit < n {
            let mut e = DVector::zeros(n);
            e[next_unit] = 1.0;
            next_unit += 1;
            for _ in 0..2 {
                for i in 0..j {
                    let d = u.column(i).dot(&e);
                    e.axpy(-d, &u.column(i), 1.0);
                }
            }
            let norm = e.norm();
            if norm > 0.5 {
                u.set_column(j, &(e / norm));
                ok = true;
            }
        }
    }
}

/// Largest-magnitude entry of every column made positive.
fn fix_signs(u: &mut DMatrix<f64>) {
    for mut col in u.column_iter_mut() {
        let mut best = 0;
        for i in 0..col.len() {
            if col[i].abs() > col[best].abs() {
                best = i;
            }
        }
        if col[best] < 0.0 {
            col.neg_mut();
        }
    }
}

/// Captured energy `sum_{i<=r} s_i^2 / sum_i s_i^2`.
pub fn energy_ratio(values: &[f64], r: usize) -> Result<f64> {
    if r < 1 || r > values.len() {
        return Err(Error::invalid(format!("rank {r} outside 1..={}", values.len())));
    }
    let total: f64 = values.iter().map(|s| s * s).sum();
    if !(total > 0.0) {
        return Err(Error::invalid("all singular values are zero"));
    }
    let kept: f64 = values[..r].iter().map(|s| s * s).sum();
    Ok(kept / total)
}

/// One line of a singular-value table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingularValueRow {
    pub space: String,
    /// 1-based mode index.
    pub index: usize,
    pub sigma: f64,
    pub ratio: f64,
}

/// `sigma_i / sigma_1` for every named spectrum.
pub fn singular_value_report(spaces: &[(&str, &[f64])]) -> Result<Vec<SingularValueRow>> {
    let mut rows = Vec::new();
    for (name, values) in spaces {
        let first = values.first().copied().unwrap_or(0.0);
        if !(first > 0.0) {
            return Err(Error::invalid(format!("leading singular value of `{name}` is zero")));
        }
        rows.extend(values.iter().enumerate().map(|(i, &s)| SingularValueRow {
            space: name.to_string(),
            index: i + 1,
            sigma: s,
            ratio: s / first,
        }));
    }
    Ok(rows)
}

/// CSV with header `space,index,sigma,ratio`.
pub fn write_singular_value_csv<W: Write>(rows: &[SingularValueRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(["space", "index", "sigma", "ratio"])?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}
