//! Multi-output regression of targets over training parameters.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// GPR observation noise added to the kernel diagonal.
pub const GPR_NOISE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regressor {
    /// Piecewise linear in a scalar parameter.
    #[default]
    Linear,
    /// Thin-plate spline with a linear polynomial tail, exact at the nodes.
    Rbf,
    /// Squared-exponential Gaussian process posterior mean.
    Gpr,
}

/// A regressor fitted to `n` training parameters and an `n x m` target matrix.
#[derive(Debug, Clone)]
pub(crate) enum Fitted {
    Linear {
        /// sorted parameters and the matching target rows
        xs: Vec<f64>,
        ys: DMatrix<f64>,
    },
    Rbf {
        params: Vec<Vec<f64>>,
        /// `(n + d + 1) x m` kernel and polynomial weights
        weights: DMatrix<f64>,
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    Gpr {
        params: Vec<Vec<f64>>,
        alpha: DMatrix<f64>,
        offset: DVector<f64>,
        length: f64,
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
}

fn bounds(params: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let d = params[0].len();
    let lo = (0..d)
        .map(|k| params.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min))
        .collect();
    let hi = (0..d)
        .map(|k| params.iter().map(|p| p[k]).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    (lo, hi)
}

fn outside(p: &[f64], lo: &[f64], hi: &[f64]) -> bool {
    p.iter().zip(lo.iter().zip(hi)).any(|(v, (l, h))| v < l || v > h)
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn tps(r: f64) -> f64 {
    if r == 0.0 {
        0.0
    } else {
        r * r * r.ln()
    }
}

impl Fitted {
    pub(crate) fn fit(kind: Regressor, params: &[Vec<f64>], targets: &DMatrix<f64>) -> Result<Self> {
        let n = params.len();
        if n < 2 {
            return Err(Error::invalid("regression needs at least two training points"));
        }
        if targets.nrows() != n {
            return Err(Error::shape(format!("{n} target rows"), targets.nrows()));
        }
        let d = params[0].len();
        if d == 0 || params.iter().any(|p| p.len() != d) {
            return Err(Error::invalid("parameters must share a non-zero dimension"));
        }
        match kind {
            Regressor::Linear => {
                if d != 1 {
                    return Err(Error::invalid(format!(
                        "linear regressor needs scalar parameters, got dimension {d}"
                    )));
                }
                let mut order: Vec<usize> = (0..n).collect();
                order.sort_by(|&a, &b| params[a][0].total_cmp(&params[b][0]));
                let xs = order.iter().map(|&i| params[i][0]).collect();
                let ys = DMatrix::from_fn(n, targets.ncols(), |i, j| targets[(order[i], j)]);
                Ok(Fitted::Linear { xs, ys })
            }
            Regressor::Rbf => {
                let k = n + d + 1;
                let mut a = DMatrix::zeros(k, k);
                for i in 0..n {
                    for j in 0..n {
                        a[(i, j)] = tps(dist(&params[i], &params[j]));
                    }
                    a[(i, n)] = 1.0;
                    a[(n, i)] = 1.0;
                    for q in 0..d {
                        a[(i, n + 1 + q)] = params[i][q];
                        a[(n + 1 + q, i)] = params[i][q];
                    }
                }
                let mut rhs = DMatrix::zeros(k, targets.ncols());
                rhs.rows_mut(0, n).copy_from(targets);
                let weights = a
                    .lu()
                    .solve(&rhs)
                    .ok_or_else(|| Error::Decomposition("RBF system is singular".into()))?;
                let (lo, hi) = bounds(params);
                Ok(Fitted::Rbf {
                    params: params.to_vec(),
                    weights,
                    lo,
                    hi,
                })
            }
            Regressor::Gpr => {
                let mut pair = Vec::with_capacity(n * (n - 1) / 2);
                for i in 0..n {
                    for j in i + 1..n {
                        pair.push(dist(&params[i], &params[j]));
                    }
                }
                pair.sort_by(f64::total_cmp);
                let m = pair.len();
                let length = if m % 2 == 1 {
                    pair[m / 2]
                } else {
                    0.5 * (pair[m / 2 - 1] + pair[m / 2])
                };
                if !(length > 0.0) {
                    return Err(Error::invalid("GPR length scale is zero"));
                }
                let offset = DVector::from_fn(targets.ncols(), |j, _| targets.column(j).mean());
                let mut centred = targets.clone();
                for mut row in centred.row_iter_mut() {
                    row -= offset.transpose();
                }
                let kernel = DMatrix::from_fn(n, n, |i, j| se(&params[i], &params[j], length));
                let mut noise = GPR_NOISE;
                let chol = loop {
                    let k = &kernel + DMatrix::identity(n, n) * noise;
                    if let Some(c) = k.cholesky() {
                        break c;
                    }
                    if noise > 1e-4 {
                        return Err(Error::Decomposition("GPR kernel is not positive definite".into()));
                    }
                    noise *= 10.0;
                    log::warn!("GPR kernel ill-conditioned, raising noise to {noise:e}");
                };
                let alpha = chol.solve(&centred);
                let (lo, hi) = bounds(params);
                Ok(Fitted::Gpr {
                    params: params.to_vec(),
                    alpha,
                    offset,
                    length,
                    lo,
                    hi,
                })
            }
        }
    }

    /// Predicted target row and whether `p` lies outside the training range.
    pub(crate) fn predict(&self, p: &[f64]) -> Result<(Vec<f64>, bool)> {
        match self {
            Fitted::Linear { xs, ys } => {
                if p.len() != 1 {
                    return Err(Error::shape("scalar parameter", p.len()));
                }
                let x = p[0];
                let n = xs.len();
                let extrapolated = x < xs[0] || x > xs[n - 1];
                let k = xs.partition_point(|&v| v <= x).clamp(1, n - 1) - 1;
                let w = (x - xs[k]) / (xs[k + 1] - xs[k]);
                let row = (0..ys.ncols())
                    .map(|j| (1.0 - w) * ys[(k, j)] + w * ys[(k + 1, j)])
                    .collect();
                Ok((row, extrapolated))
            }
            Fitted::Rbf {
                params,
                weights,
                lo,
                hi,
            } => {
                check_dim(p, lo.len())?;
                let n = params.len();
                let mut basis = DVector::zeros(weights.nrows());
                for (i, q) in params.iter().enumerate() {
                    basis[i] = tps(dist(p, q));
                }
                basis[n] = 1.0;
                for (q, v) in p.iter().enumerate() {
                    basis[n + 1 + q] = *v;
                }
                let row = weights.tr_mul(&basis).iter().copied().collect();
                Ok((row, outside(p, lo, hi)))
            }
            Fitted::Gpr {
                params,
                alpha,
                offset,
                length,
                lo,
                hi,
            } => {
                check_dim(p, lo.len())?;
                let k = DVector::from_iterator(params.len(), params.iter().map(|q| se(p, q, *length)));
                let row = (alpha.tr_mul(&k) + offset).iter().copied().collect();
                Ok((row, outside(p, lo, hi)))
            }
        }
    }
}

fn check_dim(p: &[f64], d: usize) -> Result<()> {
    if p.len() != d {
        return Err(Error::shape(format!("parameter of dimension {d}"), p.len()));
    }
    Ok(())
}

fn se(a: &[f64], b: &[f64], length: f64) -> f64 {
    (-0.5 * (dist(a, b) / length).powi(2)).exp()
}
