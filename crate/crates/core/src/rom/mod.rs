//! Non-intrusive ROM: transform, POD, regress coefficients over parameters,
//! invert predictions back to physical space.

mod fourier;
pub mod regress;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cdt::{enforce_strict, CdtOptions, Density1D, DEFAULT_EPSILON};
use crate::error::{Error, Result};
use crate::grid::{relative_error, ErrorReport, Field2D, NormKind, SnapshotSet};
use crate::interp::isotonic;
use crate::pod::{compute_basis, singular_values, PodBasis, SnapshotMatrix};
use crate::radon::{default_angle_count, uniform_angles};
use crate::rcdt::{
    radial_domain, rcdt_forward_signed_with, rcdt_forward_with, rcdt_inverse_with, RcdtImage,
    ReferenceKind,
};
use regress::Fitted;
pub use regress::Regressor;

/// Options of the RCDT spaces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RcdtSpace {
    /// Projection angles; `None` uses one per pixel of the longer side.
    pub n_angles: Option<usize>,
    pub reference: ReferenceKind,
    pub epsilon: f64,
}

impl Default for RcdtSpace {
    fn default() -> Self {
        RcdtSpace {
            n_angles: None,
            reference: ReferenceKind::Uniform,
            epsilon: DEFAULT_EPSILON,
        }
    }
}

/// Representation in which POD and regression happen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpaceKind {
    Physical,
    Fourier,
    Rcdt(RcdtSpace),
    RcdtSigned(RcdtSpace),
}

impl SpaceKind {
    pub fn rcdt() -> Self {
        SpaceKind::Rcdt(RcdtSpace::default())
    }

    pub fn rcdt_signed() -> Self {
        SpaceKind::RcdtSigned(RcdtSpace::default())
    }

    pub fn label(&self) -> &'static str {
        match self {
            SpaceKind::Physical => "physical",
            SpaceKind::Fourier => "fourier",
            SpaceKind::Rcdt(_) => "rcdt",
            SpaceKind::RcdtSigned(_) => "rcdt_signed",
        }
    }
}

/// How normalisation masses are predicted in the RCDT spaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MassMode {
    /// Regressed with the same regressor as the coefficients.
    #[default]
    Regressed,
    /// Mean training mass, whatever the parameter.
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RomConfig {
    pub space: SpaceKind,
    pub r: usize,
    pub regressor: Regressor,
    /// Subtract the snapshot mean before the SVD.
    pub center: bool,
    pub mass_mode: MassMode,
}

impl RomConfig {
    pub fn new(space: SpaceKind, r: usize, regressor: Regressor) -> Self {
        RomConfig {
            space,
            r,
            regressor,
            center: false,
            mass_mode: MassMode::Regressed,
        }
    }
}

/// A field in its space representation.
#[derive(Debug, Clone, PartialEq)]
struct Encoded {
    vectors: Vec<Vec<f64>>,
    masses: Vec<f64>,
}

/// Forward and inverse space maps for one field shape.
#[derive(Debug, Clone)]
struct Codec {
    space: SpaceKind,
    rows: usize,
    cols: usize,
    rcdt: Option<RcdtContext>,
}

#[derive(Debug, Clone)]
struct RcdtContext {
    reference: Density1D,
    n_angles: usize,
    angles: Vec<f64>,
    cdt: CdtOptions,
    domain: (f64, f64),
}

impl Codec {
    fn new(space: SpaceKind, rows: usize, cols: usize) -> Result<Self> {
        let rcdt = match space {
            SpaceKind::Rcdt(o) | SpaceKind::RcdtSigned(o) => {
                let n_angles = o.n_angles.unwrap_or_else(|| default_angle_count(rows, cols));
                let reference = o.reference.density(rows, cols)?;
                Some(RcdtContext {
                    domain: radial_domain(reference.len()),
                    reference,
                    n_angles,
                    angles: uniform_angles(n_angles)?,
                    cdt: CdtOptions::new(o.epsilon)?,
                })
            }
            _ => None,
        };
        Ok(Codec {
            space,
            rows,
            cols,
            rcdt,
        })
    }

    fn parts(&self) -> usize {
        match self.space {
            SpaceKind::RcdtSigned(_) => 2,
            _ => 1,
        }
    }

    fn encode(&self, f: &Field2D) -> Result<Encoded> {
        if f.shape() != (self.rows, self.cols) {
            return Err(Error::shape(
                format!("{}x{}", self.rows, self.cols),
                format!("{}x{}", f.rows(), f.cols()),
            ));
        }
        match (&self.space, &self.rcdt) {
            (SpaceKind::Physical, _) => Ok(Encoded {
                vectors: vec![f.values().to_vec()],
                masses: vec![],
            }),
            (SpaceKind::Fourier, _) => Ok(Encoded {
                vectors: vec![fourier::forward(f.values(), self.rows, self.cols)],
                masses: vec![],
            }),
            (SpaceKind::Rcdt(_), Some(c)) => {
                let img = rcdt_forward_with(f, c.n_angles, &c.reference, c.cdt)?;
                Ok(Encoded {
                    masses: vec![img.mass()],
                    vectors: vec![img.maps().to_vec()],
                })
            }
            (SpaceKind::RcdtSigned(_), Some(c)) => {
                let img = rcdt_forward_signed_with(f, c.n_angles, &c.reference, c.cdt)?;
                Ok(Encoded {
                    masses: vec![img.positive_part.mass(), img.negative_part.mass()],
                    vectors: vec![
                        img.positive_part.maps().to_vec(),
                        img.negative_part.maps().to_vec(),
                    ],
                })
            }
            _ => unreachable!("RCDT context built for RCDT spaces"),
        }
    }

    /// Inverts a (possibly predicted) representation. Returns the field and
    /// the largest change made while repairing transport maps.
    fn decode(&self, mut vectors: Vec<Vec<f64>>, masses: &[f64]) -> Result<(Field2D, f64)> {
        match (&self.space, &self.rcdt) {
            (SpaceKind::Physical, _) => Ok((Field2D::from_values(self.rows, self.cols, vectors.remove(0))?, 0.0)),
            (SpaceKind::Fourier, _) => Ok((
                Field2D::from_values(self.rows, self.cols, fourier::inverse(&vectors[0], self.rows, self.cols))?,
                0.0,
            )),
            (_, Some(c)) => {
                let mut repair: f64 = 0.0;
                let mut fields = Vec::with_capacity(vectors.len());
                for (v, &m) in vectors.iter_mut().zip(masses) {
                    repair = repair.max(repair_maps(v, c.reference.len(), c.domain));
                    let img = RcdtImage::from_maps(
                        std::mem::take(v),
                        c.angles.clone(),
                        m.max(0.0),
                        (self.rows, self.cols),
                        c.domain,
                    )?;
                    fields.push(rcdt_inverse_with(&img, &c.reference, c.cdt)?);
                }
                let field = match fields.len() {
                    1 => fields.remove(0),
                    _ => fields[0].difference(&fields[1])?,
                };
                Ok((field, repair))
            }
            _ => unreachable!("RCDT context built for RCDT spaces"),
        }
    }

    fn encode_all(&self, fields: &[Field2D]) -> Result<Vec<Encoded>> {
        fields.par_iter().map(|f| self.encode(f)).collect()
    }
}

/// Makes every column of stacked transport maps strictly increasing inside
/// `domain`: clamp, isotonic projection, then separate exact ties. Returns the
/// largest absolute change.
pub fn repair_maps(values: &mut [f64], n_nodes: usize, domain: (f64, f64)) -> f64 {
    let mut worst: f64 = 0.0;
    for col in values.chunks_exact_mut(n_nodes) {
        if col.windows(2).all(|w| w[1] > w[0]) && col[0] >= domain.0 && col[n_nodes - 1] <= domain.1 {
            continue;
        }
        let raw = col.to_vec();
        for v in col.iter_mut() {
            *v = v.clamp(domain.0, domain.1);
        }
        if col.windows(2).any(|w| w[1] < w[0]) {
            let fit = isotonic(col);
            col.copy_from_slice(&fit);
        }
        enforce_strict(col, domain.1);
        for (a, b) in col.iter().zip(&raw) {
            worst = worst.max((a - b).abs());
        }
    }
    worst
}

/// A prediction at one parameter value.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub field: Field2D,
    /// Parameter outside the training range.
    pub extrapolated: bool,
    /// Largest change applied to predicted transport maps (0 when none).
    pub repair_magnitude: f64,
}

/// Fitted ROM.
#[derive(Debug, Clone)]
pub struct RomModel {
    config: RomConfig,
    codec: Codec,
    bases: Vec<PodBasis>,
    coefficients: Vec<DMatrix<f64>>,
    training_params: Vec<Vec<f64>>,
    masses: Vec<Vec<f64>>,
    mean_masses: Vec<f64>,
    fitted: Fitted,
}

impl RomModel {
    pub fn config(&self) -> &RomConfig {
        &self.config
    }

    pub fn space(&self) -> SpaceKind {
        self.config.space
    }

    /// One basis per representation part (two for the signed space).
    pub fn bases(&self) -> &[PodBasis] {
        &self.bases
    }

    pub fn training_params(&self) -> &[Vec<f64>] {
        &self.training_params
    }

    /// Per-snapshot masses (empty vectors outside the RCDT spaces).
    pub fn masses(&self) -> &[Vec<f64>] {
        &self.masses
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.codec.rows, self.codec.cols)
    }

    pub fn predict(&self, param: &[f64]) -> Result<Prediction> {
        let (row, extrapolated) = self.fitted.predict(param)?;
        if extrapolated {
            log::warn!("parameter {param:?} lies outside the training range");
        }
        let mut offset = 0;
        let mut vectors = Vec::with_capacity(self.bases.len());
        for b in &self.bases {
            vectors.push(b.reconstruct(&row[offset..offset + b.rank()])?);
            offset += b.rank();
        }
        let masses = match self.config.mass_mode {
            MassMode::Regressed => row[offset..].to_vec(),
            MassMode::Mean => self.mean_masses.clone(),
        };
        let (field, repair_magnitude) = self.codec.decode(vectors, &masses)?;
        if repair_magnitude > 0.0 {
            log::info!("repaired predicted transport maps (max change {repair_magnitude:e})");
        }
        Ok(Prediction {
            field,
            extrapolated,
            repair_magnitude,
        })
    }

    /// POD reconstruction of training snapshot `j` with its true masses.
    pub fn reconstruct_training(&self, j: usize) -> Result<Field2D> {
        if j >= self.training_params.len() {
            return Err(Error::invalid(format!("no training snapshot {j}")));
        }
        let vectors = self
            .bases
            .iter()
            .zip(&self.coefficients)
            .map(|(b, c)| b.reconstruct(c.column(j).as_slice()))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.codec.decode(vectors, &self.masses[j])?.0)
    }
}

/// Transforms the training set, builds the POD bases and fits the regressor.
pub fn build(training: &SnapshotSet, config: &RomConfig) -> Result<RomModel> {
    let n = training.len();
    if n < 2 {
        return Err(Error::invalid("a ROM needs at least two training snapshots"));
    }
    training.check_distinct_params()?;
    if config.r < 1 || config.r > n {
        return Err(Error::invalid(format!("rank {} outside 1..={n}", config.r)));
    }
    let (rows, cols) = training.shape();
    let codec = Codec::new(config.space, rows, cols)?;
    let encoded = codec.encode_all(training.snapshots())?;

    let mut bases = Vec::new();
    let mut coefficients = Vec::new();
    for p in 0..codec.parts() {
        let columns: Vec<Vec<f64>> = encoded.iter().map(|e| e.vectors[p].clone()).collect();
        let mat = SnapshotMatrix::from_columns(&columns, config.center)?;
        let basis = compute_basis(&mat, config.r.min(mat.n_rows()))?;
        coefficients.push(basis.coefficients(&mat)?);
        bases.push(basis);
    }
    let masses: Vec<Vec<f64>> = encoded.iter().map(|e| e.masses.clone()).collect();
    let n_mass = masses[0].len();
    let mean_masses: Vec<f64> = (0..n_mass)
        .map(|k| masses.iter().map(|m| m[k]).sum::<f64>() / n as f64)
        .collect();

    let n_coef: usize = bases.iter().map(|b| b.rank()).sum();
    let regress_mass = config.mass_mode == MassMode::Regressed;
    let width = n_coef + if regress_mass { n_mass } else { 0 };
    let mut targets = DMatrix::zeros(n, width);
    for j in 0..n {
        let mut k = 0;
        for c in &coefficients {
            for i in 0..c.nrows() {
                targets[(j, k)] = c[(i, j)];
                k += 1;
            }
        }
        if regress_mass {
            for &m in &masses[j] {
                targets[(j, k)] = m;
                k += 1;
            }
        }
    }
    let fitted = Fitted::fit(config.regressor, training.params(), &targets)?;
    Ok(RomModel {
        config: *config,
        codec,
        bases,
        coefficients,
        training_params: training.params().to_vec(),
        masses,
        mean_masses,
        fitted,
    })
}

/// Projection errors at one truncation rank.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectionRow {
    pub r: usize,
    pub report: ErrorReport,
    /// `sqrt(sum_j ||x_j - x_j^r||^2) / sqrt(sum_j ||x_j||^2)` in physical space.
    pub aggregate: f64,
}

/// Project-and-reconstruct every snapshot at each rank, without regression.
pub fn projection_study(snapshots: &SnapshotSet, space: &SpaceKind, r_values: &[usize]) -> Result<Vec<ProjectionRow>> {
    let n = snapshots.len();
    let (rows, cols) = snapshots.shape();
    if let Some(&bad) = r_values.iter().find(|&&r| r < 1 || r > n) {
        return Err(Error::invalid(format!("rank {bad} outside 1..={n}")));
    }
    let Some(&r_max) = r_values.iter().max() else {
        return Ok(Vec::new());
    };
    let codec = Codec::new(*space, rows, cols)?;
    let encoded = codec.encode_all(snapshots.snapshots())?;
    let mut parts = Vec::new();
    for p in 0..codec.parts() {
        let columns: Vec<Vec<f64>> = encoded.iter().map(|e| e.vectors[p].clone()).collect();
        let mat = SnapshotMatrix::from_columns(&columns, false)?;
        let basis = compute_basis(&mat, r_max.min(mat.n_rows()))?;
        let coeffs = basis.coefficients(&mat)?;
        parts.push((basis, coeffs));
    }
    let energy: f64 = snapshots
        .snapshots()
        .iter()
        .flat_map(|f| f.values())
        .map(|v| v * v)
        .sum();

    let mut out = Vec::with_capacity(r_values.len());
    for &r in r_values {
        let results: Vec<(f64, f64)> = (0..n)
            .into_par_iter()
            .map(|j| {
                let vectors = parts
                    .iter()
                    .map(|(b, c)| {
                        let k = r.min(b.rank());
                        let a = c.column(j);
                        let v = b.modes().columns(0, k) * a.rows(0, k) + b.mean();
                        v.iter().copied().collect::<Vec<f64>>()
                    })
                    .collect();
                let (field, _) = codec.decode(vectors, &encoded[j].masses)?;
                let truth = &snapshots.snapshots()[j];
                let sq: f64 = truth
                    .values()
                    .iter()
                    .zip(field.values())
                    .map(|(a, b)| (a - b).powi(2))
                    .sum();
                Ok((relative_error(truth, &field, NormKind::L2)?, sq))
            })
            .collect::<Result<_>>()?;
        let aggregate = (results.iter().map(|x| x.1).sum::<f64>() / energy).sqrt();
        out.push(ProjectionRow {
            r,
            report: ErrorReport::new(results.iter().map(|x| x.0).collect(), NormKind::L2)?,
            aggregate,
        });
    }
    Ok(out)
}

/// Uncentred singular values of the snapshot matrix in `space`, one list per
/// part (two for the signed RCDT space).
pub fn space_singular_values(snapshots: &SnapshotSet, space: &SpaceKind) -> Result<Vec<Vec<f64>>> {
    let (rows, cols) = snapshots.shape();
    let codec = Codec::new(*space, rows, cols)?;
    let encoded = codec.encode_all(snapshots.snapshots())?;
    (0..codec.parts())
        .map(|p| {
            let columns: Vec<Vec<f64>> = encoded.iter().map(|e| e.vectors[p].clone()).collect();
            singular_values(&SnapshotMatrix::from_columns(&columns, false)?)
        })
        .collect()
}

/// Convex combination of two fields' representations, inverted to physical
/// space. Swapping the fields and replacing `weight` by `1 - weight` gives a
/// bitwise identical result.
pub fn interpolate_pair(a: &Field2D, b: &Field2D, weight: f64, space: &SpaceKind) -> Result<Field2D> {
    if !(0.0..=1.0).contains(&weight) {
        return Err(Error::invalid(format!("weight {weight} outside [0, 1]")));
    }
    a.check_shape(b)?;
    // derive both weights from the one >= 1/2 so that `1 - w` is exact
    let (wa, wb) = if weight >= 0.5 {
        (1.0 - weight, weight)
    } else {
        let wa = 1.0 - weight;
        (wa, 1.0 - wa)
    };
    let codec = Codec::new(*space, a.rows(), a.cols())?;
    let ea = codec.encode(a)?;
    let eb = codec.encode(b)?;
    let vectors = ea
        .vectors
        .iter()
        .zip(&eb.vectors)
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| wa * p + wb * q).collect())
        .collect();
    let masses: Vec<f64> = ea
        .masses
        .iter()
        .zip(&eb.masses)
        .map(|(p, q)| wa * p + wb * q)
        .collect();
    Ok(codec.decode(vectors, &masses)?.0)
}

/// Relative errors of predictions against the matching truths.
pub fn score(truth: &[Field2D], predicted: &[Field2D], norm: NormKind) -> Result<ErrorReport> {
    if truth.len() != predicted.len() {
        return Err(Error::shape(format!("{} predictions", truth.len()), predicted.len()));
    }
    let errs = truth
        .iter()
        .zip(predicted)
        .map(|(t, p)| relative_error(t, p, norm))
        .collect::<Result<Vec<_>>>()?;
    ErrorReport::new(errs, norm)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blob(rows: usize, cols: usize, cx: f64, cy: f64, sigma: f64) -> Field2D {
        Field2D::from_fn(rows, cols, |r, c| {
            (-0.5 * ((c as f64 - cx).powi(2) + (r as f64 - cy).powi(2)) / (sigma * sigma)).exp()
        })
        .unwrap()
    }

    fn small_rcdt() -> SpaceKind {
        SpaceKind::Rcdt(RcdtSpace {
            n_angles: Some(24),
            ..Default::default()
        })
    }

    #[test]
    fn space_labels_and_serde() {
        assert_eq!(SpaceKind::rcdt_signed().label(), "rcdt_signed");
        let json = serde_json::to_string(&SpaceKind::rcdt()).unwrap();
        let back: SpaceKind = serde_json::from_str(&json).unwrap();
        assert_eq!(back, SpaceKind::rcdt());
        let p: SpaceKind = serde_json::from_str(r#"{"kind":"physical"}"#).unwrap();
        assert_eq!(p, SpaceKind::Physical);
    }

    #[test]
    fn build_validation() {
        let a = blob(20, 20, 8.0, 9.0, 3.0);
        let one = SnapshotSet::with_scalar_params(vec![a.clone()], &[0.0]).unwrap();
        let cfg = RomConfig::new(SpaceKind::Physical, 1, Regressor::Linear);
        assert!(build(&one, &cfg).is_err());
        let dup = SnapshotSet::with_scalar_params(vec![a.clone(), a.clone()], &[1.0, 1.0]);
        let dup_err = match dup {
            Ok(set) => build(&set, &cfg).unwrap_err(),
            Err(e) => e,
        };
        assert!(matches!(dup_err, Error::DuplicateParameter(_)));
        let two = SnapshotSet::with_scalar_params(vec![a.clone(), a.scaled(2.0).unwrap()], &[0.0, 1.0]).unwrap();
        assert!(build(&two, &RomConfig::new(SpaceKind::Physical, 3, Regressor::Linear)).is_err());
        let neg = SnapshotSet::with_scalar_params(vec![a.clone(), a.scaled(-1.0).unwrap()], &[0.0, 1.0]).unwrap();
        assert!(matches!(
            build(&neg, &RomConfig::new(small_rcdt(), 1, Regressor::Linear)),
            Err(Error::NegativeValues { .. })
        ));
    }

    #[test]
    fn two_snapshot_linear_model_recovers_nodes() {
        let a = blob(24, 24, 9.0, 10.0, 3.0);
        let b = blob(24, 24, 14.0, 12.0, 3.5);
        let set = SnapshotSet::with_scalar_params(vec![a.clone(), b.clone()], &[0.0, 1.0]).unwrap();
        for space in [SpaceKind::Physical, SpaceKind::Fourier, small_rcdt()] {
            let model = build(&set, &RomConfig::new(space, 2, Regressor::Linear)).unwrap();
            for (j, p) in [0.0, 1.0].iter().enumerate() {
                let pred = model.predict(&[*p]).unwrap();
                assert!(!pred.extrapolated);
                let own = model.reconstruct_training(j).unwrap();
                let d = relative_error(&own, &pred.field, NormKind::L2).unwrap();
                assert!(d <= 1e-8, "{}: {d}", space.label());
                if !matches!(space, SpaceKind::Rcdt(_)) {
                    let truth = &set.snapshots()[j];
                    assert!(relative_error(truth, &pred.field, NormKind::L2).unwrap() <= 1e-8);
                }
            }
            assert!(model.predict(&[1.5]).unwrap().extrapolated);
        }
    }

    #[test]
    fn constant_family_predicts_constant() {
        let a = blob(16, 16, 7.0, 8.0, 2.5);
        let set = SnapshotSet::with_scalar_params(vec![a.clone(); 4], &[0.0, 1.0, 2.0, 3.0]).unwrap();
        for reg in [Regressor::Linear, Regressor::Rbf, Regressor::Gpr] {
            let model = build(&set, &RomConfig::new(SpaceKind::Physical, 2, reg)).unwrap();
            let p = model.predict(&[1.3]).unwrap();
            assert!(relative_error(&a, &p.field, NormKind::L2).unwrap() < 1e-9, "{reg:?}");
        }
    }

    #[test]
    fn physical_full_rank_projection_is_exact() {
        let fields: Vec<Field2D> = (0..5).map(|k| blob(20, 18, 4.0 + 2.0 * k as f64, 9.0, 2.0)).collect();
        let set = SnapshotSet::with_scalar_params(fields, &[0.0, 1.0, 2.0, 3.0, 4.0]).unwrap();
        let rows = projection_study(&set, &SpaceKind::Physical, &[1, 3, 5]).unwrap();
        assert!(rows[2].report.per_snapshot.iter().all(|&e| e <= 1e-9));
        assert!(rows[0].aggregate >= rows[1].aggregate && rows[1].aggregate >= rows[2].aggregate);
        assert!(projection_study(&set, &SpaceKind::Physical, &[6]).is_err());
    }

    #[test]
    fn pair_interpolation_in_rcdt_moves_the_blob() {
        let n = 64;
        let a = blob(n, n, 22.0, 31.5, 4.0);
        let b = blob(n, n, 42.0, 31.5, 4.0);
        let mid = blob(n, n, 32.0, 31.5, 4.0);
        let space = SpaceKind::Rcdt(RcdtSpace {
            n_angles: Some(64),
            ..Default::default()
        });
        let got = interpolate_pair(&a, &b, 0.5, &space).unwrap();
        let e = relative_error(&mid, &got, NormKind::L2).unwrap();
        assert!(e <= 5e-2, "{e}");

        let ghost = interpolate_pair(&a, &b, 0.5, &SpaceKind::Physical).unwrap();
        assert!((ghost.max() - 0.5).abs() < 0.01);
        assert!(interpolate_pair(&a, &b, 1.5, &space).is_err());
    }

    #[test]
    fn pair_interpolation_is_symmetric() {
        let a = blob(20, 20, 6.0, 7.0, 2.0);
        let b = blob(20, 20, 12.0, 11.0, 3.0);
        for w in [0.0, 0.1, 0.3, 0.5, 0.7, 0.9, 1.0] {
            for space in [SpaceKind::Physical, SpaceKind::Fourier, small_rcdt()] {
                let x = interpolate_pair(&a, &b, w, &space).unwrap();
                let y = interpolate_pair(&b, &a, 1.0 - w, &space).unwrap();
                assert_eq!(x, y, "w={w} {}", space.label());
            }
        }
    }

    #[test]
    fn map_repair() {
        let mut v = vec![0.0, 2.0, 1.0, 3.0, -9.0, 1.0, 2.0, 3.0];
        let m = repair_maps(&mut v, 4, (-5.0, 5.0));
        assert!(v[..4].windows(2).all(|w| w[1] > w[0]));
        assert!(v[4..].windows(2).all(|w| w[1] > w[0]));
        assert_eq!(v[4], -5.0);
        assert!((m - 4.0).abs() < 1e-12);
        let mut ok = vec![0.0, 1.0, 2.0];
        assert_eq!(repair_maps(&mut ok, 3, (-1.0, 3.0)), 0.0);
    }

    #[test]
    fn signed_space_roundtrips_dipole() {
        let pos = blob(32, 32, 10.0, 15.5, 3.0);
        let neg = blob(32, 32, 21.0, 15.5, 3.0);
        let f = pos.difference(&neg).unwrap();
        let g = f.scaled(0.5).unwrap();
        let set = SnapshotSet::with_scalar_params(vec![f.clone(), g], &[0.0, 1.0]).unwrap();
        let space = SpaceKind::RcdtSigned(RcdtSpace {
            n_angles: Some(32),
            ..Default::default()
        });
        let model = build(&set, &RomConfig::new(space, 2, Regressor::Linear)).unwrap();
        assert_eq!(model.bases().len(), 2);
        let p = model.predict(&[0.0]).unwrap();
        assert!(relative_error(&f, &p.field, NormKind::L2).unwrap() < 0.1);
        let half = model.predict(&[0.5]).unwrap();
        let want = f.scaled(0.75).unwrap();
        assert!(relative_error(&want, &half.field, NormKind::L2).unwrap() < 0.1);
    }
}
