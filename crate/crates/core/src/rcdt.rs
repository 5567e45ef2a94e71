//! Radon-CDT: a CDT of every Radon projection against a common reference.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cdt::{cdt_forward_with, cdt_inverse_with, CdtOptions, Density1D, TransportMap1D};
use crate::error::{Error, Result};
use crate::grid::{relative_error, ErrorReport, Field2D, NormKind};
use crate::radon::{projection_length, radon_forward, radon_inverse, Sinogram};

/// Reference density family on the radial grid.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReferenceKind {
    #[default]
    Uniform,
    /// Centred Gaussian with the given standard deviation in pixels.
    Gaussian { sigma: f64 },
}

impl ReferenceKind {
    /// Density with one node per radial bin of a `rows x cols` field.
    pub fn density(&self, rows: usize, cols: usize) -> Result<Density1D> {
        let n_s = projection_length(rows, cols);
        let domain = radial_domain(n_s);
        match *self {
            ReferenceKind::Uniform => Density1D::uniform(n_s, domain),
            ReferenceKind::Gaussian { sigma } => {
                if !(sigma > 0.0) {
                    return Err(Error::invalid(format!("reference sigma must be positive, got {sigma}")));
                }
                Density1D::from_fn(n_s, domain, |x| (-0.5 * (x / sigma).powi(2)).exp())
            }
        }
    }
}

/// Radial extent covered by `n_s` unit-spaced bins centred on `s = 0`.
pub fn radial_domain(n_s: usize) -> (f64, f64) {
    let half = n_s as f64 / 2.0;
    (-half, half)
}

/// Uniform reference on the radial grid of a `rows x cols` field.
pub fn default_reference(rows: usize, cols: usize) -> Result<Density1D> {
    ReferenceKind::Uniform.density(rows, cols)
}

/// Per-angle transport maps of a nonnegative field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RcdtImage {
    angles: Vec<f64>,
    /// angle-major, `n_nodes` values per angle
    maps: Vec<f64>,
    n_nodes: usize,
    mass: f64,
    shape: (usize, usize),
    domain: (f64, f64),
    n_s: usize,
}

impl RcdtImage {
    /// Assembles an image from stacked maps, validating every column.
    pub fn from_maps(
        maps: Vec<f64>,
        angles: Vec<f64>,
        mass: f64,
        shape: (usize, usize),
        domain: (f64, f64),
    ) -> Result<Self> {
        if angles.is_empty() {
            return Err(Error::invalid("RCDT image needs at least one angle"));
        }
        if !maps.len().is_multiple_of(angles.len()) || maps.is_empty() {
            return Err(Error::shape(
                format!("a multiple of {} map values", angles.len()),
                maps.len(),
            ));
        }
        if maps.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("RCDT maps must be finite"));
        }
        if !(mass >= 0.0) || !mass.is_finite() {
            return Err(Error::invalid(format!("mass must be finite and >= 0, got {mass}")));
        }
        let n_nodes = maps.len() / angles.len();
        for col in maps.chunks_exact(n_nodes) {
            if let Some(i) = col.windows(2).position(|w| !(w[1] > w[0])) {
                return Err(Error::NonMonotone { index: i + 1 });
            }
        }
        Ok(RcdtImage {
            angles,
            maps,
            n_nodes,
            mass,
            shape,
            domain,
            n_s: projection_length(shape.0, shape.1),
        })
    }

    /// Zero-mass image with identity maps, used for an empty signed part.
    pub fn empty(angles: Vec<f64>, reference: &Density1D, shape: (usize, usize)) -> Result<Self> {
        let centres = reference.centres();
        let maps = angles.iter().flat_map(|_| centres.iter().copied()).collect();
        RcdtImage::from_maps(maps, angles, 0.0, shape, reference.domain())
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn n_angles(&self) -> usize {
        self.angles.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn maps(&self) -> &[f64] {
        &self.maps
    }

    pub fn column(&self, k: usize) -> &[f64] {
        &self.maps[k * self.n_nodes..(k + 1) * self.n_nodes]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> {
        self.maps.chunks_exact(self.n_nodes)
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn shape(&self) -> (usize, usize) {
        self.shape
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    /// `n_nodes x n_angles` matrix view for export.
    pub fn to_field(&self) -> Result<Field2D> {
        let n_a = self.n_angles().max(2);
        let mut v = vec![0.0; self.n_nodes * n_a];
        for i in 0..self.n_nodes {
            for k in 0..n_a {
                v[i * n_a + k] = self.column(k.min(self.n_angles() - 1))[i];
            }
        }
        Field2D::from_values(self.n_nodes, n_a, v)
    }
}

/// Separate transforms of the positive and negative parts of a field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignedRcdtImage {
    pub positive_part: RcdtImage,
    pub negative_part: RcdtImage,
}

pub fn rcdt_forward(field: &Field2D, n_angles: usize, reference: &Density1D) -> Result<RcdtImage> {
    rcdt_forward_with(field, n_angles, reference, CdtOptions::default())
}

pub fn rcdt_forward_with(
    field: &Field2D,
    n_angles: usize,
    reference: &Density1D,
    opts: CdtOptions,
) -> Result<RcdtImage> {
    let min = field.min();
    if min < 0.0 {
        return Err(Error::NegativeValues { min });
    }
    let mass = field.sum();
    if !(mass > 0.0) {
        return Err(Error::ZeroMass);
    }
    let sino = radon_forward(field, n_angles)?;
    let domain = radial_domain(sino.n_s());
    let maps: Vec<TransportMap1D> = sino
        .projections()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|p| {
            let d = Density1D::new(p.iter().map(|v| v.max(0.0)).collect(), domain)?;
            cdt_forward_with(&d, reference, opts)
        })
        .collect::<Result<_>>()?;
    let values = maps.iter().flat_map(|m| m.values().iter().copied()).collect();
    RcdtImage::from_maps(values, sino.angles().to_vec(), mass, field.shape(), domain)
}

pub fn rcdt_inverse(img: &RcdtImage, reference: &Density1D) -> Result<Field2D> {
    rcdt_inverse_with(img, reference, CdtOptions::default())
}

pub fn rcdt_inverse_with(img: &RcdtImage, reference: &Density1D, opts: CdtOptions) -> Result<Field2D> {
    let (rows, cols) = img.shape();
    if img.mass() == 0.0 {
        return Field2D::zeros(rows, cols);
    }
    let n_s = img.n_s;
    let projections: Vec<Vec<f64>> = img
        .columns()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|col| {
            let m = TransportMap1D::new(col.to_vec(), 1.0, img.domain(), n_s)?;
            Ok(cdt_inverse_with(&m, reference, opts)?.into_samples())
        })
        .collect::<Result<_>>()?;
    let sino = Sinogram::new(n_s, img.angles().to_vec(), projections.concat(), 1.0)?;
    radon_inverse(&sino, rows, cols)?.scaled(img.mass())
}

pub fn rcdt_forward_signed(field: &Field2D, n_angles: usize, reference: &Density1D) -> Result<SignedRcdtImage> {
    rcdt_forward_signed_with(field, n_angles, reference, CdtOptions::default())
}

pub fn rcdt_forward_signed_with(
    field: &Field2D,
    n_angles: usize,
    reference: &Density1D,
    opts: CdtOptions,
) -> Result<SignedRcdtImage> {
    let pos = field.map(|v| v.max(0.0))?;
    let neg = field.map(|v| (-v).max(0.0))?;
    let part = |f: &Field2D| -> Result<RcdtImage> {
        if f.sum() > 0.0 {
            rcdt_forward_with(f, n_angles, reference, opts)
        } else {
            let angles = crate::radon::uniform_angles(n_angles)?;
            let expected = radial_domain(projection_length(f.rows(), f.cols()));
            if reference.domain() != expected {
                return Err(Error::DomainMismatch {
                    signal: expected,
                    reference: reference.domain(),
                });
            }
            RcdtImage::empty(angles, reference, f.shape())
        }
    };
    Ok(SignedRcdtImage {
        positive_part: part(&pos)?,
        negative_part: part(&neg)?,
    })
}

pub fn rcdt_inverse_signed(img: &SignedRcdtImage, reference: &Density1D) -> Result<Field2D> {
    rcdt_inverse_signed_with(img, reference, CdtOptions::default())
}

pub fn rcdt_inverse_signed_with(
    img: &SignedRcdtImage,
    reference: &Density1D,
    opts: CdtOptions,
) -> Result<Field2D> {
    let p = &img.positive_part;
    let n = &img.negative_part;
    if p.angles() != n.angles() || p.shape() != n.shape() {
        return Err(Error::shape(
            format!("{} angles, shape {:?}", p.n_angles(), p.shape()),
            format!("{} angles, shape {:?}", n.n_angles(), n.shape()),
        ));
    }
    let a = rcdt_inverse_with(p, reference, opts)?;
    let b = rcdt_inverse_with(n, reference, opts)?;
    a.difference(&b)
}

/// Input, reconstruction and signed difference of one roundtrip.
#[derive(Debug, Clone, PartialEq)]
pub struct Roundtrip {
    pub input: Field2D,
    pub reconstruction: Field2D,
    pub difference: Field2D,
    pub report: ErrorReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RoundtripOptions {
    pub cdt: CdtOptions,
    /// Use the signed transform pair.
    pub signed: bool,
    /// Exclude this many border pixels when scoring the reconstruction.
    pub crop_margin: usize,
}

/// Forward and inverse transform with the relative L2 error of the result.
pub fn roundtrip_report(field: &Field2D, n_angles: usize, reference: &Density1D) -> Result<(Field2D, ErrorReport)> {
    let rt = roundtrip(field, n_angles, reference, RoundtripOptions::default())?;
    Ok((rt.reconstruction, rt.report))
}

pub fn roundtrip(
    field: &Field2D,
    n_angles: usize,
    reference: &Density1D,
    opts: RoundtripOptions,
) -> Result<Roundtrip> {
    let reconstruction = if opts.signed {
        let img = rcdt_forward_signed_with(field, n_angles, reference, opts.cdt)?;
        rcdt_inverse_signed_with(&img, reference, opts.cdt)?
    } else {
        let img = rcdt_forward_with(field, n_angles, reference, opts.cdt)?;
        rcdt_inverse_with(&img, reference, opts.cdt)?
    };
    let e = if opts.crop_margin > 0 {
        relative_error(
            &crop(field, opts.crop_margin)?,
            &crop(&reconstruction, opts.crop_margin)?,
            NormKind::L2,
        )?
    } else {
        relative_error(field, &reconstruction, NormKind::L2)?
    };
    Ok(Roundtrip {
        input: field.clone(),
        difference: reconstruction.difference(field)?,
        reconstruction,
        report: ErrorReport::new(vec![e], NormKind::L2)?,
    })
}

fn crop(field: &Field2D, margin: usize) -> Result<Field2D> {
    let (rows, cols) = field.shape();
    if 2 * margin + 2 > rows || 2 * margin + 2 > cols {
        return Err(Error::invalid(format!("crop margin {margin} too large for {rows}x{cols}")));
    }
    Field2D::from_fn(rows - 2 * margin, cols - 2 * margin, |r, c| {
        field.get(r + margin, c + margin)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blob(n: usize, cx: f64, cy: f64, sigma: f64) -> Field2D {
        Field2D::from_fn(n, n, |r, c| {
            let d2 = (c as f64 - cx).powi(2) + (r as f64 - cy).powi(2);
            (-0.5 * d2 / (sigma * sigma)).exp()
        })
        .unwrap()
    }

    #[test]
    fn reference_kinds() {
        let u = default_reference(30, 40).unwrap();
        assert_eq!(u.len(), 51);
        assert_eq!(u.domain(), (-25.5, 25.5));
        let g = ReferenceKind::Gaussian { sigma: 5.0 }.density(30, 40).unwrap();
        assert_eq!(g.len(), 51);
        assert!(ReferenceKind::Gaussian { sigma: 0.0 }.density(30, 40).is_err());
    }

    #[test]
    fn negative_and_zero_fields_are_rejected() {
        let r = default_reference(16, 16).unwrap();
        let mut f = blob(16, 7.5, 7.5, 3.0).into_values();
        f[3] = -0.1;
        let f = Field2D::from_values(16, 16, f).unwrap();
        assert!(matches!(rcdt_forward(&f, 8, &r), Err(Error::NegativeValues { .. })));
        let z = Field2D::zeros(16, 16).unwrap();
        assert!(matches!(rcdt_forward(&z, 8, &r), Err(Error::ZeroMass)));
    }

    #[test]
    fn columns_are_monotone_and_mass_is_field_sum() {
        let f = blob(40, 15.0, 22.0, 4.0);
        let r = default_reference(40, 40).unwrap();
        let img = rcdt_forward(&f, 20, &r).unwrap();
        assert_eq!(img.n_angles(), 20);
        assert_eq!(img.n_nodes(), r.len());
        assert!(img.columns().all(|c| c.windows(2).all(|w| w[1] > w[0])));
        assert!((img.mass() - f.sum()).abs() < 1e-12 * f.sum());
    }

    #[test]
    fn scale_equivariance() {
        let f = blob(48, 20.0, 25.0, 5.0);
        let r = default_reference(48, 48).unwrap();
        let a = rcdt_forward(&f, 24, &r).unwrap();
        let b = rcdt_forward(&f.scaled(7.5).unwrap(), 24, &r).unwrap();
        for (x, y) in a.maps().iter().zip(b.maps()) {
            assert!((x - y).abs() < 1e-9);
        }
        assert!((b.mass() / a.mass() - 7.5).abs() < 1e-12);
        let ra = rcdt_inverse(&a, &r).unwrap();
        let rb = rcdt_inverse(&b, &r).unwrap();
        let e = relative_error(&ra.scaled(7.5).unwrap(), &rb, NormKind::L2).unwrap();
        assert!(e < 1e-9, "{e}");
    }

    #[test]
    fn isotropic_gaussian_has_equal_columns() {
        let f = blob(96, 47.5, 47.5, 10.0);
        let r = default_reference(96, 96).unwrap();
        let img = rcdt_forward(&f, 16, &r).unwrap();
        let c0 = img.column(0).to_vec();
        // map values are positions, so the tolerance is relative to the domain
        let width = img.domain().1 - img.domain().0;
        for k in 1..img.n_angles() {
            let dev = img
                .column(k)
                .iter()
                .zip(&c0)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(dev < 1e-3 * width, "angle {k}: {dev}");
        }
    }

    #[test]
    fn translation_shifts_columns_by_projected_offset() {
        // shift (dx, dy) = (6, -4) pixels: x right, y up, so row offset is +4
        let n = 80;
        let centred = blob(n, 39.5, 39.5, 6.0);
        let moved = blob(n, 45.5, 43.5, 6.0);
        let r = ReferenceKind::Gaussian { sigma: 6.0 }.density(n, n).unwrap();
        let a = rcdt_forward(&centred, 12, &r).unwrap();
        let b = rcdt_forward(&moved, 12, &r).unwrap();
        let centres = r.centres();
        for (k, &theta) in a.angles().iter().enumerate() {
            let want = 6.0 * theta.cos() - 4.0 * theta.sin();
            for (i, &s) in centres.iter().enumerate() {
                if s.abs() < 8.0 {
                    let got = b.column(k)[i] - a.column(k)[i];
                    assert!((got - want).abs() < 5e-2, "angle {k} node {i}: {got} vs {want}");
                }
            }
        }
    }

    #[test]
    fn signed_parts() {
        let f = blob(32, 15.5, 15.5, 4.0);
        let r = default_reference(32, 32).unwrap();
        let s = rcdt_forward_signed(&f, 16, &r).unwrap();
        assert_eq!(s.negative_part.mass(), 0.0);
        assert_eq!(s.positive_part, rcdt_forward(&f, 16, &r).unwrap());
        for (a, b) in s.negative_part.column(3).iter().zip(r.centres()) {
            assert_eq!(*a, b);
        }

        let neg = f.scaled(-1.0).unwrap();
        let t = rcdt_forward_signed(&neg, 16, &r).unwrap();
        assert_eq!(t.positive_part.maps(), s.negative_part.maps());
        assert_eq!(t.negative_part, s.positive_part);

        let a = rcdt_inverse_signed(&s, &r).unwrap();
        let b = rcdt_inverse(&rcdt_forward(&f, 16, &r).unwrap(), &r).unwrap();
        assert!(relative_error(&b, &a, NormKind::L2).unwrap() <= 1e-9);
    }

    #[test]
    fn non_monotone_columns_are_rejected() {
        let r = default_reference(8, 8).unwrap();
        let mut maps: Vec<f64> = r.centres();
        maps.extend(r.centres());
        maps.swap(3, 4);
        assert!(matches!(
            RcdtImage::from_maps(maps, vec![0.0, 1.0], 1.0, (8, 8), r.domain()),
            Err(Error::NonMonotone { .. })
        ));
    }

    #[test]
    fn roundtrip_outputs_and_crop() {
        let f = blob(64, 31.5, 31.5, 8.0);
        let r = default_reference(64, 64).unwrap();
        let (rec, rep) = roundtrip_report(&f, 64, &r).unwrap();
        assert_eq!(rec.shape(), f.shape());
        assert!(rep.mean > 0.0 && rep.mean < 0.1, "{}", rep.mean);
        let rt = roundtrip(
            &f,
            64,
            &r,
            RoundtripOptions {
                crop_margin: 4,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(rt.difference, rt.reconstruction.difference(&f).unwrap());
        assert!(rt.report.mean <= rep.mean);
        assert!(roundtrip(
            &f,
            8,
            &r,
            RoundtripOptions {
                crop_margin: 40,
                ..Default::default()
            }
        )
        .is_err());
    }
}
