//! One-dimensional cumulative distribution transform.
//!
//! Densities are sampled at cell centres of a uniform grid over `[x1, x2]`.
//! The signal CDF is taken piecewise linear between cell edges, so the forward
//! map is exact for piecewise-constant densities; the reference CDF is
//! evaluated at the reference cell centres.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interp::Pchip;

/// Relative regulariser added to every bin before normalisation.
pub const DEFAULT_EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdtOptions {
    /// `eps * max(sample) + 1e-300` is added to every bin. `0` disables it.
    pub epsilon: f64,
}

impl Default for CdtOptions {
    fn default() -> Self {
        CdtOptions {
            epsilon: DEFAULT_EPSILON,
        }
    }
}

impl CdtOptions {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon >= 0.0) || !epsilon.is_finite() {
            return Err(Error::invalid(format!("epsilon must be finite and >= 0, got {epsilon}")));
        }
        Ok(CdtOptions { epsilon })
    }
}

/// Nonnegative samples at the cell centres of a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Density1D {
    samples: Vec<f64>,
    domain: (f64, f64),
}

impl Density1D {
    pub fn new(samples: Vec<f64>, domain: (f64, f64)) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::invalid("a density needs at least 2 samples"));
        }
        if !(domain.0 < domain.1) || !domain.0.is_finite() || !domain.1.is_finite() {
            return Err(Error::invalid(format!("bad domain {domain:?}")));
        }
        if let Some(&bad) = samples.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite density sample {bad}")));
        }
        let min = samples.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < 0.0 {
            return Err(Error::NegativeValues { min });
        }
        Ok(Density1D { samples, domain })
    }

    pub fn uniform(n: usize, domain: (f64, f64)) -> Result<Self> {
        let h = (domain.1 - domain.0) / n as f64;
        Density1D::new(vec![1.0 / (h * n as f64); n], domain)
    }

    /// Samples `f` at the cell centres.
    pub fn from_fn(n: usize, domain: (f64, f64), f: impl Fn(f64) -> f64) -> Result<Self> {
        let h = (domain.1 - domain.0) / n as f64;
        Density1D::new(
            (0..n).map(|i| f(domain.0 + (i as f64 + 0.5) * h)).collect(),
            domain,
        )
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn dx(&self) -> f64 {
        (self.domain.1 - self.domain.0) / self.samples.len() as f64
    }

    pub fn centre(&self, i: usize) -> f64 {
        self.domain.0 + (i as f64 + 0.5) * self.dx()
    }

    pub fn centres(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.centre(i)).collect()
    }

    /// `sum(samples) * dx`.
    pub fn mass(&self) -> f64 {
        self.samples.iter().sum::<f64>() * self.dx()
    }

    /// Rescaled to unit mass.
    pub fn normalize(&self) -> Result<Density1D> {
        let m = self.mass();
        if !(m > 0.0) {
            return Err(Error::ZeroMass);
        }
        Ok(Density1D {
            samples: self.samples.iter().map(|v| v / m).collect(),
            domain: self.domain,
        })
    }

    fn regularized(&self, epsilon: f64) -> Density1D {
        if epsilon == 0.0 {
            return self.clone();
        }
        let max = self.samples.iter().cloned().fold(0.0, f64::max);
        let eps = epsilon * max + 1e-300;
        Density1D {
            samples: self.samples.iter().map(|v| v + eps).collect(),
            domain: self.domain,
        }
    }
}

/// Monotone map from reference nodes into the signal domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportMap1D {
    values: Vec<f64>,
    mass: f64,
    domain: (f64, f64),
    signal_len: usize,
}

impl TransportMap1D {
    /// Builds a map from raw parts, checking monotonicity and the domain.
    pub fn new(values: Vec<f64>, mass: f64, domain: (f64, f64), signal_len: usize) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::invalid("a transport map needs at least 2 nodes"));
        }
        if signal_len < 2 {
            return Err(Error::invalid("signal grid needs at least 2 cells"));
        }
        if !(mass >= 0.0) || !mass.is_finite() {
            return Err(Error::invalid(format!("mass must be finite and >= 0, got {mass}")));
        }
        if let Some(i) = values.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::NonMonotone { index: i + 1 });
        }
        if values[0] < domain.0 || values[values.len() - 1] > domain.1 {
            return Err(Error::invalid(format!(
                "map values [{}, {}] leave the domain {domain:?}",
                values[0],
                values[values.len() - 1]
            )));
        }
        Ok(TransportMap1D {
            values,
            mass,
            domain,
            signal_len,
        })
    }

    /// `x -> x` at the reference centres, carrying `mass`.
    pub fn identity(reference: &Density1D, mass: f64, signal_len: usize) -> Result<Self> {
        TransportMap1D::new(reference.centres(), mass, reference.domain(), signal_len)
    }

    /// Wraps values without validation; callers guarantee the invariants.
    pub(crate) fn from_parts(values: Vec<f64>, mass: f64, domain: (f64, f64), signal_len: usize) -> Self {
        TransportMap1D {
            values,
            mass,
            domain,
            signal_len,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn signal_len(&self) -> usize {
        self.signal_len
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn check_domains(signal: (f64, f64), reference: (f64, f64)) -> Result<()> {
    let tol = 1e-12 * (signal.1 - signal.0).abs().max(1.0);
    if (signal.0 - reference.0).abs() > tol || (signal.1 - reference.1).abs() > tol {
        return Err(Error::DomainMismatch { signal, reference });
    }
    Ok(())
}

/// Cumulative masses at cell edges, accumulated from both ends so that tail
/// masses near 1 keep full relative precision.
struct EdgeCdf {
    edges: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    cell: Vec<f64>,
}

impl EdgeCdf {
    fn new(d: &Density1D) -> Self {
        let n = d.len();
        let h = d.dx();
        let (x1, _) = d.domain();
        let total: f64 = d.samples().iter().sum();
        let cell: Vec<f64> = d.samples().iter().map(|v| v / total).collect();
        let mut lower = vec![0.0; n + 1];
        for k in 0..n {
            lower[k + 1] = lower[k] + cell[k];
        }
        let mut upper = vec![0.0; n + 1];
        for k in (0..n).rev() {
            upper[k] = upper[k + 1] + cell[k];
        }
        let edges = (0..=n).map(|k| x1 + k as f64 * h).collect();
        EdgeCdf {
            edges,
            lower,
            upper,
            cell,
        }
    }

    /// Mass left and right of each cell centre, as (cumulative to the cell
    /// edge, half-cell) pairs so callers can difference cumulative sums first.
    fn centre_masses(&self) -> Vec<Target> {
        self.cell
            .iter()
            .enumerate()
            .map(|(i, &c)| Target {
                lower: self.lower[i],
                upper: self.upper[i + 1],
                half: 0.5 * c,
            })
            .collect()
    }

    /// Position whose left (or right, whichever is smaller) mass matches the
    /// target; flat stretches resolve to their leftmost point.
    fn quantile(&self, t: &Target) -> f64 {
        let n = self.cell.len();
        let h = self.edges[1] - self.edges[0];
        if t.lower + t.half <= t.upper + t.half {
            let below = t.lower + t.half;
            if below <= 0.0 {
                return self.edges[0];
            }
            // cell k with lower[k] < below <= lower[k + 1]
            let k = (self.lower.partition_point(|&v| v < below) - 1).min(n - 1);
            let w = ((t.lower - self.lower[k]) + t.half) / self.cell[k];
            self.edges[k] + w.clamp(0.0, 1.0) * h
        } else {
            let above = t.upper + t.half;
            if above <= 0.0 {
                return self.edges[n];
            }
            // cell k with upper[k + 1] < above <= upper[k]
            let mut k = (self.upper.partition_point(|&v| v >= above) - 1).min(n - 1);
            let w = ((t.upper - self.upper[k + 1]) + t.half) / self.cell[k];
            if w >= 1.0 {
                while k > 0 && self.cell[k - 1] == 0.0 {
                    k -= 1;
                }
                return self.edges[k];
            }
            self.edges[k + 1] - w.max(0.0) * h
        }
    }
}

struct Target {
    lower: f64,
    upper: f64,
    half: f64,
}

/// Reference CDF at the reference cell centres after regularisation.
pub fn reference_cdf(reference: &Density1D, opts: CdtOptions) -> Result<Vec<f64>> {
    let r = reference.regularized(opts.epsilon).normalize()?;
    Ok(EdgeCdf::new(&r)
        .centre_masses()
        .into_iter()
        .map(|t| t.lower + t.half)
        .collect())
}

pub fn cdt_forward(signal: &Density1D, reference: &Density1D) -> Result<TransportMap1D> {
    cdt_forward_with(signal, reference, CdtOptions::default())
}

pub fn cdt_forward_with(
    signal: &Density1D,
    reference: &Density1D,
    opts: CdtOptions,
) -> Result<TransportMap1D> {
    check_domains(signal.domain(), reference.domain())?;
    let raw_mass = signal.mass();
    let f = signal.regularized(opts.epsilon).normalize()?;
    let r = reference.regularized(opts.epsilon).normalize()?;
    let fc = EdgeCdf::new(&f);
    let (x1, x2) = f.domain();
    let mut values: Vec<f64> = EdgeCdf::new(&r)
        .centre_masses()
        .into_iter()
        .map(|t| fc.quantile(&t).clamp(x1, x2))
        .collect();
    enforce_strict(&mut values, x2);
    Ok(TransportMap1D::from_parts(values, raw_mass, (x1, x2), f.len()))
}

/// Breaks floating-point ties left to right so the sequence is strictly
/// increasing, then pulls the tail back under `upper` if that overflowed it.
pub(crate) fn enforce_strict(values: &mut [f64], upper: f64) {
    for i in 1..values.len() {
        if values[i] <= values[i - 1] {
            values[i] = next_up(values[i - 1]);
        }
    }
    let n = values.len();
    if values[n - 1] > upper {
        values[n - 1] = upper;
        for i in (0..n - 1).rev() {
            if values[i] >= values[i + 1] {
                values[i] = next_down(values[i + 1]);
            } else {
                break;
            }
        }
    }
}

fn next_up(x: f64) -> f64 {
    let step = (x.abs() * f64::EPSILON).max(f64::MIN_POSITIVE);
    x + step
}

fn next_down(x: f64) -> f64 {
    let step = (x.abs() * f64::EPSILON).max(f64::MIN_POSITIVE);
    x - step
}

pub fn cdt_inverse(map: &TransportMap1D, reference: &Density1D) -> Result<Density1D> {
    cdt_inverse_with(map, reference, CdtOptions::default())
}

/// Reconstructs the signal density on its original grid.
///
/// The composite CDF `R(f^-1(x))` is known at the map nodes; it is interpolated
/// with a monotone cubic and differenced across each signal cell, which is a
/// central difference of the CDF at the cell centre.
pub fn cdt_inverse_with(
    map: &TransportMap1D,
    reference: &Density1D,
    opts: CdtOptions,
) -> Result<Density1D> {
    if let Some(i) = map.values.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::NonMonotone { index: i + 1 });
    }
    if map.len() != reference.len() {
        return Err(Error::shape(
            format!("{} map nodes (reference length)", reference.len()),
            map.len(),
        ));
    }
    check_domains(map.domain(), reference.domain())?;
    let (x1, x2) = map.domain();
    let n = map.signal_len();
    if map.mass() == 0.0 {
        return Density1D::new(vec![0.0; n], (x1, x2));
    }
    let targets = reference_cdf(reference, opts)?;

    let mut xs = Vec::with_capacity(map.len() + 2);
    let mut ys = Vec::with_capacity(map.len() + 2);
    if map.values[0] > x1 {
        xs.push(x1);
        ys.push(0.0);
    }
    xs.extend_from_slice(&map.values);
    ys.extend_from_slice(&targets);
    if map.values[map.len() - 1] < x2 {
        xs.push(x2);
        ys.push(1.0);
    }
    let g = Pchip::new(xs, ys);

    let h = (x2 - x1) / n as f64;
    let at_edges: Vec<f64> = (0..=n).map(|k| g.eval(x1 + k as f64 * h)).collect();
    let mut samples: Vec<f64> = at_edges
        .windows(2)
        .map(|w| ((w[1] - w[0]) / h).max(0.0))
        .collect();
    let total: f64 = samples.iter().sum::<f64>() * h;
    if !(total > 0.0) {
        return Err(Error::ZeroMass);
    }
    let scale = map.mass() / total;
    for s in samples.iter_mut() {
        *s *= scale;
    }
    Density1D::new(samples, (x1, x2))
}

#[cfg(test)]
mod tests {
    use super::*;

    const DOM: (f64, f64) = (-125.0, 125.0);

    fn gaussian(n: usize, mu: f64, sigma: f64) -> Density1D {
        Density1D::from_fn(n, DOM, |x| (-0.5 * ((x - mu) / sigma).powi(2)).exp()).unwrap()
    }

    fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
        let den: f64 = a.iter().map(|x| x * x).sum();
        (num / den).sqrt()
    }

    /// Brute-force oracle: bisection on the piecewise-linear signal CDF, each
    /// CDF evaluation summing whole cells plus the partial one.
    fn oracle_forward(signal: &Density1D, reference: &Density1D, eps: f64) -> Vec<f64> {
        let reg = |d: &Density1D| -> Vec<f64> {
            let max = d.samples().iter().cloned().fold(0.0, f64::max);
            let e = if eps == 0.0 { 0.0 } else { eps * max + 1e-300 };
            let v: Vec<f64> = d.samples().iter().map(|x| x + e).collect();
            let s: f64 = v.iter().sum();
            v.iter().map(|x| x / s).collect()
        };
        let f = reg(signal);
        let r = reg(reference);
        let (x1, x2) = signal.domain();
        let h = signal.dx();
        let cdf = |x: f64| -> f64 {
            let pos = (x - x1) / h;
            let k = (pos.floor() as usize).min(f.len());
            let whole: f64 = f[..k].iter().sum();
            let part = if k < f.len() { f[k] * (pos - k as f64) } else { 0.0 };
            whole + part
        };
        let mut out = Vec::new();
        let mut acc = 0.0;
        for &ri in &r {
            let target = acc + ri / 2.0;
            acc += ri;
            let (mut lo, mut hi) = (x1, x2);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if cdf(mid) < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            out.push(hi);
        }
        out
    }

    #[test]
    fn density_validation() {
        assert!(Density1D::new(vec![1.0], DOM).is_err());
        assert!(Density1D::new(vec![1.0, 2.0], (1.0, 1.0)).is_err());
        assert!(matches!(
            Density1D::new(vec![1.0, -2.0], DOM),
            Err(Error::NegativeValues { .. })
        ));
        let d = gaussian(250, 3.0, 20.0).normalize().unwrap();
        assert!((d.mass() - 1.0).abs() < 1e-12);
        assert!((d.centre(0) - (-124.5)).abs() < 1e-12);
    }

    #[test]
    fn zero_mass_without_regularisation_is_an_error() {
        let z = Density1D::new(vec![0.0; 10], DOM).unwrap();
        let r = Density1D::uniform(10, DOM).unwrap();
        let opts = CdtOptions::new(0.0).unwrap();
        assert!(matches!(cdt_forward_with(&z, &r, opts), Err(Error::ZeroMass)));
        // with regularisation the zero signal maps to the identity
        let m = cdt_forward(&z, &r).unwrap();
        for (a, b) in m.values().iter().zip(r.centres()) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!(CdtOptions::new(-1.0).is_err());
    }

    #[test]
    fn mismatched_domains_are_rejected() {
        let s = gaussian(50, 0.0, 10.0);
        let r = Density1D::uniform(50, (0.0, 1.0)).unwrap();
        assert!(matches!(cdt_forward(&s, &r), Err(Error::DomainMismatch { .. })));
    }

    #[test]
    fn reference_fixed_point_is_identity() {
        for r in [gaussian(250, 10.0, 30.0), Density1D::uniform(250, DOM).unwrap()] {
            let m = cdt_forward(&r, &r).unwrap();
            for (a, b) in m.values().iter().zip(r.centres()) {
                assert!((a - b).abs() < 1e-9, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn forward_matches_bisection_oracle() {
        let s = Density1D::from_fn(180, DOM, |x| {
            (-0.5 * ((x + 30.0) / 9.0).powi(2)).exp() + 0.4 * (-0.5 * ((x - 40.0) / 15.0).powi(2)).exp()
        })
        .unwrap();
        let r = gaussian(120, 0.0, 40.0);
        let m = cdt_forward(&s, &r).unwrap();
        let o = oracle_forward(&s, &r, DEFAULT_EPSILON);
        for (a, b) in m.values().iter().zip(&o) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
        assert_eq!(m.signal_len(), 180);
        assert!((m.mass() - s.mass()).abs() < 1e-12 * s.mass());
    }

    #[test]
    fn shift_adds_to_the_map() {
        let r = gaussian(250, -10.0, 8.0);
        for tau in [7.0, 23.0, -15.0] {
            let s = gaussian(250, -10.0 + tau, 8.0);
            let m = cdt_forward(&s, &r).unwrap();
            for (i, (a, x)) in m.values().iter().zip(r.centres()).enumerate() {
                // interior: where the reference carries mass well above epsilon
                if (x + 10.0).abs() < 30.0 {
                    assert!((a - (x + tau)).abs() < 1e-6 * 250.0, "node {i}: {a} vs {}", x + tau);
                }
            }
        }
    }

    #[test]
    fn identity_map_inverts_to_scaled_reference() {
        let r = Density1D::uniform(64, DOM).unwrap();
        let id = TransportMap1D::identity(&r, 3.5, 64).unwrap();
        let back = cdt_inverse(&id, &r).unwrap();
        let want = 3.5 / 250.0;
        for v in back.samples() {
            assert!((v - want).abs() < 1e-12 * want);
        }

        let g = gaussian(200, 5.0, 30.0);
        let id = TransportMap1D::identity(&g, 2.0, 200).unwrap();
        let back = cdt_inverse(&id, &g).unwrap();
        let want: Vec<f64> = g.normalize().unwrap().samples().iter().map(|v| 2.0 * v).collect();
        assert!(rel_l2(&want, back.samples()) < 1e-3);
    }

    #[test]
    fn non_monotone_map_is_rejected() {
        let r = Density1D::uniform(4, DOM).unwrap();
        assert!(matches!(
            TransportMap1D::new(vec![0.0, 1.0, 1.0, 2.0], 1.0, DOM, 4),
            Err(Error::NonMonotone { index: 2 })
        ));
        let bad = TransportMap1D::from_parts(vec![0.0, 2.0, 1.0, 3.0], 1.0, DOM, 4);
        assert!(matches!(cdt_inverse(&bad, &r), Err(Error::NonMonotone { index: 2 })));
    }

    #[test]
    fn truncated_gaussian_roundtrip() {
        let s = gaussian(250, 0.0, 10.0);
        let r = gaussian(250, 0.0, 30.0);
        let m = cdt_forward(&s, &r).unwrap();
        let back = cdt_inverse(&m, &r).unwrap();
        let e = rel_l2(s.samples(), back.samples());
        assert!(e <= 1e-3, "{e}");
        assert!((back.mass() - s.mass()).abs() <= 1e-9 * s.mass());
    }

    #[test]
    fn two_bump_roundtrip() {
        let s = Density1D::from_fn(250, DOM, |x| {
            (-0.5 * ((x + 20.0) / 10.0).powi(2)).exp() + 0.6 * (-0.5 * ((x - 20.0) / 12.0).powi(2)).exp()
        })
        .unwrap();
        let r = gaussian(250, 0.0, 40.0);
        let back = cdt_inverse(&cdt_forward(&s, &r).unwrap(), &r).unwrap();
        let e = rel_l2(s.samples(), back.samples());
        assert!(e <= 5e-3, "{e}");
    }

    #[test]
    fn positive_density_roundtrip_with_uniform_reference() {
        let s = Density1D::from_fn(250, DOM, |x| 1.0 + (-0.5 * (x / 10.0).powi(2)).exp()).unwrap();
        let r = Density1D::uniform(250, DOM).unwrap();
        let back = cdt_inverse(&cdt_forward(&s, &r).unwrap(), &r).unwrap();
        let e = rel_l2(s.samples(), back.samples());
        assert!(e <= 1e-3, "{e}");
    }

    #[test]
    fn roundtrip_converges_under_refinement() {
        let err = |n: usize| {
            let s = Density1D::from_fn(n, DOM, |x| (-0.5 * (x / 10.0).powi(2)).exp()).unwrap();
            let r = Density1D::uniform(n, DOM).unwrap();
            let back = cdt_inverse(&cdt_forward(&s, &r).unwrap(), &r).unwrap();
            rel_l2(s.samples(), back.samples())
        };
        let (e1, e2, e4) = (err(125), err(250), err(500));
        assert!(e2 <= e1 && e4 <= e2, "{e1} {e2} {e4}");
    }

    #[test]
    fn zero_mass_map_inverts_to_zero() {
        let r = Density1D::uniform(16, DOM).unwrap();
        let id = TransportMap1D::identity(&r, 0.0, 20).unwrap();
        let back = cdt_inverse(&id, &r).unwrap();
        assert_eq!(back.len(), 20);
        assert!(back.samples().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn strictness_repair() {
        let mut v = vec![0.0, 0.0, 0.0, 1.0];
        enforce_strict(&mut v, 1.0);
        assert!(v.windows(2).all(|w| w[1] > w[0]));
        let mut v = vec![0.5, 1.0, 1.0];
        enforce_strict(&mut v, 1.0);
        assert!(v.windows(2).all(|w| w[1] > w[0]) && v[2] <= 1.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn density() -> impl Strategy<Value = Density1D> {
            (
                prop::collection::vec(0.0f64..5.0, 3..6),
                prop::collection::vec(-100.0f64..100.0, 3..6),
                prop::collection::vec(4.0f64..30.0, 3..6),
                64usize..200,
            )
                .prop_map(|(w, mu, sd, n)| {
                    Density1D::from_fn(n, DOM, |x| {
                        w.iter()
                            .zip(&mu)
                            .zip(&sd)
                            .map(|((w, m), s)| w * (-0.5 * ((x - m) / s).powi(2)).exp())
                            .sum()
                    })
                    .unwrap()
                })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn forward_is_strictly_increasing_and_in_domain(s in density(), r in density()) {
                let m = cdt_forward(&s, &r).unwrap();
                prop_assert!(m.values().windows(2).all(|w| w[1] > w[0]));
                prop_assert!(m.values()[0] >= DOM.0 && *m.values().last().unwrap() <= DOM.1);
                prop_assert_eq!(m.len(), r.len());
            }

            #[test]
            fn inverse_preserves_mass(s in density(), r in density()) {
                let back = cdt_inverse(&cdt_forward(&s, &r).unwrap(), &r).unwrap();
                prop_assert!((back.mass() - s.mass()).abs() <= 1e-9 * s.mass());
                prop_assert_eq!(back.len(), s.len());
            }

            #[test]
            fn fixed_point(r in density()) {
                let m = cdt_forward(&r, &r).unwrap();
                for (a, b) in m.values().iter().zip(r.centres()) {
                    prop_assert!((a - b).abs() < 1e-9);
                }
            }
        }
    }
}
