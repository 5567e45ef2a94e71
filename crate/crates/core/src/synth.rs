//! Seeded generators for test fields and snapshot families.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{invert_image, smooth_gaussian, Extent, Field2D, SnapshotSet};

/// Name of the generator recorded in manifests.
pub const RNG_NAME: &str = "chacha8";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CaseKind {
    /// Unit disc of `radius` pixels about the grid centre.
    Circle { radius: f64 },
    /// Ring `radius - width < d <= radius`.
    CircleEdge { radius: f64, width: f64 },
    /// Centred isotropic Gaussian scaled to a maximum of 1.
    Gaussian { sigma: f64 },
    TwinJets(TwinJets),
    TravellingGaussian(TravellingGaussian),
    WaveAnalog(WaveAnalog),
    SignedDipole { param: f64 },
}

/// Two plumes hanging from the top edge, widening and fading with depth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwinJets {
    /// Distance between the two sources in pixels.
    pub separation: f64,
    /// e-folding depth of the plume intensity in pixels.
    pub decay: f64,
    /// Growth of the plume standard deviation per pixel of depth.
    pub spread: f64,
    /// Plume standard deviation at the source in pixels.
    pub source_width: f64,
    /// Inward pull of the plume centrelines: the half-separation shrinks as
    /// `exp(-attraction * depth / separation)`, so close jets merge sooner.
    pub attraction: f64,
    /// Row of the sources; the plumes taper off above it.
    pub source_row: f64,
}

impl TwinJets {
    pub fn new(separation: f64) -> Self {
        TwinJets {
            separation,
            decay: 80.0,
            spread: 0.05,
            source_width: 3.0,
            attraction: 1.0,
            source_row: 12.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TravellingGaussian {
    pub n_steps: usize,
    pub sigma: f64,
    pub mean_range: (f64, f64),
}

impl Default for TravellingGaussian {
    fn default() -> Self {
        TravellingGaussian {
            n_steps: 100,
            sigma: 5.3,
            mean_range: (10.0, 90.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveAnalog {
    /// Snapshots are produced for steps `0..=n_steps`.
    pub n_steps: usize,
    /// Apex advance in cells per step.
    pub speed: f64,
}

impl Default for WaveAnalog {
    fn default() -> Self {
        WaveAnalog {
            n_steps: 200,
            speed: 0.5,
        }
    }
}

/// Physical extent of the wave-analog grid.
pub const WAVE_EXTENT: Extent = Extent {
    x_min: -2.5,
    x_max: 3.5,
    y_min: -0.5,
    y_max: 1.2,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaseSpec {
    pub kind: CaseKind,
    pub rows: usize,
    pub cols: usize,
    /// Apply `1 - x` after generation.
    pub inverted: bool,
    /// Gaussian smoothing width in pixels.
    pub smooth_sigma: Option<f64>,
    pub seed: u64,
}

impl CaseSpec {
    pub fn new(kind: CaseKind, rows: usize, cols: usize) -> Self {
        CaseSpec {
            kind,
            rows,
            cols,
            inverted: false,
            smooth_sigma: None,
            seed: 0,
        }
    }

    /// The default shape for `kind` on its usual grid.
    pub fn default_for(name: &str) -> Result<Self> {
        let spec = match name {
            "circle" => CaseSpec::new(CaseKind::Circle { radius: 50.0 }, 250, 250),
            "circle-edge" => CaseSpec::new(
                CaseKind::CircleEdge {
                    radius: 50.0,
                    width: 3.0,
                },
                250,
                250,
            ),
            "gaussian" => CaseSpec::new(CaseKind::Gaussian { sigma: 20.0 }, 250, 250),
            "twin-jets" => CaseSpec::new(CaseKind::TwinJets(TwinJets::new(8.0)), 128, 128),
            "travelling-gaussian" => {
                CaseSpec::new(CaseKind::TravellingGaussian(TravellingGaussian::default()), 100, 100)
            }
            "wave-analog" => CaseSpec::new(CaseKind::WaveAnalog(WaveAnalog::default()), 75, 250),
            "signed-dipole" => CaseSpec::new(CaseKind::SignedDipole { param: 0.5 }, 100, 160),
            other => return Err(Error::invalid(format!("unknown case `{other}`"))),
        };
        Ok(spec)
    }

    pub fn inverted(mut self, yes: bool) -> Self {
        self.inverted = yes;
        self
    }

    pub fn smoothed(mut self, sigma: Option<f64>) -> Self {
        self.smooth_sigma = sigma;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn is_family(&self) -> bool {
        matches!(
            self.kind,
            CaseKind::TravellingGaussian(_) | CaseKind::WaveAnalog(_)
        )
    }

    fn validate(&self) -> Result<()> {
        if self.rows < 2 || self.cols < 2 {
            return Err(Error::invalid(format!("grid {}x{} too small", self.rows, self.cols)));
        }
        if let Some(s) = self.smooth_sigma {
            if !(s > 0.0) {
                return Err(Error::invalid(format!("smoothing sigma must be positive, got {s}")));
            }
        }
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must be positive, got {v}")))
            }
        };
        match self.kind {
            CaseKind::Circle { radius } => positive("radius", radius),
            CaseKind::CircleEdge { radius, width } => {
                positive("radius", radius)?;
                positive("edge width", width)
            }
            CaseKind::Gaussian { sigma } => positive("sigma", sigma),
            CaseKind::TwinJets(j) => {
                positive("decay", j.decay)?;
                positive("source width", j.source_width)?;
                if !(j.spread >= 0.0) || !(j.attraction >= 0.0) {
                    return Err(Error::invalid("spread and attraction must be >= 0"));
                }
                if !(j.separation >= 0.0) || j.separation >= self.cols as f64 {
                    return Err(Error::invalid(format!(
                        "separation {} outside [0, {})",
                        j.separation, self.cols
                    )));
                }
                Ok(())
            }
            CaseKind::TravellingGaussian(t) => {
                positive("sigma", t.sigma)?;
                if t.n_steps == 0 || !(t.mean_range.0 <= t.mean_range.1) {
                    return Err(Error::invalid("need n_steps >= 1 and an ordered mean range"));
                }
                Ok(())
            }
            CaseKind::WaveAnalog(w) => {
                if !(w.speed >= 0.0) {
                    return Err(Error::invalid("wave speed must be >= 0"));
                }
                Ok(())
            }
            CaseKind::SignedDipole { param } => {
                if param.is_finite() {
                    Ok(())
                } else {
                    Err(Error::invalid("dipole parameter must be finite"))
                }
            }
        }
    }

    fn finish(&self, f: Field2D) -> Result<Field2D> {
        let f = match self.smooth_sigma {
            Some(s) => smooth_gaussian(&f, s)?,
            None => f,
        };
        if self.inverted {
            invert_image(&f.map(|v| v.clamp(0.0, 1.0))?)
        } else {
            Ok(f)
        }
    }
}

fn centre(n: usize) -> f64 {
    (n as f64 - 1.0) / 2.0
}

/// Single field for a non-family spec.
pub fn make_field(spec: &CaseSpec) -> Result<Field2D> {
    spec.validate()?;
    let (rows, cols) = (spec.rows, spec.cols);
    let (cy, cx) = (centre(rows), centre(cols));
    let dist = |r: usize, c: usize| ((r as f64 - cy).powi(2) + (c as f64 - cx).powi(2)).sqrt();
    let f = match spec.kind {
        CaseKind::Circle { radius } => {
            Field2D::from_fn(rows, cols, |r, c| if dist(r, c) <= radius { 1.0 } else { 0.0 })?
        }
        CaseKind::CircleEdge { radius, width } => Field2D::from_fn(rows, cols, |r, c| {
            let d = dist(r, c);
            if d <= radius && d > radius - width {
                1.0
            } else {
                0.0
            }
        })?,
        CaseKind::Gaussian { sigma } => {
            let g = Field2D::from_fn(rows, cols, |r, c| (-0.5 * (dist(r, c) / sigma).powi(2)).exp())?;
            let m = g.max();
            g.map(|v| v / m)?
        }
        CaseKind::TwinJets(j) => twin_jets(&j, rows, cols)?,
        CaseKind::SignedDipole { param } => signed_dipole(param, rows, cols)?,
        CaseKind::TravellingGaussian(_) | CaseKind::WaveAnalog(_) => {
            return Err(Error::invalid("snapshot families are generated with make_snapshots"));
        }
    };
    spec.finish(f)
}

/// Snapshot set for a family spec.
pub fn make_snapshots(spec: &CaseSpec) -> Result<SnapshotSet> {
    spec.validate()?;
    let set = match spec.kind {
        CaseKind::TravellingGaussian(t) => travelling_gaussian(&t, spec.rows, spec.cols, spec.seed)?,
        CaseKind::WaveAnalog(w) => wave_analog(&w, spec.rows, spec.cols)?,
        _ => return Err(Error::invalid("not a snapshot family; use make_field")),
    };
    if spec.smooth_sigma.is_none() && !spec.inverted {
        return Ok(set);
    }
    let fields = set
        .snapshots()
        .iter()
        .map(|f| spec.finish(f.clone()))
        .collect::<Result<Vec<_>>>()?;
    SnapshotSet::new(fields, set.params().to_vec())
}

fn twin_jets(j: &TwinJets, rows: usize, cols: usize) -> Result<Field2D> {
    let cx = centre(cols);
    let f = Field2D::from_fn(rows, cols, |r, c| {
        let depth = (r as f64 - j.source_row).max(0.0);
        let above = (j.source_row - r as f64).max(0.0);
        let half = if j.separation > 0.0 {
            0.5 * j.separation * (-j.attraction * depth / j.separation).exp()
        } else {
            0.0
        };
        let width = j.source_width + j.spread * depth;
        let amp = (-depth / j.decay - 0.5 * (above / j.source_width).powi(2)).exp();
        [cx - half, cx + half]
            .iter()
            .map(|&s| amp * (-0.5 * ((c as f64 - s) / width).powi(2)).exp())
            .sum()
    })?;
    let m = f.max();
    f.map(|v| v / m)
}

/// Unit Gaussians at uniformly drawn centres; parameters are 1-based steps.
pub fn make_travelling_gaussian(spec: &TravellingGaussian, rows: usize, cols: usize, seed: u64) -> Result<SnapshotSet> {
    CaseSpec::new(CaseKind::TravellingGaussian(*spec), rows, cols).validate()?;
    travelling_gaussian(spec, rows, cols, seed)
}

fn travelling_gaussian(t: &TravellingGaussian, rows: usize, cols: usize, seed: u64) -> Result<SnapshotSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = t.mean_range;
    let mut fields = Vec::with_capacity(t.n_steps);
    let mut params = Vec::with_capacity(t.n_steps);
    for k in 0..t.n_steps {
        let mx = if hi > lo { rng.random_range(lo..hi) } else { lo };
        let my = if hi > lo { rng.random_range(lo..hi) } else { lo };
        fields.push(Field2D::from_fn(rows, cols, |r, c| {
            let d2 = (c as f64 - mx).powi(2) + (r as f64 - my).powi(2);
            (-0.5 * d2 / (t.sigma * t.sigma)).exp()
        })?);
        params.push((k + 1) as f64);
    }
    SnapshotSet::with_scalar_params(fields, &params)
}

/// Free surface `y = exp(-(x - x_c)^2 / 2)` travelling right; 1 below it.
pub fn make_wave_analog(spec: &WaveAnalog, rows: usize, cols: usize) -> Result<SnapshotSet> {
    CaseSpec::new(CaseKind::WaveAnalog(*spec), rows, cols).validate()?;
    wave_analog(spec, rows, cols)
}

fn wave_analog(w: &WaveAnalog, rows: usize, cols: usize) -> Result<SnapshotSet> {
    let e = WAVE_EXTENT;
    let dx = (e.x_max - e.x_min) / cols as f64;
    let dy = (e.y_max - e.y_min) / rows as f64;
    let mut fields = Vec::with_capacity(w.n_steps + 1);
    let mut params = Vec::with_capacity(w.n_steps + 1);
    for k in 0..=w.n_steps {
        let xc = k as f64 * w.speed * dx;
        let f = Field2D::from_fn(rows, cols, |r, c| {
            let x = e.x_min + (c as f64 + 0.5) * dx;
            let y = e.y_max - (r as f64 + 0.5) * dy;
            if y < (-0.5 * (x - xc).powi(2)).exp() {
                1.0
            } else {
                0.0
            }
        })?;
        fields.push(f.with_extent(e));
        params.push(k as f64);
    }
    SnapshotSet::with_scalar_params(fields, &params)
}

/// Lobe separation of the signed dipole in pixels.
pub fn dipole_separation(param: f64) -> f64 {
    30.0 + 30.0 * param
}

/// Lobe amplitude of the signed dipole.
pub fn dipole_amplitude(param: f64) -> f64 {
    1.0 / (1.0 + 0.25 * param * param)
}

/// Positive lobe left of centre, negative lobe right, equal amplitudes.
pub fn make_signed_dipole(param: f64, rows: usize, cols: usize) -> Result<Field2D> {
    make_field(&CaseSpec::new(CaseKind::SignedDipole { param }, rows, cols))
}

fn signed_dipole(param: f64, rows: usize, cols: usize) -> Result<Field2D> {
    let (cy, cx) = (centre(rows), centre(cols));
    let half = dipole_separation(param) / 2.0;
    let amp = dipole_amplitude(param);
    let sigma = 8.0;
    Field2D::from_fn(rows, cols, |r, c| {
        let y = r as f64 - cy;
        let lobe = |x0: f64| (-0.5 * ((c as f64 - x0).powi(2) + y * y) / (sigma * sigma)).exp();
        amp * (lobe(cx - half) - lobe(cx + half))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{connected_components, threshold};

    #[test]
    fn circle_area() {
        let f = make_field(&CaseSpec::default_for("circle").unwrap()).unwrap();
        let area = std::f64::consts::PI * 2500.0;
        assert!((f.sum() - area).abs() < 0.01 * area);
        assert!(f.values().iter().all(|&v| v == 0.0 || v == 1.0));
    }

    #[test]
    fn ring_lies_inside_circle_band() {
        let ring = make_field(&CaseSpec::default_for("circle-edge").unwrap()).unwrap();
        let inner = make_field(&CaseSpec::new(CaseKind::Circle { radius: 47.0 }, 250, 250)).unwrap();
        let outer = make_field(&CaseSpec::default_for("circle").unwrap()).unwrap();
        for ((r, i), o) in ring.values().iter().zip(inner.values()).zip(outer.values()) {
            assert_eq!(*r, o - i);
        }
    }

    #[test]
    fn gaussian_and_inverse_extremes() {
        let spec = CaseSpec::default_for("gaussian").unwrap();
        let g = make_field(&spec).unwrap();
        assert_eq!(g.max(), 1.0);
        assert_eq!(g.get(124, 124), 1.0);
        let inv = make_field(&spec.inverted(true)).unwrap();
        assert_eq!(inv.min(), 0.0);
        assert_eq!(inv.get(124, 124), 0.0);
    }

    #[test]
    fn smoothing_keeps_unit_range() {
        let spec = CaseSpec::default_for("circle").unwrap().smoothed(Some(2.0));
        let f = make_field(&spec).unwrap();
        assert!(f.min() >= 0.0 && f.max() <= 1.0 + 1e-12);
        assert!(f.values().iter().any(|&v| v > 0.0 && v < 1.0));
        assert!(make_field(&spec.smoothed(Some(0.0))).is_err());
    }

    #[test]
    fn travelling_gaussian_is_reproducible() {
        let spec = CaseSpec::default_for("travelling-gaussian").unwrap().with_seed(42);
        let a = make_snapshots(&spec).unwrap();
        let b = make_snapshots(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 100);
        assert_eq!(a.params()[0], vec![1.0]);
        let c = make_snapshots(&spec.with_seed(43)).unwrap();
        assert_ne!(a, c);
        for f in a.snapshots() {
            assert!(f.max() > 0.98 && f.max() <= 1.0);
        }
    }

    #[test]
    fn travelling_gaussian_mass_is_constant_away_from_edges() {
        let t = TravellingGaussian {
            mean_range: (35.0, 65.0),
            ..Default::default()
        };
        let set = make_travelling_gaussian(&t, 100, 100, 5).unwrap();
        let oracle = 2.0 * std::f64::consts::PI * t.sigma * t.sigma;
        for f in set.snapshots() {
            assert!((f.sum() - oracle).abs() < 1e-3 * oracle);
        }
    }

    #[test]
    fn wave_analog_profile() {
        let set = make_snapshots(&CaseSpec::default_for("wave-analog").unwrap()).unwrap();
        assert_eq!(set.len(), 201);
        assert_eq!(set.shape(), (75, 250));
        for f in set.snapshots() {
            assert!(f.values().iter().all(|&v| v == 0.0 || v == 1.0));
        }
        // step 0 is the initial bump centred at x = 0
        let f0 = &set.snapshots()[0];
        let (dx, dy) = (6.0 / 250.0, 1.7 / 75.0);
        for r in 0..75 {
            for c in 0..250 {
                let x = -2.5 + (c as f64 + 0.5) * dx;
                let y = 1.2 - (r as f64 + 0.5) * dy;
                let want = if y < (-0.5 * x * x).exp() { 1.0 } else { 0.0 };
                assert_eq!(f0.get(r, c), want);
            }
        }
        // apex: the column with the tallest liquid column
        let apex = |f: &Field2D| -> f64 {
            let heights: Vec<f64> = (0..250).map(|c| (0..75).map(|r| f.get(r, c)).sum()).collect();
            let top = heights.iter().cloned().fold(0.0, f64::max);
            let cols: Vec<usize> = (0..250).filter(|&c| heights[c] == top).collect();
            (cols[0] + cols[cols.len() - 1]) as f64 / 2.0
        };
        let moved = apex(&set.snapshots()[100]) - apex(f0);
        assert!((moved - 50.0).abs() <= 1.0, "{moved}");
    }

    #[test]
    fn twin_jet_geometry() {
        let make = |sep: f64| make_field(&CaseSpec::new(CaseKind::TwinJets(TwinJets::new(sep)), 128, 128)).unwrap();
        let single = make(0.0);
        for r in 0..128 {
            for c in 0..64 {
                assert!((single.get(r, c) - single.get(r, 127 - c)).abs() < 1e-12);
            }
        }
        assert_eq!(connected_components(&threshold(&make(8.0), 0.3)), 1);
        assert_eq!(connected_components(&threshold(&make(80.0), 0.3)), 2);
        // the top rows stay dark above the sources
        assert!(single.values()[..128].iter().all(|&v| v < 1e-3));
        assert!(make_field(&CaseSpec::new(CaseKind::TwinJets(TwinJets::new(200.0)), 128, 128)).is_err());
    }

    #[test]
    fn dipole_properties() {
        let f = make_signed_dipole(0.5, 100, 160).unwrap();
        assert!(f.sum().abs() < 1e-9 * f.values().iter().map(|v| v.abs()).sum::<f64>());
        assert!(f.min() >= -1.0 && f.max() <= 1.0);
        let g = make_signed_dipole(-0.0, 100, 160).unwrap();
        assert_eq!(g.shape(), (100, 160));
        let argmax = |f: &Field2D| {
            let mut best = (0, 0);
            for r in 0..100 {
                for c in 0..160 {
                    if f.get(r, c) > f.get(best.0, best.1) {
                        best = (r, c);
                    }
                }
            }
            best
        };
        let argmin = |f: &Field2D| argmax(&f.scaled(-1.0).unwrap());
        let mut prev = 0usize;
        for p in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let f = make_signed_dipole(p, 100, 160).unwrap();
            let d = argmin(&f).1 - argmax(&f).1;
            assert!(d > prev, "param {p}");
            prev = d;
        }
    }

    #[test]
    fn families_and_fields_are_not_mixed_up() {
        assert!(make_field(&CaseSpec::default_for("wave-analog").unwrap()).is_err());
        assert!(make_snapshots(&CaseSpec::default_for("circle").unwrap()).is_err());
        assert!(CaseSpec::default_for("nope").is_err());
    }
}
