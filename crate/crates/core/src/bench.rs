//! Named studies: each wires the generators, transforms and ROM together and
//! writes a self-contained report directory.
//!
//! Every study is split into a pure `compute` step returning its numbers and
//! the fields worth looking at, and [`run_study`], which also writes the CSVs,
//! PGM triplets and the config echo.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{component_sizes, relative_error, threshold, Field2D, NormKind, SnapshotSet};
use crate::io;
use crate::pod::{singular_value_report, write_singular_value_csv, SingularValueRow};
use crate::radon::default_angle_count;
use crate::rcdt::{roundtrip, RoundtripOptions};
use crate::rom::{self, interpolate_pair, projection_study, space_singular_values, Regressor, RomConfig, SpaceKind};
use crate::synth::{make_field, make_signed_dipole, make_snapshots, CaseKind, CaseSpec, TravellingGaussian, TwinJets, WaveAnalog};

/// Runs `f`, tagging any error with the stage name.
fn stage<T>(name: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    f().map_err(|e| Error::Study {
        stage: name.to_string(),
        source: Box::new(e),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "study", rename_all = "snake_case")]
pub enum StudySpec {
    Table1Suite(Table1Config),
    TravellingGaussianStudy(TravellingGaussianConfig),
    TwinJetInterp(TwinJetConfig),
    WaveAnalogTimeInterp(WaveConfig),
    SignedDipoleParamInterp(DipoleConfig),
}

impl StudySpec {
    pub const NAMES: [&'static str; 5] = ["table1", "travelling-gaussian", "twin-jets", "wave-analog", "signed-dipole"];

    /// Default configuration of the study called `name`.
    pub fn by_name(name: &str) -> Result<Self> {
        Ok(match name {
            "table1" => StudySpec::Table1Suite(Table1Config::default()),
            "travelling-gaussian" => StudySpec::TravellingGaussianStudy(TravellingGaussianConfig::default()),
            "twin-jets" => StudySpec::TwinJetInterp(TwinJetConfig::default()),
            "wave-analog" => StudySpec::WaveAnalogTimeInterp(WaveConfig::default()),
            "signed-dipole" => StudySpec::SignedDipoleParamInterp(DipoleConfig::default()),
            other => {
                return Err(Error::invalid(format!(
                    "unknown study `{other}` (expected one of {})",
                    Self::NAMES.join(", ")
                )))
            }
        })
    }

    /// Only the travelling-Gaussian study is random; the others ignore the seed.
    pub fn with_seed(mut self, seed: u64) -> Self {
        if let StudySpec::TravellingGaussianStudy(c) = &mut self {
            c.seed = seed;
        }
        self
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            StudySpec::TravellingGaussianStudy(c) => Some(c.seed),
            _ => None,
        }
    }
}

// ---------------------------------------------------------------------------
// Table 1: intrinsic roundtrip error of the ten test images

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Table1Config {
    pub size: usize,
    pub radius: f64,
    pub edge_width: f64,
    pub gaussian_sigma: f64,
    /// Smoothing width of the smoothed variants, in pixels.
    pub smooth_sigma: f64,
    pub n_angles: Option<usize>,
}

impl Default for Table1Config {
    fn default() -> Self {
        Table1Config {
            size: 250,
            radius: 50.0,
            edge_width: 3.0,
            gaussian_sigma: 20.0,
            smooth_sigma: 2.0,
            n_angles: None,
        }
    }
}

impl Table1Config {
    /// The ten labelled cases, in table order.
    pub fn cases(&self) -> Vec<(String, CaseSpec)> {
        let n = self.size;
        let circle = CaseKind::Circle { radius: self.radius };
        let edge = CaseKind::CircleEdge {
            radius: self.radius,
            width: self.edge_width,
        };
        let gauss = CaseKind::Gaussian {
            sigma: self.gaussian_sigma,
        };
        let mut out = Vec::new();
        for (name, kind) in [("circle", circle), ("circle_edge", edge)] {
            for smooth in [false, true] {
                for inv in [false, true] {
                    let mut label = name.to_string();
                    if smooth {
                        label.push_str("_smoothed");
                    }
                    if inv {
                        label.push_str("_inverse");
                    }
                    let spec = CaseSpec::new(kind, n, n)
                        .smoothed(smooth.then_some(self.smooth_sigma))
                        .inverted(inv);
                    out.push((label, spec));
                }
            }
        }
        out.push(("gaussian".into(), CaseSpec::new(gauss, n, n)));
        out.push(("gaussian_inverse".into(), CaseSpec::new(gauss, n, n).inverted(true)));
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table1Case {
    pub label: String,
    pub l2_error: f64,
    pub input: Field2D,
    pub output: Field2D,
}

pub fn table1(cfg: &Table1Config) -> Result<Vec<Table1Case>> {
    cfg.cases()
        .into_par_iter()
        .map(|(label, spec)| {
            stage(&format!("table1/{label}"), || {
                let f = make_field(&spec)?;
                let n_angles = cfg.n_angles.unwrap_or_else(|| default_angle_count(f.rows(), f.cols()));
                let reference = crate::rcdt::default_reference(f.rows(), f.cols())?;
                let rt = roundtrip(&f, n_angles, &reference, RoundtripOptions::default())?;
                Ok(Table1Case {
                    label,
                    l2_error: rt.report.mean,
                    input: rt.input,
                    output: rt.reconstruction,
                })
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Travelling Gaussian: mode decay and projection error

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TravellingGaussianConfig {
    pub family: TravellingGaussian,
    pub rows: usize,
    pub cols: usize,
    pub seed: u64,
    pub r: usize,
    /// Snapshot shown in the PGM triplets.
    pub headline: usize,
}

impl Default for TravellingGaussianConfig {
    fn default() -> Self {
        TravellingGaussianConfig {
            family: TravellingGaussian::default(),
            rows: 100,
            cols: 100,
            seed: 1,
            r: 5,
            headline: 49,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpaceProjection {
    pub space: &'static str,
    pub mean_error: f64,
    pub aggregate_error: f64,
    /// `sigma_r / sigma_1` of the uncentred snapshot matrix.
    pub sigma_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TravellingGaussianReport {
    pub spaces: Vec<SpaceProjection>,
    pub singular_values: Vec<SingularValueRow>,
    pub headline_truth: Field2D,
    /// Rank-r projections of the headline snapshot, physical then RCDT.
    pub headline_projections: Vec<(&'static str, Field2D)>,
}

impl TravellingGaussianReport {
    pub fn space(&self, label: &str) -> Option<&SpaceProjection> {
        self.spaces.iter().find(|s| s.space == label)
    }
}

pub fn travelling_gaussian(cfg: &TravellingGaussianConfig) -> Result<TravellingGaussianReport> {
    let set = stage("travelling_gaussian/generate", || {
        make_snapshots(&CaseSpec::new(CaseKind::TravellingGaussian(cfg.family), cfg.rows, cfg.cols).with_seed(cfg.seed))
    })?;
    if cfg.headline >= set.len() || cfg.r < 1 || cfg.r > set.len() {
        return Err(Error::invalid(format!(
            "headline {} and rank {} must fit {} snapshots",
            cfg.headline,
            cfg.r,
            set.len()
        )));
    }
    let spaces = [SpaceKind::Physical, SpaceKind::Fourier, SpaceKind::rcdt()];
    let mut spectra = Vec::new();
    let mut rows = Vec::new();
    for space in &spaces {
        let label = space.label();
        let sv = stage(&format!("travelling_gaussian/singular_values/{label}"), || {
            Ok(space_singular_values(&set, space)?.remove(0))
        })?;
        let proj = stage(&format!("travelling_gaussian/projection/{label}"), || {
            Ok(projection_study(&set, space, &[cfg.r])?.remove(0))
        })?;
        rows.push(SpaceProjection {
            space: label,
            mean_error: proj.report.mean,
            aggregate_error: proj.aggregate,
            sigma_ratio: sv.get(cfg.r - 1).copied().unwrap_or(0.0) / sv[0],
        });
        spectra.push((label, sv));
    }
    let named: Vec<(&str, &[f64])> = spectra.iter().map(|(l, v)| (*l, v.as_slice())).collect();
    let singular_values = singular_value_report(&named)?;

    let mut headline_projections = Vec::new();
    for space in [SpaceKind::Physical, SpaceKind::rcdt()] {
        let f = stage(&format!("travelling_gaussian/headline/{}", space.label()), || {
            rom::build(&set, &RomConfig::new(space, cfg.r, Regressor::Linear))?.reconstruct_training(cfg.headline)
        })?;
        headline_projections.push((space.label(), f));
    }
    Ok(TravellingGaussianReport {
        spaces: rows,
        singular_values,
        headline_truth: set.snapshots()[cfg.headline].clone(),
        headline_projections,
    })
}

// ---------------------------------------------------------------------------
// Twin jets: midpoint interpolation between a merged and a split pair

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwinJetConfig {
    pub jets: TwinJets,
    pub rows: usize,
    pub cols: usize,
    pub separation_a: f64,
    pub separation_b: f64,
    /// Threshold as a fraction of each field's maximum.
    pub level: f64,
    /// Regions smaller than this fraction of the total above-threshold area
    /// are reconstruction specks and are not counted as plumes.
    pub min_area_fraction: f64,
}

impl Default for TwinJetConfig {
    fn default() -> Self {
        TwinJetConfig {
            jets: TwinJets::new(8.0),
            rows: 128,
            cols: 128,
            separation_a: 8.0,
            separation_b: 80.0,
            level: 0.5,
            min_area_fraction: 0.01,
        }
    }
}

/// Thresholded region statistics of one field.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Regions {
    pub field: String,
    /// All 4-connected regions above `level * max`.
    pub components: usize,
    /// Regions of at least `min_area_fraction` of the total area.
    pub plumes: usize,
    pub largest_area: usize,
    pub total_area: usize,
}

pub fn regions(label: &str, field: &Field2D, level: f64, min_area_fraction: f64) -> Regions {
    let sizes = component_sizes(&threshold(field, level * field.max()));
    let total: usize = sizes.iter().sum();
    let cut = min_area_fraction * total as f64;
    Regions {
        field: label.to_string(),
        components: sizes.len(),
        plumes: sizes.iter().filter(|&&s| s as f64 >= cut).count(),
        largest_area: sizes.first().copied().unwrap_or(0),
        total_area: total,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwinJetReport {
    pub endpoint_a: Field2D,
    pub endpoint_b: Field2D,
    /// Generator evaluated at the mean separation.
    pub truth: Field2D,
    pub physical: Field2D,
    pub rcdt: Field2D,
    /// Region statistics for a, b, truth, physical and rcdt, in that order.
    pub regions: Vec<Regions>,
    pub physical_error: f64,
    pub rcdt_error: f64,
}

impl TwinJetReport {
    pub fn regions_of(&self, label: &str) -> Option<&Regions> {
        self.regions.iter().find(|r| r.field == label)
    }
}

pub fn twin_jets(cfg: &TwinJetConfig) -> Result<TwinJetReport> {
    let make = |sep: f64| {
        let mut jets = cfg.jets;
        jets.separation = sep;
        make_field(&CaseSpec::new(CaseKind::TwinJets(jets), cfg.rows, cfg.cols))
    };
    let (a, b, truth) = stage("twin_jets/generate", || {
        Ok((make(cfg.separation_a)?, make(cfg.separation_b)?, make(0.5 * (cfg.separation_a + cfg.separation_b))?))
    })?;
    let physical = stage("twin_jets/physical", || interpolate_pair(&a, &b, 0.5, &SpaceKind::Physical))?;
    let rcdt = stage("twin_jets/rcdt", || interpolate_pair(&a, &b, 0.5, &SpaceKind::rcdt()))?;
    let regions = [("a", &a), ("b", &b), ("truth", &truth), ("physical", &physical), ("rcdt", &rcdt)]
        .iter()
        .map(|(l, f)| regions(l, f, cfg.level, cfg.min_area_fraction))
        .collect();
    Ok(TwinJetReport {
        physical_error: relative_error(&truth, &physical, NormKind::L2)?,
        rcdt_error: relative_error(&truth, &rcdt, NormKind::L2)?,
        endpoint_a: a,
        endpoint_b: b,
        truth,
        physical,
        rcdt,
        regions,
    })
}

// ---------------------------------------------------------------------------
// Wave analog: time interpolation from sparse snapshots

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveConfig {
    pub wave: WaveAnalog,
    pub rows: usize,
    pub cols: usize,
    pub train: Vec<usize>,
    pub target: usize,
    pub r: usize,
    pub regressor: Regressor,
    pub threshold: f64,
}

impl Default for WaveConfig {
    fn default() -> Self {
        WaveConfig {
            wave: WaveAnalog::default(),
            rows: 75,
            cols: 250,
            train: vec![1, 50, 100, 150, 200],
            target: 75,
            r: 5,
            regressor: Regressor::Linear,
            threshold: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveSpaceResult {
    pub space: &'static str,
    /// `sum |truth - thresholded prediction| / sum truth`.
    pub l1_error: f64,
    pub repair_magnitude: f64,
    pub prediction: Field2D,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveReport {
    pub truth: Field2D,
    pub spaces: Vec<WaveSpaceResult>,
}

impl WaveReport {
    pub fn l1(&self, label: &str) -> Option<f64> {
        self.spaces.iter().find(|s| s.space == label).map(|s| s.l1_error)
    }
}

pub fn wave_analog(cfg: &WaveConfig) -> Result<WaveReport> {
    let set = stage("wave_analog/generate", || {
        make_snapshots(&CaseSpec::new(CaseKind::WaveAnalog(cfg.wave), cfg.rows, cfg.cols))
    })?;
    if cfg.target >= set.len() {
        return Err(Error::invalid(format!("target {} outside 0..{}", cfg.target, set.len())));
    }
    let train = stage("wave_analog/select", || set.select(&cfg.train))?;
    let truth = set.snapshots()[cfg.target].clone();
    let param = set.params()[cfg.target].clone();
    let mut spaces = Vec::new();
    for space in [SpaceKind::Physical, SpaceKind::Fourier, SpaceKind::rcdt()] {
        let label = space.label();
        let p = stage(&format!("wave_analog/predict/{label}"), || {
            rom::build(&train, &RomConfig::new(space, cfg.r, cfg.regressor))?.predict(&param)
        })?;
        let binary = threshold(&p.field, cfg.threshold);
        spaces.push(WaveSpaceResult {
            space: label,
            l1_error: relative_error(&truth, &binary, NormKind::L1)?,
            repair_magnitude: p.repair_magnitude,
            prediction: binary,
        });
    }
    Ok(WaveReport { truth, spaces })
}

// ---------------------------------------------------------------------------
// Signed dipole: parameter interpolation of a field with both signs

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DipoleConfig {
    pub rows: usize,
    pub cols: usize,
    pub param_a: f64,
    pub param_b: f64,
    /// Requested rank, clamped to the number of training snapshots.
    pub r: usize,
}

impl Default for DipoleConfig {
    fn default() -> Self {
        DipoleConfig {
            rows: 100,
            cols: 160,
            param_a: 0.0,
            param_b: 1.0,
            r: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DipoleReport {
    pub r_used: usize,
    pub truth: Field2D,
    pub physical: Field2D,
    pub rcdt_signed: Field2D,
    pub physical_error: f64,
    pub rcdt_signed_error: f64,
}

pub fn signed_dipole(cfg: &DipoleConfig) -> Result<DipoleReport> {
    let mid = 0.5 * (cfg.param_a + cfg.param_b);
    let (train, truth) = stage("signed_dipole/generate", || {
        let fields = vec![
            make_signed_dipole(cfg.param_a, cfg.rows, cfg.cols)?,
            make_signed_dipole(cfg.param_b, cfg.rows, cfg.cols)?,
        ];
        Ok((
            SnapshotSet::with_scalar_params(fields, &[cfg.param_a, cfg.param_b])?,
            make_signed_dipole(mid, cfg.rows, cfg.cols)?,
        ))
    })?;
    let r_used = cfg.r.clamp(1, train.len());
    if r_used != cfg.r {
        log::info!("dipole rank {} clamped to {r_used} training snapshots", cfg.r);
    }
    let predict = |space: SpaceKind| {
        stage(&format!("signed_dipole/predict/{}", space.label()), || {
            Ok(rom::build(&train, &RomConfig::new(space, r_used, Regressor::Linear))?.predict(&[mid])?.field)
        })
    };
    let physical = predict(SpaceKind::Physical)?;
    let rcdt_signed = predict(SpaceKind::rcdt_signed())?;
    Ok(DipoleReport {
        r_used,
        physical_error: relative_error(&truth, &physical, NormKind::L2)?,
        rcdt_signed_error: relative_error(&truth, &rcdt_signed, NormKind::L2)?,
        truth,
        physical,
        rcdt_signed,
    })
}

// ---------------------------------------------------------------------------
// Expectations and report writing

/// Checked-in bands and orderings the studies are compared against.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct Expectations {
    pub table1: Table1Expectations,
    pub travelling_gaussian: TravellingGaussianExpectations,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct Table1Expectations {
    /// Allowed multiplicative deviation from the reference values.
    pub band_factor: f64,
    pub reference: std::collections::BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct TravellingGaussianExpectations {
    /// RCDT mean projection error must stay below this multiple of the physical one.
    pub max_error_ratio: f64,
}

impl Expectations {
    pub fn load() -> Result<Self> {
        toml::from_str(include_str!("../expectations.toml"))
            .map_err(|e| Error::invalid(format!("expectations.toml: {e}")))
    }
}

/// One named pass/fail line of a study report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub check: String,
    pub pass: bool,
    pub detail: String,
}

fn check(name: &str, pass: bool, detail: String) -> Check {
    Check {
        check: name.to_string(),
        pass,
        detail,
    }
}

pub fn table1_checks(cases: &[Table1Case], exp: &Table1Expectations) -> Vec<Check> {
    let err = |l: &str| cases.iter().find(|c| c.label == l).map(|c| c.l2_error).unwrap_or(f64::NAN);
    let mut out: Vec<Check> = exp
        .reference
        .iter()
        .map(|(label, &want)| {
            let got = err(label);
            let pass = got >= want / exp.band_factor && got <= want * exp.band_factor;
            check(&format!("band_{label}"), pass, format!("{got:.4e} vs {want:.4e} x/ {}", exp.band_factor))
        })
        .collect();
    for chain in [
        &["gaussian", "circle_smoothed", "circle", "circle_edge"][..],
        &["circle_smoothed", "circle"],
        &["circle_edge_smoothed", "circle_edge"],
    ] {
        let values: Vec<f64> = chain.iter().map(|l| err(l)).collect();
        let pass = values.windows(2).all(|w| w[0] < w[1]);
        let detail: Vec<String> = values.iter().map(|v| format!("{v:.4e}")).collect();
        out.push(check(&format!("order_{}", chain.join("<")), pass, detail.join(" ")));
    }
    out
}

pub fn travelling_gaussian_checks(rep: &TravellingGaussianReport, exp: &TravellingGaussianExpectations) -> Vec<Check> {
    let (Some(p), Some(c)) = (rep.space("physical"), rep.space("rcdt")) else {
        return vec![check("spaces_present", false, String::new())];
    };
    vec![
        check(
            "sigma_ratio_rcdt<physical",
            c.sigma_ratio < p.sigma_ratio,
            format!("{:.4e} vs {:.4e}", c.sigma_ratio, p.sigma_ratio),
        ),
        check(
            "projection_error_ratio",
            c.mean_error < exp.max_error_ratio * p.mean_error,
            format!("{:.4e} vs {} x {:.4e}", c.mean_error, exp.max_error_ratio, p.mean_error),
        ),
    ]
}

pub fn twin_jet_checks(rep: &TwinJetReport) -> Vec<Check> {
    let plumes = |l: &str| rep.regions_of(l).map(|r| r.plumes).unwrap_or(0);
    vec![
        check("rcdt_single_plume", plumes("rcdt") == 1, format!("{} plumes", plumes("rcdt"))),
        check("physical_ghosting", plumes("physical") >= 2, format!("{} plumes", plumes("physical"))),
    ]
}

pub fn wave_checks(rep: &WaveReport) -> Vec<Check> {
    let (p, f, c) = (
        rep.l1("physical").unwrap_or(f64::NAN),
        rep.l1("fourier").unwrap_or(f64::NAN),
        rep.l1("rcdt").unwrap_or(f64::NAN),
    );
    vec![check("rcdt_l1<physical,fourier", c < p.min(f), format!("{c:.4e} vs {p:.4e}, {f:.4e}"))]
}

pub fn dipole_checks(rep: &DipoleReport) -> Vec<Check> {
    vec![check(
        "rcdt_signed<physical",
        rep.rcdt_signed_error < rep.physical_error,
        format!("{:.4e} vs {:.4e}", rep.rcdt_signed_error, rep.physical_error),
    )]
}

/// Input, output and signed difference images; input and output share the
/// input's range.
fn write_triplet(dir: &Path, name: &str, input: &Field2D, output: &Field2D) -> Result<()> {
    let range = Some((input.min().min(output.min()), input.max().max(output.max())));
    io::export_pgm(input, &dir.join(format!("{name}_input.pgm")), range)?;
    io::export_pgm(output, &dir.join(format!("{name}_output.pgm")), range)?;
    io::export_pgm_signed(&output.difference(input)?, &dir.join(format!("{name}_difference.pgm")))
}

#[derive(Serialize)]
struct ErrorRow<'a> {
    case: &'a str,
    error: f64,
}

/// Runs `spec`, writes its report into `out` and returns the checks.
pub fn run_study(spec: &StudySpec, out: &Path) -> Result<Vec<Check>> {
    let config = serde_json::to_value(spec)?;
    let mut record = io::RunRecord::new("bench", config);
    if let Some(seed) = spec.seed() {
        record = record.with_seed(seed);
    }
    let started = std::time::Instant::now();
    let checks = stage("report", || std::fs::create_dir_all(out).map_err(|e| Error::io(out, e)))
        .and_then(|_| write_study(spec, out))?;
    log::info!("study finished in {:.2?}", started.elapsed());
    stage("report", || {
        io::write_csv(&checks, &["check", "pass", "detail"], &out.join("checks.csv"))?;
        record.write(out)
    })?;
    Ok(checks)
}

fn write_study(spec: &StudySpec, out: &Path) -> Result<Vec<Check>> {
    let exp = Expectations::load()?;
    match spec {
        StudySpec::Table1Suite(cfg) => {
            let cases = table1(cfg)?;
            stage("report", || {
                let rows: Vec<ErrorRow> = cases.iter().map(|c| ErrorRow { case: &c.label, error: c.l2_error }).collect();
                io::write_csv(&rows, &["case", "l2_error"], &out.join("table1.csv"))?;
                for c in &cases {
                    write_triplet(out, &c.label, &c.input, &c.output)?;
                }
                Ok(())
            })?;
            Ok(table1_checks(&cases, &exp.table1))
        }
        StudySpec::TravellingGaussianStudy(cfg) => {
            let rep = travelling_gaussian(cfg)?;
            stage("report", || {
                let mut buf = Vec::new();
                write_singular_value_csv(&rep.singular_values, &mut buf)?;
                io::write_atomic(&out.join("singular_values.csv"), &buf)?;
                let rows: Vec<_> = rep
                    .spaces
                    .iter()
                    .map(|s| (s.space, cfg.r, s.mean_error, s.aggregate_error, s.sigma_ratio))
                    .collect();
                io::write_csv(
                    &rows,
                    &["space", "r", "mean_error", "aggregate_error", "sigma_ratio"],
                    &out.join("projection.csv"),
                )?;
                for (label, f) in &rep.headline_projections {
                    write_triplet(out, &format!("projection_{label}"), &rep.headline_truth, f)?;
                }
                Ok(())
            })?;
            Ok(travelling_gaussian_checks(&rep, &exp.travelling_gaussian))
        }
        StudySpec::TwinJetInterp(cfg) => {
            let rep = twin_jets(cfg)?;
            stage("report", || {
                io::write_csv(
                    &rep.regions,
                    &["field", "components", "plumes", "largest_area", "total_area"],
                    &out.join("components.csv"),
                )?;
                let rows = [
                    ErrorRow { case: "physical", error: rep.physical_error },
                    ErrorRow { case: "rcdt", error: rep.rcdt_error },
                ];
                io::write_csv(&rows, &["case", "l2_error"], &out.join("midpoint_errors.csv"))?;
                write_triplet(out, "midpoint_physical", &rep.truth, &rep.physical)?;
                write_triplet(out, "midpoint_rcdt", &rep.truth, &rep.rcdt)?;
                io::export_pgm(&rep.endpoint_a, &out.join("endpoint_a.pgm"), None)?;
                io::export_pgm(&rep.endpoint_b, &out.join("endpoint_b.pgm"), None)
            })?;
            Ok(twin_jet_checks(&rep))
        }
        StudySpec::WaveAnalogTimeInterp(cfg) => {
            let rep = wave_analog(cfg)?;
            stage("report", || {
                let rows: Vec<_> = rep.spaces.iter().map(|s| (s.space, s.l1_error, s.repair_magnitude)).collect();
                io::write_csv(&rows, &["space", "l1_error", "repair_magnitude"], &out.join("wave_errors.csv"))?;
                for s in &rep.spaces {
                    write_triplet(out, &format!("target_{}", s.space), &rep.truth, &s.prediction)?;
                }
                Ok(())
            })?;
            Ok(wave_checks(&rep))
        }
        StudySpec::SignedDipoleParamInterp(cfg) => {
            let rep = signed_dipole(cfg)?;
            stage("report", || {
                let rows = [
                    ErrorRow { case: "physical", error: rep.physical_error },
                    ErrorRow { case: "rcdt_signed", error: rep.rcdt_signed_error },
                ];
                io::write_csv(&rows, &["case", "l2_error"], &out.join("dipole_errors.csv"))?;
                write_triplet(out, "midpoint_physical", &rep.truth, &rep.physical)?;
                write_triplet(out, "midpoint_rcdt_signed", &rep.truth, &rep.rcdt_signed)
            })?;
            Ok(dipole_checks(&rep))
        }
    }
}
