//! End-to-end paths through files: generate, write, reload, model.

use proptest::prelude::*;

use rcdt_rom::bench::{self, DipoleConfig, Expectations, StudySpec};
use rcdt_rom::grid::{relative_error, Extent, Field2D, NormKind};
use rcdt_rom::io::{self, parse_field, regrid_scattered, write_snapshot_set, Manifest};
use rcdt_rom::rom::{self, Regressor, RomConfig, SpaceKind};
use rcdt_rom::synth::{make_snapshots, CaseKind, CaseSpec, WaveAnalog};
use rcdt_rom::Error;

fn small_wave() -> CaseSpec {
    CaseSpec::new(
        CaseKind::WaveAnalog(WaveAnalog {
            n_steps: 20,
            speed: 5.0,
        }),
        24,
        64,
    )
}

#[test]
fn reloaded_family_builds_the_same_model() {
    let dir = tempfile::tempdir().unwrap();
    let set = make_snapshots(&small_wave()).unwrap();
    write_snapshot_set(&set, dir.path()).unwrap();
    let back = Manifest::read(&dir.path().join("manifest.csv")).unwrap().load_training().unwrap();
    assert_eq!(back, set);

    let train = back.select(&[0, 5, 10, 15, 20]).unwrap();
    for space in [SpaceKind::Physical, SpaceKind::Fourier, SpaceKind::rcdt()] {
        let cfg = RomConfig::new(space, 5, Regressor::Linear);
        let a = rom::build(&train, &cfg).unwrap().predict(&[7.0]).unwrap();
        let b = rom::build(&set.select(&[0, 5, 10, 15, 20]).unwrap(), &cfg).unwrap().predict(&[7.0]).unwrap();
        assert_eq!(a, b, "{}", space.label());
    }
}

#[test]
fn training_at_a_node_reproduces_its_projection() {
    let set = make_snapshots(&small_wave()).unwrap().select(&[0, 4, 8, 12, 16, 20]).unwrap();
    for regressor in [Regressor::Linear, Regressor::Rbf] {
        let model = rom::build(&set, &RomConfig::new(SpaceKind::rcdt(), 4, regressor)).unwrap();
        let p = model.predict(&set.params()[2]).unwrap();
        let want = model.reconstruct_training(2).unwrap();
        let e = relative_error(&want, &p.field, NormKind::L2).unwrap();
        assert!(e < 1e-6, "{regressor:?}: {e}");
    }
}

#[test]
fn regridding_a_synthetic_field_from_its_cell_centres() {
    let set = make_snapshots(&small_wave()).unwrap();
    let f = &set.snapshots()[10];
    let e = f.extent();
    let (dx, dy) = ((e.x_max - e.x_min) / f.cols() as f64, (e.y_max - e.y_min) / f.rows() as f64);
    let points: Vec<_> = (0..f.len())
        .map(|i| {
            let (r, c) = (i / f.cols(), i % f.cols());
            (e.x_min + (c as f64 + 0.5) * dx, e.y_max - (r as f64 + 0.5) * dy, f.values()[i])
        })
        .collect();
    assert_eq!(&regrid_scattered(&points, f.rows(), f.cols(), e, 4).unwrap(), f);
}

#[test]
fn dipole_study_passes_its_check() {
    let dir = tempfile::tempdir().unwrap();
    let checks = bench::run_study(&StudySpec::SignedDipoleParamInterp(DipoleConfig::default()), dir.path()).unwrap();
    assert!(checks.iter().all(|c| c.pass), "{checks:?}");
    let rep = bench::signed_dipole(&DipoleConfig::default()).unwrap();
    assert_eq!(rep.r_used, 2);
}

#[test]
fn expectations_are_consistent() {
    let exp = Expectations::load().unwrap();
    assert!(exp.table1.band_factor > 1.0);
    assert!(exp.table1.reference.values().all(|v| *v > 0.0 && *v < 1.0));
    assert!(exp.travelling_gaussian.max_error_ratio > 0.0 && exp.travelling_gaussian.max_error_ratio < 1.0);
}

#[test]
fn duplicate_training_rows_fail_early() {
    let dir = tempfile::tempdir().unwrap();
    let set = make_snapshots(&small_wave()).unwrap().select(&[1, 2]).unwrap();
    write_snapshot_set(&set, dir.path()).unwrap();
    let path = dir.path().join("manifest.csv");
    let text = std::fs::read_to_string(&path).unwrap().replace("1,2.0,", "1,1.0,");
    std::fs::write(&path, text).unwrap();
    let m = Manifest::read(&path).unwrap();
    assert!(matches!(m.load_training(), Err(Error::DuplicateParameter(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn field_text_roundtrip_is_bitwise(
        rows in 2usize..6,
        cols in 2usize..6,
        seed in proptest::collection::vec(-1e300f64..1e300, 36),
        x0 in -10.0f64..10.0,
    ) {
        let values = seed[..rows * cols].to_vec();
        let f = Field2D::new(rows, cols, values, Extent::new(x0, x0 + 3.0, -1.0, 2.5)).unwrap();
        let g = parse_field(&io::field_to_string(&f), std::path::Path::new("p.f2d")).unwrap();
        prop_assert_eq!(f.extent(), g.extent());
        for (a, b) in f.values().iter().zip(g.values()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
