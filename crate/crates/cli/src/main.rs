use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use rcdt_rom::bench::{self, StudySpec};
use rcdt_rom::cdt::CdtOptions;
use rcdt_rom::grid::{threshold, Field2D, SnapshotSet};
use rcdt_rom::io::{self, Manifest, RunRecord};
use rcdt_rom::pod::{singular_value_report, write_singular_value_csv};
use rcdt_rom::rcdt::{default_reference, roundtrip, RoundtripOptions};
use rcdt_rom::rom::{self, RcdtSpace, Regressor, RomConfig, SpaceKind};
use rcdt_rom::synth::{make_field, make_snapshots, CaseSpec};
use rcdt_rom::{Error, Result};

#[derive(Parser)]
#[command(name = "rcdt-rom", version, about = "Radon-CDT reduced-order modelling of 2-D fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic field or snapshot family with its manifest.
    Synth {
        /// circle, circle-edge, gaussian, twin-jets, travelling-gaussian,
        /// wave-analog or signed-dipole
        #[arg(long)]
        case: String,
        /// Grid size as ROWSxCOLS; defaults to the case's usual grid.
        #[arg(long, value_parser = parse_size)]
        size: Option<(usize, usize)>,
        #[arg(long)]
        invert: bool,
        #[arg(long)]
        smooth_sigma: Option<f64>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Forward and inverse RCDT of one field, with its relative L2 error.
    Roundtrip {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        angles: Option<usize>,
        #[arg(long)]
        signed: bool,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: PathBuf,
    },
    /// Rank-r POD projection errors of every snapshot in a manifest.
    Project {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, value_enum)]
        space: Space,
        #[arg(long)]
        modes: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Singular values of a snapshot set in several spaces.
    Singvals {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, value_enum, value_delimiter = ',')]
        spaces: Vec<Space>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build a ROM from a training manifest and predict new parameters.
    Predict {
        #[arg(long)]
        train: PathBuf,
        #[arg(long, value_enum)]
        space: Space,
        #[arg(long)]
        modes: usize,
        #[arg(long, value_enum, default_value = "linear")]
        regressor: RegressorArg,
        /// Comma-separated parameter vector; repeat for several predictions.
        #[arg(long, required = true, value_parser = parse_params)]
        at: Vec<Vec<f64>>,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Interpolate two fields with weight W on the second.
    InterpPair {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        w: f64,
        #[arg(long, value_enum)]
        space: Space,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a named study and write its report directory.
    Bench {
        /// table1, travelling-gaussian, twin-jets, wave-analog or signed-dipole
        #[arg(long)]
        study: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Space {
    Physical,
    Fourier,
    Rcdt,
    RcdtSigned,
}

impl Space {
    fn kind(self) -> SpaceKind {
        match self {
            Space::Physical => SpaceKind::Physical,
            Space::Fourier => SpaceKind::Fourier,
            Space::Rcdt => SpaceKind::Rcdt(RcdtSpace::default()),
            Space::RcdtSigned => SpaceKind::RcdtSigned(RcdtSpace::default()),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum RegressorArg {
    Linear,
    Rbf,
    Gpr,
}

impl From<RegressorArg> for Regressor {
    fn from(r: RegressorArg) -> Self {
        match r {
            RegressorArg::Linear => Regressor::Linear,
            RegressorArg::Rbf => Regressor::Rbf,
            RegressorArg::Gpr => Regressor::Gpr,
        }
    }
}

fn parse_size(s: &str) -> std::result::Result<(usize, usize), String> {
    let (r, c) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected ROWSxCOLS, got `{s}`"))?;
    let n = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("`{t}`: {e}"));
    Ok((n(r)?, n(c)?))
}

fn parse_params(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("bad parameter `{t}`"))
        })
        .collect()
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn export_pgm(field: &Field2D, path: PathBuf) -> Result<()> {
    io::export_pgm(field, &path, None)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth {
            case,
            size,
            invert,
            smooth_sigma,
            seed,
            out,
        } => {
            let mut spec = CaseSpec::default_for(&case)?
                .inverted(invert)
                .smoothed(smooth_sigma)
                .with_seed(seed);
            if let Some((rows, cols)) = size {
                spec.rows = rows;
                spec.cols = cols;
            }
            let set = if spec.is_family() {
                make_snapshots(&spec)?
            } else {
                SnapshotSet::with_scalar_params(vec![make_field(&spec)?], &[0.0])?
            };
            create_dir(&out)?;
            io::write_snapshot_set(&set, &out)?;
            if !spec.is_family() {
                export_pgm(&set.snapshots()[0], out.join("snap_0000.pgm"))?;
            }
            RunRecord::new("synth", json!({ "case": case, "spec": spec }))
                .with_seed(seed)
                .write(&out)?;
            println!("wrote {} snapshot(s) to {}", set.len(), out.display());
        }
        Command::Roundtrip {
            input,
            angles,
            signed,
            epsilon,
            out,
            report,
        } => {
            let field = io::read_field(&input)?;
            let n_angles = angles.unwrap_or_else(|| rcdt_rom::radon::default_angle_count(field.rows(), field.cols()));
            let cdt = match epsilon {
                Some(e) => CdtOptions::new(e)?,
                None => CdtOptions::default(),
            };
            let reference = default_reference(field.rows(), field.cols())?;
            let rt = roundtrip(
                &field,
                n_angles,
                &reference,
                RoundtripOptions {
                    cdt,
                    signed,
                    ..Default::default()
                },
            )?;
            create_dir(&out)?;
            io::write_field(&rt.reconstruction, &out.join("reconstruction.f2d"))?;
            io::write_field(&rt.difference, &out.join("difference.f2d"))?;
            let range = Some((field.min().min(rt.reconstruction.min()), field.max().max(rt.reconstruction.max())));
            io::export_pgm(&field, &out.join("input.pgm"), range)?;
            io::export_pgm(&rt.reconstruction, &out.join("output.pgm"), range)?;
            io::export_pgm_signed(&rt.difference, &out.join("difference.pgm"))?;
            io::write_error_report(&rt.report, &[Vec::new()], &report)?;
            RunRecord::new(
                "roundtrip",
                json!({ "in": input, "angles": n_angles, "signed": signed, "epsilon": cdt.epsilon }),
            )
            .write(&out)?;
            println!("relative L2 error {:e}", rt.report.mean);
        }
        Command::Project {
            manifest,
            space,
            modes,
            out,
        } => {
            let set = Manifest::read(&manifest)?.load()?;
            let kind = space.kind();
            let row = rom::projection_study(&set, &kind, &[modes])?.remove(0);
            create_dir(&out)?;
            io::write_error_report(&row.report, set.params(), &out.join("errors.csv"))?;
            RunRecord::new("project", json!({ "manifest": manifest, "space": kind, "modes": modes })).write(&out)?;
            println!("r={modes} mean relative L2 error {:e} (aggregate {:e})", row.report.mean, row.aggregate);
        }
        Command::Singvals { manifest, spaces, out } => {
            if spaces.is_empty() {
                return Err(Error::InvalidArgument("--spaces needs at least one space".into()));
            }
            let set = Manifest::read(&manifest)?.load()?;
            let mut named = Vec::new();
            for s in &spaces {
                let kind = s.kind();
                let parts = rom::space_singular_values(&set, &kind)?;
                let suffixes: &[&str] = if parts.len() == 2 { &["_pos", "_neg"] } else { &[""] };
                for (values, suffix) in parts.into_iter().zip(suffixes) {
                    named.push((format!("{}{suffix}", kind.label()), values));
                }
            }
            let refs: Vec<(&str, &[f64])> = named.iter().map(|(n, v)| (n.as_str(), v.as_slice())).collect();
            let mut buf = Vec::new();
            write_singular_value_csv(&singular_value_report(&refs)?, &mut buf)?;
            io::write_atomic(&out, &buf)?;
            let labels: Vec<&str> = spaces.iter().map(|s| s.kind().label()).collect();
            let dir = out.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
            RunRecord::new("singvals", json!({ "manifest": manifest, "spaces": labels, "out": out })).write(dir)?;
            println!("wrote {}", out.display());
        }
        Command::Predict {
            train,
            space,
            modes,
            regressor,
            at,
            threshold: level,
            out,
        } => {
            let set = Manifest::read(&train)?.load_training()?;
            let config = RomConfig::new(space.kind(), modes, regressor.into());
            let model = rom::build(&set, &config)?;
            create_dir(&out)?;
            for (i, p) in at.iter().enumerate() {
                let pred = model.predict(p)?;
                let field = match level {
                    Some(t) => threshold(&pred.field, t),
                    None => pred.field,
                };
                io::write_field(&field, &out.join(format!("prediction_{i:04}.f2d")))?;
                export_pgm(&field, out.join(format!("prediction_{i:04}.pgm")))?;
                println!(
                    "{p:?}: written{}{}",
                    if pred.extrapolated { ", extrapolated" } else { "" },
                    if pred.repair_magnitude > 0.0 { ", transport maps repaired" } else { "" }
                );
            }
            RunRecord::new(
                "predict",
                json!({ "train": train, "rom": config, "at": at, "threshold": level }),
            )
            .write(&out)?;
        }
        Command::InterpPair { a, b, w, space, out } => {
            let (fa, fb) = (io::read_field(&a)?, io::read_field(&b)?);
            let kind = space.kind();
            let field = rom::interpolate_pair(&fa, &fb, w, &kind)?;
            create_dir(&out)?;
            io::write_field(&field, &out.join("interpolated.f2d"))?;
            export_pgm(&field, out.join("interpolated.pgm"))?;
            RunRecord::new("interp-pair", json!({ "a": a, "b": b, "w": w, "space": kind })).write(&out)?;
            println!("wrote {}", out.join("interpolated.f2d").display());
        }
        Command::Bench { study, seed, out } => {
            let mut spec = StudySpec::by_name(&study)?;
            if let Some(s) = seed {
                spec = spec.with_seed(s);
            }
            let checks = bench::run_study(&spec, &out)?;
            for c in &checks {
                println!("{} {} ({})", if c.pass { "PASS" } else { "FAIL" }, c.check, c.detail);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 1 })
        }
    }
}

