//! Text field files, snapshot manifests, PGM export, CSV reports and
//! scattered-data regridding.
//!
//! Every writer goes through [`write_atomic`], so a crashed run never leaves a
//! half-written artifact behind.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{ErrorReport, Extent, Field2D, SnapshotSet};

/// Writes `bytes` to a temporary file next to `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Serialises a field: header `f2d rows cols x_min x_max y_min y_max`, then one
/// line per row. Floats use the shortest representation that parses back to
/// the same bits.
pub fn field_to_string(field: &Field2D) -> String {
    let e = field.extent();
    let mut s = String::with_capacity(field.len() * 12);
    writeln!(
        s,
        "f2d {} {} {:?} {:?} {:?} {:?}",
        field.rows(),
        field.cols(),
        e.x_min,
        e.x_max,
        e.y_min,
        e.y_max
    )
    .unwrap();
    for row in field.values().chunks_exact(field.cols()) {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                s.push(' ');
            }
            write!(s, "{v:?}").unwrap();
        }
        s.push('\n');
    }
    s
}

/// Parses the text produced by [`field_to_string`]; `path` only labels errors.
pub fn parse_field(text: &str, path: &Path) -> Result<Field2D> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| parse_err(path, 1, "empty file"))?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    if tokens.len() != 7 || tokens[0] != "f2d" {
        return Err(parse_err(
            path,
            1,
            "expected header `f2d <rows> <cols> <x_min> <x_max> <y_min> <y_max>`",
        ));
    }
    let dim = |t: &str, what: &str| {
        t.parse::<usize>()
            .map_err(|_| parse_err(path, 1, format!("bad {what} `{t}`")))
    };
    let rows = dim(tokens[1], "row count")?;
    let cols = dim(tokens[2], "column count")?;
    let mut bounds = [0.0; 4];
    for (b, t) in bounds.iter_mut().zip(&tokens[3..]) {
        *b = t
            .parse()
            .map_err(|_| parse_err(path, 1, format!("bad extent value `{t}`")))?;
    }
    let mut values = Vec::with_capacity(rows * cols);
    let mut seen = 0;
    for (line_no, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        seen += 1;
        if seen > rows {
            return Err(parse_err(path, line_no, format!("more than {rows} rows")));
        }
        let before = values.len();
        for t in line.split_whitespace() {
            let v: f64 = t
                .parse()
                .map_err(|_| parse_err(path, line_no, format!("bad number `{t}`")))?;
            values.push(v);
        }
        let n = values.len() - before;
        if n != cols {
            return Err(parse_err(
                path,
                line_no,
                format!("row {} has {n} values, expected {cols}", seen - 1),
            ));
        }
    }
    if seen != rows {
        return Err(parse_err(
            path,
            text.lines().count() + 1,
            format!("expected {rows} rows, found {seen}"),
        ));
    }
    let extent = Extent::new(bounds[0], bounds[1], bounds[2], bounds[3]);
    Field2D::new(rows, cols, values, extent).map_err(|e| parse_err(path, 1, e.to_string()))
}

pub fn write_field(field: &Field2D, path: &Path) -> Result<()> {
    write_atomic(path, field_to_string(field).as_bytes())
}

pub fn read_field(path: &Path) -> Result<Field2D> {
    parse_field(&read_text(path)?, path)
}

/// One manifest row.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub index: usize,
    pub params: Vec<f64>,
    /// Relative paths are resolved against the manifest's directory.
    pub path: PathBuf,
}

/// Snapshot listing: CSV with header `index,<param columns>,path`.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub param_names: Vec<String>,
    pub entries: Vec<ManifestEntry>,
    base_dir: PathBuf,
}

impl Manifest {
    pub fn new(param_names: Vec<String>, entries: Vec<ManifestEntry>) -> Result<Self> {
        let m = Manifest {
            param_names,
            entries,
            base_dir: PathBuf::new(),
        };
        m.validate()?;
        Ok(m)
    }

    /// Default parameter column names: `param`, or `param1..paramD`.
    pub fn default_param_names(dim: usize) -> Vec<String> {
        if dim == 1 {
            vec!["param".into()]
        } else {
            (1..=dim).map(|k| format!("param{k}")).collect()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.param_names.is_empty() {
            return Err(Error::invalid("manifest needs at least one parameter column"));
        }
        for w in self.entries.windows(2) {
            if w[1].index <= w[0].index {
                return Err(Error::invalid(format!(
                    "manifest indices must be unique and increasing ({} after {})",
                    w[1].index, w[0].index
                )));
            }
        }
        if let Some(e) = self.entries.iter().find(|e| e.params.len() != self.param_names.len()) {
            return Err(Error::shape(
                format!("{} parameters", self.param_names.len()),
                format!("{} for index {}", e.params.len(), e.index),
            ));
        }
        Ok(())
    }

    pub fn resolve(&self, entry: &ManifestEntry) -> PathBuf {
        if entry.path.is_absolute() {
            entry.path.clone()
        } else {
            self.base_dir.join(&entry.path)
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = read_text(path)?;
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
        let header: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
        if header.len() < 3 || header[0] != "index" || header[header.len() - 1] != "path" {
            return Err(parse_err(path, 1, "expected header `index,<params...>,path`"));
        }
        let param_names = header[1..header.len() - 1].to_vec();
        let mut entries = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let line = i + 2;
            let rec = rec?;
            if rec.len() != header.len() {
                return Err(parse_err(path, line, format!("expected {} columns, got {}", header.len(), rec.len())));
            }
            let index = rec[0]
                .trim()
                .parse()
                .map_err(|_| parse_err(path, line, format!("bad index `{}`", &rec[0])))?;
            let params = (1..rec.len() - 1)
                .map(|k| {
                    rec[k]
                        .trim()
                        .parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| parse_err(path, line, format!("bad parameter `{}`", &rec[k])))
                })
                .collect::<Result<Vec<_>>>()?;
            entries.push(ManifestEntry {
                index,
                params,
                path: PathBuf::from(rec[rec.len() - 1].trim()),
            });
        }
        let mut m = Manifest::new(param_names, entries).map_err(|e| parse_err(path, 1, e.to_string()))?;
        m.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        for e in &m.entries {
            let p = m.resolve(e);
            if !p.is_file() {
                return Err(parse_err(path, 1, format!("snapshot {} not found at {}", e.index, p.display())));
            }
        }
        Ok(m)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["index".to_string()];
        header.extend(self.param_names.iter().cloned());
        header.push("path".into());
        w.write_record(&header)?;
        for e in &self.entries {
            let mut rec = vec![e.index.to_string()];
            rec.extend(e.params.iter().map(|v| format!("{v:?}")));
            rec.push(e.path.to_string_lossy().into_owned());
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::io(path, e.into_error()))?;
        write_atomic(path, &bytes)
    }

    /// Reads every listed field.
    pub fn load(&self) -> Result<SnapshotSet> {
        let fields = self
            .entries
            .par_iter()
            .map(|e| read_field(&self.resolve(e)))
            .collect::<Result<Vec<_>>>()?;
        SnapshotSet::new(fields, self.entries.iter().map(|e| e.params.clone()).collect())
    }

    /// Like [`Manifest::load`], but rejects repeated parameter vectors.
    pub fn load_training(&self) -> Result<SnapshotSet> {
        let set = self.load()?;
        set.check_distinct_params()?;
        Ok(set)
    }
}

/// Writes `set` as `snap_XXXX.f2d` files plus `manifest.csv` into `dir`.
pub fn write_snapshot_set(set: &SnapshotSet, dir: &Path) -> Result<Manifest> {
    let width = set.len().saturating_sub(1).to_string().len().max(4);
    let mut entries = Vec::with_capacity(set.len());
    for (i, (f, p)) in set.snapshots().iter().zip(set.params()).enumerate() {
        let name = format!("snap_{i:0width$}.f2d");
        write_field(f, &dir.join(&name))?;
        entries.push(ManifestEntry {
            index: i,
            params: p.clone(),
            path: PathBuf::from(name),
        });
    }
    let mut m = Manifest::new(Manifest::default_param_names(set.param_dim()), entries)?;
    m.write(&dir.join("manifest.csv"))?;
    m.base_dir = dir.to_path_buf();
    Ok(m)
}

/// Gray level used for a constant field.
pub const PGM_MID_GRAY: u16 = 32768;

/// Quantises `field` linearly from `[min, max]` (default: the field's own
/// range) to 16-bit gray and writes a binary PGM.
pub fn export_pgm(field: &Field2D, path: &Path, range: Option<(f64, f64)>) -> Result<()> {
    let (lo, hi) = range.unwrap_or((field.min(), field.max()));
    if !(lo.is_finite() && hi.is_finite()) || hi < lo {
        return Err(Error::invalid(format!("bad PGM range [{lo}, {hi}]")));
    }
    let mut bytes = format!("P5\n{} {}\n65535\n", field.cols(), field.rows()).into_bytes();
    bytes.reserve(2 * field.len());
    for &v in field.values() {
        let q = if hi == lo {
            PGM_MID_GRAY
        } else {
            ((v - lo) / (hi - lo) * 65535.0).round().clamp(0.0, 65535.0) as u16
        };
        bytes.extend_from_slice(&q.to_be_bytes());
    }
    write_atomic(path, &bytes)
}

/// PGM export with a range symmetric about zero, for difference images.
pub fn export_pgm_signed(field: &Field2D, path: &Path) -> Result<()> {
    let m = field.values().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    export_pgm(field, path, Some((-m, m)))
}

/// Reads a 16-bit binary PGM as `(rows, cols, gray levels)`.
pub fn read_pgm(path: &Path) -> Result<(usize, usize, Vec<u16>)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(parse_err(path, 1, "truncated PGM header"));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    pos += 1;
    let num = |s: &str| s.parse::<usize>().map_err(|_| parse_err(path, 1, format!("bad PGM header value `{s}`")));
    if fields[0] != "P5" || num(&fields[3])? != 65535 {
        return Err(parse_err(path, 1, "only 16-bit binary PGM (P5, maxval 65535) is supported"));
    }
    let (cols, rows) = (num(&fields[1])?, num(&fields[2])?);
    let data = bytes.get(pos..).unwrap_or_default();
    if data.len() != 2 * rows * cols {
        return Err(parse_err(path, 1, format!("expected {} data bytes, found {}", 2 * rows * cols, data.len())));
    }
    let gray = data.chunks_exact(2).map(|b| u16::from_be_bytes([b[0], b[1]])).collect();
    Ok((rows, cols, gray))
}

/// Reads a PGM back into a field, mapping gray levels linearly onto `[min, max]`.
pub fn import_pgm(path: &Path, min: f64, max: f64) -> Result<Field2D> {
    let (rows, cols, gray) = read_pgm(path)?;
    let values = gray
        .iter()
        .map(|&g| min + (max - min) * g as f64 / 65535.0)
        .collect();
    Field2D::from_values(rows, cols, values)
}

/// Inverse-distance (power 2) average of the `k` nearest points at each cell
/// centre of a `rows x cols` grid over `extent`. A point closer than 1e-12 to
/// a cell centre is copied exactly.
pub fn regrid_scattered(points: &[(f64, f64, f64)], rows: usize, cols: usize, extent: Extent, k: usize) -> Result<Field2D> {
    if points.is_empty() {
        return Err(Error::invalid("no points to regrid"));
    }
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if let Some(p) = points.iter().find(|p| !(p.0.is_finite() && p.1.is_finite() && p.2.is_finite())) {
        return Err(Error::invalid(format!("non-finite point {p:?}")));
    }
    let k = k.min(points.len());
    let dx = (extent.x_max - extent.x_min) / cols as f64;
    let dy = (extent.y_max - extent.y_min) / rows as f64;
    let values: Vec<f64> = (0..rows * cols)
        .into_par_iter()
        .map_init(
            || Vec::with_capacity(points.len()),
            |d2: &mut Vec<(f64, f64)>, i| {
                let x = extent.x_min + (i % cols) as f64 * dx + 0.5 * dx;
                let y = extent.y_max - (i / cols) as f64 * dy - 0.5 * dy;
                d2.clear();
                d2.extend(points.iter().map(|p| ((p.0 - x).powi(2) + (p.1 - y).powi(2), p.2)));
                if k < d2.len() {
                    d2.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0));
                }
                let near = &d2[..k];
                if let Some(hit) = near.iter().filter(|p| p.0 < 1e-24).min_by(|a, b| a.0.total_cmp(&b.0)) {
                    return hit.1;
                }
                let (num, den) = near
                    .iter()
                    .fold((0.0, 0.0), |(n, d), p| (n + p.1 / p.0, d + 1.0 / p.0));
                num / den
            },
        )
        .collect();
    Field2D::new(rows, cols, values, extent)
}

/// `snapshot,param,error` rows; multi-dimensional parameters are joined by
/// spaces.
pub fn error_report_csv(report: &ErrorReport, params: &[Vec<f64>]) -> Result<Vec<u8>> {
    if params.len() != report.per_snapshot.len() {
        return Err(Error::shape(format!("{} parameters", report.per_snapshot.len()), params.len()));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["snapshot", "param", "error"])?;
    for (i, (e, p)) in report.per_snapshot.iter().zip(params).enumerate() {
        let p: Vec<String> = p.iter().map(|v| format!("{v:?}")).collect();
        w.write_record([i.to_string(), p.join(" "), format!("{e:?}")])?;
    }
    w.into_inner().map_err(|e| Error::io("<csv>", e.into_error()))
}

pub fn write_error_report(report: &ErrorReport, params: &[Vec<f64>], path: &Path) -> Result<()> {
    write_atomic(path, &error_report_csv(report, params)?)
}

/// Serialises rows with a header through `csv`, then writes atomically.
pub fn write_csv<T: Serialize>(rows: &[T], header: &[&str], path: &Path) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::io(path, e.into_error()))?;
    write_atomic(path, &bytes)
}

/// Provenance record written as `run.json` next to every run's outputs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub rng: Option<String>,
}

impl RunRecord {
    pub fn new(command: &str, config: serde_json::Value) -> Self {
        RunRecord {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config,
            seed: None,
            rng: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self.rng = Some(crate::synth::RNG_NAME.into());
        self
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        write_atomic(&dir.join("run.json"), text.as_bytes())
    }
}
