//! Delimited tables and atomic file output.
//!
//! A scalar table is comma- or tab-separated with a header row naming the
//! column blocks: an optional response column `y` first, then the linear
//! covariates `w1..wq`, then the index covariates `z1..zd`. Curve files
//! follow the curve-loading convention (optional leading grid row). Floats
//! are written with the shortest representation that parses back to the
//! same value, so every table round-trips exactly.

use std::fmt::Write as _;
use std::path::Path;

use fsim_core::linalg::Mat;
use fsim_core::{Error, FunctionalSample};

use crate::error::{CliError, Result};

/// Parsed scalar table: optional response plus the two covariate blocks.
#[derive(Debug, Clone)]
pub struct ScalarTable {
    /// Response column, when the header has a `y` block.
    pub y: Option<Vec<f64>>,
    /// Linear covariates, one row per observation (may have zero columns).
    pub w: Mat<f64>,
    /// Index covariates, one row per observation.
    pub z: Mat<f64>,
}

impl ScalarTable {
    /// Number of observations (data rows).
    pub fn rows(&self) -> usize {
        self.z.rows()
    }
}

/// Column layout read off a scalar-table header.
struct HeaderLayout {
    has_y: bool,
    q: usize,
    d: usize,
}

/// Validates a header row: `[y,] w1..wq, z1..zd` with contiguous numbering.
fn parse_header(tokens: &[String], require_y: bool) -> std::result::Result<HeaderLayout, Error> {
    let mut pos = 0;
    let has_y = tokens.first().map(String::as_str) == Some("y");
    if has_y {
        pos += 1;
    } else if require_y {
        return Err(Error::Format(
            "scalar table header is missing the y block (the first column must be named 'y')"
                .into(),
        ));
    }
    let mut q = 0;
    while pos < tokens.len() && tokens[pos] == format!("w{}", q + 1) {
        q += 1;
        pos += 1;
    }
    let mut d = 0;
    while pos < tokens.len() && tokens[pos] == format!("z{}", d + 1) {
        d += 1;
        pos += 1;
    }
    if pos < tokens.len() {
        return Err(Error::Format(format!(
            "unexpected scalar table column '{}' at position {} (expected [y,] w1..wq, z1..zd in order)",
            tokens[pos],
            pos + 1
        )));
    }
    if d == 0 {
        return Err(Error::Format(
            "scalar table header is missing the z block (expected z1..zd after the w columns)"
                .into(),
        ));
    }
    Ok(HeaderLayout { has_y, q, d })
}

/// Parses scalar-table text; `require_y` demands the response block.
///
/// Row/column numbers in errors are 1-based over the physical lines of the
/// file, matching the curve loader's convention.
pub fn parse_scalars(text: &str, require_y: bool) -> std::result::Result<ScalarTable, Error> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header_line) = lines
        .next()
        .ok_or_else(|| Error::Format("scalar table is empty (no header row)".into()))?;
    let header_line = header_line.trim();
    let delim = if header_line.contains('\t') { '\t' } else { ',' };
    let tokens: Vec<String> = header_line
        .split(delim)
        .map(|t| t.trim().to_ascii_lowercase())
        .collect();
    let layout = parse_header(&tokens, require_y)?;
    let width = tokens.len();

    let mut y = Vec::new();
    let mut w_rows: Vec<Vec<f64>> = Vec::new();
    let mut z_rows: Vec<Vec<f64>> = Vec::new();
    for (line_no, line) in lines {
        let line = line.trim();
        let mut vals = Vec::with_capacity(width);
        for (col, cell) in line.split(delim).enumerate() {
            let cell = cell.trim();
            let v: f64 = cell.parse().map_err(|e| Error::Parse {
                row: line_no + 1,
                col: col + 1,
                detail: format!("{e}: {cell:?}"),
            })?;
            vals.push(v);
        }
        if vals.len() != width {
            return Err(Error::Format(format!(
                "ragged rows: row {} has {} columns, the header names {}",
                line_no + 1,
                vals.len(),
                width
            )));
        }
        let mut it = vals.into_iter();
        if layout.has_y {
            y.push(it.next().unwrap());
        }
        w_rows.push(it.by_ref().take(layout.q).collect());
        z_rows.push(it.collect());
    }

    let n = z_rows.len();
    let w = Mat::from_fn(n, layout.q, |i, j| w_rows[i][j]);
    let z = Mat::from_fn(n, layout.d, |i, j| z_rows[i][j]);
    Ok(ScalarTable {
        y: layout.has_y.then_some(y),
        w,
        z,
    })
}

/// Reads a scalar table from `path`; errors name the file.
pub fn load_scalars(path: &Path, require_y: bool) -> Result<ScalarTable> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::file(path, e))?;
    parse_scalars(&text, require_y).map_err(|e| crate::error::in_file(path, e))
}

/// Appends one comma-separated row of full-precision floats.
fn push_row(out: &mut String, vals: impl IntoIterator<Item = f64>) {
    let mut first = true;
    for v in vals {
        if !first {
            out.push(',');
        }
        write!(out, "{v}").unwrap();
        first = false;
    }
    out.push('\n');
}

/// Renders a scalar table with header `[y,] w1..wq, z1..zd`.
pub fn scalars_text(y: Option<&[f64]>, w: &Mat<f64>, z: &Mat<f64>) -> String {
    let mut header = Vec::new();
    if y.is_some() {
        header.push("y".to_string());
    }
    for j in 0..w.cols() {
        header.push(format!("w{}", j + 1));
    }
    for j in 0..z.cols() {
        header.push(format!("z{}", j + 1));
    }
    let mut out = header.join(",");
    out.push('\n');
    for i in 0..z.rows() {
        let row = y
            .map(|ys| vec![ys[i]])
            .unwrap_or_default()
            .into_iter()
            .chain(w.row(i).iter().copied())
            .chain(z.row(i).iter().copied());
        push_row(&mut out, row);
    }
    out
}

/// Renders curves with a leading grid row.
pub fn curves_text(sample: &FunctionalSample) -> String {
    let mut out = String::new();
    push_row(&mut out, sample.grid().points().iter().copied());
    for i in 0..sample.n() {
        push_row(&mut out, sample.curve(i).iter().copied());
    }
    out
}

/// Renders predictions, one per row under a `prediction` header.
pub fn predictions_text(preds: &[f64]) -> String {
    let mut out = String::from("prediction\n");
    for &p in preds {
        writeln!(out, "{p}").unwrap();
    }
    out
}

/// Writes `content` to `path` fully or not at all: the bytes land in a
/// temporary file in the target directory first and are renamed over the
/// target only after a complete write.
pub fn atomic_write(path: &Path, content: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let name = path.file_name().ok_or_else(|| {
        CliError::Config(format!("output path {} has no file name", path.display()))
    })?;
    let tmp = dir.join(format!(
        ".{}.{}.tmp",
        name.to_string_lossy(),
        std::process::id()
    ));
    std::fs::write(&tmp, content).map_err(|e| CliError::file(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        CliError::file(path, e)
    })
}
