//! On-disk formats: similarity CSV, ordering lists, PGM heatmaps, sweep CSV.
//!
//! All text is UTF-8 with LF line endings. Lines starting with `#` are
//! comments in every input format.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use flock_reid::pipeline::ExperimentReport;
use flock_reid::{CameraOrdering, SimilarityMatrix};

use crate::CliError;

/// `path:line:col: message`, with 1-based line and column.
fn at(path: &Path, line: usize, col: usize, msg: impl std::fmt::Display) -> CliError {
    CliError::Usage(format!("{}:{line}:{col}: {msg}", path.display()))
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("{}: cannot read: {e}", path.display())))
}

/// Content lines with their 1-based line numbers, skipping blanks and comments.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with('#')
        })
}

/// Plain CSV of reals in `[0, 1]`, one query per row, one gallery entry per
/// column, no header.
pub fn parse_matrix_str(text: &str, path: &Path) -> Result<SimilarityMatrix, CliError> {
    let mut values = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (line, content) in content_lines(text) {
        let mut count = 0;
        for (c, cell) in content.split(',').enumerate() {
            let cell = cell.trim();
            let v: f64 = cell.parse().map_err(|_| {
                at(
                    path,
                    line,
                    c + 1,
                    format!("cannot parse {cell:?} as a number"),
                )
            })?;
            if !v.is_finite() {
                return Err(at(path, line, c + 1, format!("value {cell} is not finite")));
            }
            if !(0.0..=1.0).contains(&v) {
                return Err(at(path, line, c + 1, format!("value {cell} out of [0, 1]")));
            }
            values.push(v);
            count += 1;
        }
        match cols {
            None => cols = Some(count),
            Some(expected) if expected != count => {
                return Err(at(
                    path,
                    line,
                    count.min(expected) + 1,
                    format!("row has {count} columns, expected {expected}"),
                ))
            }
            _ => {}
        }
        rows += 1;
    }
    let cols =
        cols.ok_or_else(|| CliError::Usage(format!("{}: no matrix rows", path.display())))?;
    SimilarityMatrix::new(rows, cols, values)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

pub fn read_matrix(path: &Path) -> Result<SimilarityMatrix, CliError> {
    parse_matrix_str(&read(path)?, path)
}

/// Six significant digits, plain decimal for everything a similarity can be.
pub fn format_sig6(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let magnitude = v.abs().log10().floor() as i32;
    if (-5..=5).contains(&magnitude) {
        let decimals = (5 - magnitude).max(0) as usize;
        let s = format!("{v:.decimals$}");
        // "1.000000" reads back fine; trimming keeps files small.
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{v:.5e}")
    }
}

pub fn format_matrix(p: &SimilarityMatrix) -> String {
    let mut out = String::with_capacity(p.rows() * p.cols() * 9);
    for i in 0..p.rows() {
        for (j, &v) in p.row(i).iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&format_sig6(v));
        }
        out.push('\n');
    }
    out
}

/// Camera2 positions, one vehicle per line: either `y` alone or `x,y` with
/// `x` equal to the line's running index.
pub fn parse_ordering_str(text: &str, path: &Path) -> Result<CameraOrdering, CliError> {
    let mut y = Vec::new();
    // value -> line where it first appeared
    let mut first_line = std::collections::HashMap::new();
    for (line, content) in content_lines(text) {
        let cells: Vec<&str> = content.split(',').map(str::trim).collect();
        let (y_col, y_text) = match cells.as_slice() {
            [only] => (1, *only),
            [x_text, y_text] => {
                let x: usize = x_text.parse().map_err(|_| {
                    at(
                        path,
                        line,
                        1,
                        format!("cannot parse {x_text:?} as an index"),
                    )
                })?;
                if x != y.len() {
                    return Err(at(
                        path,
                        line,
                        1,
                        format!("expected x = {}, found {x}", y.len()),
                    ));
                }
                (2, *y_text)
            }
            _ => return Err(at(path, line, 3, "expected `y` or `x,y`")),
        };
        let v: usize = y_text.parse().map_err(|_| {
            at(
                path,
                line,
                y_col,
                format!("cannot parse {y_text:?} as an index"),
            )
        })?;
        if let Some(prev) = first_line.insert(v, line) {
            return Err(at(
                path,
                line,
                y_col,
                format!("duplicated value {v} (first on line {prev})"),
            ));
        }
        y.push(v);
    }
    if y.is_empty() {
        return Err(CliError::Usage(format!(
            "{}: no ordering entries",
            path.display()
        )));
    }
    CameraOrdering::from_camera2(y).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

pub fn read_ordering(path: &Path) -> Result<CameraOrdering, CliError> {
    parse_ordering_str(&read(path)?, path)
}

pub fn format_ordering(o: &CameraOrdering) -> String {
    let mut out = String::new();
    for &y in o.y() {
        writeln!(out, "{y}").unwrap();
    }
    out
}

/// Gray level for a similarity: darker is more similar.
pub fn pixel(value: f64) -> u8 {
    (255.0 * (1.0 - value)).round().clamp(0.0, 255.0) as u8
}

/// ASCII PGM (`P2`), maxval 255, one image row per line.
pub fn format_pgm(grid: &SimilarityMatrix) -> String {
    let mut out = format!("P2\n{} {}\n255\n", grid.cols(), grid.rows());
    for i in 0..grid.rows() {
        let row: Vec<String> = grid.row(i).iter().map(|&v| pixel(v).to_string()).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

/// Parses an ASCII PGM back into `(width, height, pixels)`.
pub fn parse_pgm(text: &str) -> Result<(usize, usize, Vec<u8>), CliError> {
    let bad = |m: &str| CliError::Usage(format!("malformed PGM: {m}"));
    let mut tokens = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(str::split_whitespace);
    if tokens.next() != Some("P2") {
        return Err(bad("missing P2 magic"));
    }
    let mut num = |what: &str| -> Result<usize, CliError> {
        tokens
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| bad(what))
    };
    let (w, h, max) = (num("width")?, num("height")?, num("maxval")?);
    if max != 255 {
        return Err(bad("maxval must be 255"));
    }
    let pixels = (0..w * h)
        .map(|_| num("pixel").and_then(|p| u8::try_from(p).map_err(|_| bad("pixel > 255"))))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((w, h, pixels))
}

pub const REPORT_HEADER: &str = "n,flock_size,scale,trial,rank1,variance,recovered_scale,wall_ms";

/// Sweep report as CSV. `wall_ms` is written as 0 unless `with_timing`, so
/// identical runs produce identical bytes.
pub fn format_report(report: &ExperimentReport, with_timing: bool) -> String {
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for r in &report.rows {
        let wall = if with_timing { r.wall_ms } else { 0.0 };
        writeln!(
            out,
            "{},{},{},{},{:.6},{:.6},{:.6},{:.3}",
            r.n, r.flock_size, r.scale, r.trial, r.rank1, r.variance, r.recovered_scale, wall
        )
        .unwrap();
    }
    out
}

/// Scatter of `(x_i, y_i)` with a trailing summary comment.
pub fn format_scatter(o: &CameraOrdering) -> String {
    let stats = flock_reid::metrics::displacement_stats(o);
    let mut out = String::from("x,y\n");
    for (x, y) in o.x().iter().zip(o.y()) {
        writeln!(out, "{x},{y}").unwrap();
    }
    writeln!(
        out,
        "# variance={} recovered_scale={:.6}",
        stats.variance, stats.recovered_scale
    )
    .unwrap();
    out
}

/// Writes `contents` to a temporary file beside `path`, then renames it over.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Usage(format!("{}: cannot write: {e}", path.display()));
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}
