//! Point cloud and image files.
//!
//! Clouds are read from plain `x y z` text or ASCII PLY (vertex element
//! only; faces and other elements are skipped). Images are written as binary
//! 8-bit PGM, and optionally as whitespace-delimited text holding the exact
//! values.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::camera::PointCloud;
use crate::error::{Error, Result};
use crate::fit::FitTrace;
use crate::raster::ImageGrid;

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { path: path.to_path_buf(), line, msg: msg.into() }
}

pub fn read_cloud(path: impl AsRef<Path>) -> Result<PointCloud> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_cloud(&text, path)
}

/// Parses cloud text; `path` is only used in error messages.
pub fn parse_cloud(text: &str, path: &Path) -> Result<PointCloud> {
    let first = text.lines().next().map(str::trim);
    let points = if first == Some("ply") { parse_ply(text, path)? } else { parse_xyz(text, path)? };
    if points.is_empty() {
        return Err(Error::EmptyCloud);
    }
    PointCloud::new(points)
}

fn parse_number(tok: &str, path: &Path, line: usize) -> Result<f64> {
    let v: f64 = tok.parse().map_err(|_| parse_err(path, line, format!("not a number: {tok:?}")))?;
    if !v.is_finite() {
        return Err(parse_err(path, line, format!("non-finite coordinate {tok:?}")));
    }
    Ok(v)
}

fn parse_xyz(text: &str, path: &Path) -> Result<Vec<[f64; 3]>> {
    let mut points = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(parse_err(path, i + 1, format!("expected 3 values, found {}", toks.len())));
        }
        points.push([
            parse_number(toks[0], path, i + 1)?,
            parse_number(toks[1], path, i + 1)?,
            parse_number(toks[2], path, i + 1)?,
        ]);
    }
    Ok(points)
}

struct PlyElement {
    name: String,
    count: usize,
    properties: Vec<String>,
}

fn parse_ply(text: &str, path: &Path) -> Result<Vec<[f64; 3]>> {
    let mut lines = text.lines().enumerate();
    lines.next(); // magic
    let mut elements: Vec<PlyElement> = Vec::new();
    let mut ascii = false;
    let mut header_done = false;
    for (i, raw) in lines.by_ref() {
        let toks: Vec<&str> = raw.split_whitespace().collect();
        match toks.as_slice() {
            ["format", "ascii", _] => ascii = true,
            ["format", other, ..] => {
                return Err(parse_err(path, i + 1, format!("unsupported PLY format {other}")));
            }
            ["comment", ..] | ["obj_info", ..] | [] => {}
            ["element", name, count] => elements.push(PlyElement {
                name: name.to_string(),
                count: count.parse().map_err(|_| parse_err(path, i + 1, format!("bad element count {count:?}")))?,
                properties: Vec::new(),
            }),
            ["property", .., name] => match elements.last_mut() {
                Some(e) => e.properties.push(name.to_string()),
                None => return Err(parse_err(path, i + 1, "property before any element")),
            },
            ["end_header"] => {
                header_done = true;
                break;
            }
            _ => return Err(parse_err(path, i + 1, format!("unexpected header line {raw:?}"))),
        }
    }
    if !header_done {
        return Err(parse_err(path, 1, "PLY header has no end_header"));
    }
    if !ascii {
        return Err(parse_err(path, 1, "PLY header declares no ascii format"));
    }
    let mut points = Vec::new();
    for element in &elements {
        let is_vertex = element.name == "vertex";
        let axes = if is_vertex {
            let find = |n: &str| {
                element
                    .properties
                    .iter()
                    .position(|p| p == n)
                    .ok_or_else(|| parse_err(path, 1, format!("vertex element lacks property {n}")))
            };
            Some([find("x")?, find("y")?, find("z")?])
        } else {
            None
        };
        for _ in 0..element.count {
            let (i, raw) = lines
                .next()
                .ok_or_else(|| parse_err(path, text.lines().count(), format!("truncated {} data", element.name)))?;
            let Some(axes) = axes else { continue };
            let toks: Vec<&str> = raw.split_whitespace().collect();
            if toks.len() < element.properties.len() {
                return Err(parse_err(
                    path,
                    i + 1,
                    format!("expected {} values, found {}", element.properties.len(), toks.len()),
                ));
            }
            points.push([
                parse_number(toks[axes[0]], path, i + 1)?,
                parse_number(toks[axes[1]], path, i + 1)?,
                parse_number(toks[axes[2]], path, i + 1)?,
            ]);
        }
        if is_vertex {
            break;
        }
    }
    Ok(points)
}

pub fn write_cloud(cloud: &PointCloud, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = String::with_capacity(cloud.len() * 48);
    for p in cloud.points() {
        text.push_str(&format!("{} {} {}\n", p[0], p[1], p[2]));
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// 8-bit pixel values: `[min, max] → [0, 255]` when `normalize`, otherwise
/// values clamped to `[0, 255]`. Both round to nearest.
pub fn to_gray8(grid: &ImageGrid, normalize: bool) -> Vec<u8> {
    if normalize {
        let (lo, hi) = (grid.min(), grid.max());
        let span = hi - lo;
        grid.data()
            .iter()
            .map(|&v| if span > 0.0 { ((v - lo) / span * 255.0).round().clamp(0.0, 255.0) as u8 } else { 0 })
            .collect()
    } else {
        grid.data().iter().map(|&v| v.round().clamp(0.0, 255.0) as u8).collect()
    }
}

/// Binary PGM (`P5`) bytes of `grid`.
pub fn encode_pgm(grid: &ImageGrid, normalize: bool) -> Vec<u8> {
    let mut bytes = format!("P5\n{} {}\n255\n", grid.width(), grid.height()).into_bytes();
    bytes.extend(to_gray8(grid, normalize));
    bytes
}

pub fn write_image(grid: &ImageGrid, path: impl AsRef<Path>, normalize: bool) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_pgm(grid, normalize)).map_err(|e| Error::io(path, e))
}

/// Reads a PGM (`P5` or `P2`) and scales pixels to `[0, 1]` by its maxval.
pub fn read_image(path: impl AsRef<Path>) -> Result<ImageGrid> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut pos = 0;
    // Header tokens separated by whitespace, with `#` comments.
    let mut next_token = |bytes: &[u8]| -> Option<String> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        (pos > start).then(|| String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    let bad = |msg: &str| parse_err(path, 1, msg.to_string());
    let magic = next_token(&bytes).ok_or_else(|| bad("empty file"))?;
    let mut header = [0usize; 3];
    for slot in header.iter_mut() {
        *slot = next_token(&bytes).and_then(|t| t.parse().ok()).ok_or_else(|| bad("malformed PGM header"))?;
    }
    let [width, height, maxval] = header;
    if width == 0 || height == 0 || maxval == 0 || maxval > 255 {
        return Err(bad("unsupported PGM dimensions or maxval"));
    }
    let n = width * height;
    let values: Vec<f64> = match magic.as_str() {
        "P5" => {
            let data = bytes.get(pos + 1..pos + 1 + n).ok_or_else(|| bad("truncated pixel data"))?;
            data.iter().map(|&b| b as f64 / maxval as f64).collect()
        }
        "P2" => (0..n)
            .map(|_| {
                next_token(&bytes)
                    .and_then(|t| t.parse::<f64>().ok())
                    .map(|v| v / maxval as f64)
                    .ok_or_else(|| bad("truncated pixel data"))
            })
            .collect::<Result<_>>()?,
        _ => return Err(bad("not a PGM file")),
    };
    ImageGrid::from_vec(height, width, values)
}

/// Exact values, one image row per line.
pub fn write_raw_grid(grid: &ImageGrid, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = String::new();
    for r in 0..grid.height() {
        let row: Vec<String> = (0..grid.width()).map(|c| grid.get(r, c).to_string()).collect();
        text.push_str(&row.join(" "));
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_raw_grid(path: impl AsRef<Path>) -> Result<ImageGrid> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        rows.push(line.split_whitespace().map(|t| parse_number(t, path, i + 1)).collect::<Result<_>>()?);
    }
    let h = rows.len();
    let w = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != w) {
        return Err(parse_err(path, 1, "ragged rows"));
    }
    ImageGrid::from_vec(h, w, rows.into_iter().flatten().collect())
}

/// Header line of the trace format.
pub const TRACE_HEADER: &str = "# step cd edge corner total";

/// One line per step: `step cd edge corner total`.
pub fn trace_lines(trace: &FitTrace) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for (step, r) in trace.reports.iter().enumerate() {
        out.push_str(&format!("{step} {} {} {} {}\n", r.cd, r.edge, r.corner, r.total));
    }
    out
}

pub fn write_trace(trace: &FitTrace, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(trace_lines(trace).as_bytes()).map_err(|e| Error::io(path, e))
}
