//! On-disk matrix formats: headerless CSV, the `DSIM` f32le container and a
//! strict subset of NPY 1.0.
//!
//! Complex data is always stored as interleaved `(re, im)` pairs, row-major.

use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const F32LE_MAGIC: &[u8; 4] = b"DSIM";
pub const F32LE_VERSION: u32 = 1;
const F32LE_HEADER_LEN: usize = 4 + 4 + 1 + 8 + 8;
const NPY_MAGIC: &[u8; 6] = b"\x93NUMPY";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FileFormat {
    Csv,
    F32le,
    Npy,
}

impl std::str::FromStr for FileFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(FileFormat::Csv),
            "f32le" => Ok(FileFormat::F32le),
            "npy" => Ok(FileFormat::Npy),
            other => Err(Error::param("format", format!("unknown format `{other}`"))),
        }
    }
}

/// A decoded file before it becomes a [`Dataset`](super::Dataset).
#[derive(Debug, Clone, PartialEq)]
pub struct RawArray {
    pub rows: usize,
    /// Scalars per row; counts complex scalars when `complex` is set.
    pub cols: usize,
    pub complex: bool,
    /// Per-row logical shape (e.g. `[antennas, subcarriers]` for 3-D NPY).
    pub row_shape: Vec<usize>,
    /// Row-major values, `(re, im)` interleaved when complex.
    pub data: Vec<f64>,
}

impl RawArray {
    /// Real feature matrix: `rows x cols` or `rows x 2*cols` when complex.
    pub fn into_matrix(self) -> Result<Array2<f64>> {
        let width = if self.complex { 2 * self.cols } else { self.cols };
        Array2::from_shape_vec((self.rows, width), self.data).map_err(|e| Error::Format {
            format: "array",
            msg: e.to_string(),
        })
    }
}

fn fmt_err(format: &'static str, msg: impl Into<String>) -> Error {
    Error::Format {
        format,
        msg: msg.into(),
    }
}

// ---------------------------------------------------------------- CSV

pub fn parse_csv(bytes: &[u8], complex: bool) -> Result<RawArray> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let mut data = Vec::new();
    let mut width = None;
    let mut rows = 0;
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| fmt_err("csv", format!("row {row}: {e}")))?;
        if record.len() == 1 && record.get(0) == Some("") {
            continue;
        }
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(fmt_err(
                    "csv",
                    format!("row {row}: expected {w} columns, found {}", record.len()),
                ))
            }
            _ => {}
        }
        for (col, field) in record.iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| fmt_err("csv", format!("row {row}, column {col}: cannot parse `{field}`")))?;
            data.push(v);
        }
        rows += 1;
    }
    let width = width.unwrap_or(0);
    if rows == 0 || width == 0 {
        return Err(Error::EmptyDataset);
    }
    if complex && width % 2 != 0 {
        return Err(fmt_err("csv", format!("complex rows need an even column count, got {width}")));
    }
    let cols = if complex { width / 2 } else { width };
    Ok(RawArray {
        rows,
        cols,
        complex,
        row_shape: vec![cols],
        data,
    })
}

pub fn write_csv(path: &Path, points: ArrayView2<f64>) -> Result<()> {
    let mut out = String::with_capacity(points.len() * 12);
    for row in points.rows() {
        let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

// ---------------------------------------------------------------- f32le

pub fn parse_f32le(bytes: &[u8]) -> Result<RawArray> {
    if bytes.len() < F32LE_HEADER_LEN {
        return Err(fmt_err("f32le", "truncated header"));
    }
    if &bytes[..4] != F32LE_MAGIC {
        return Err(fmt_err("f32le", "bad magic (expected DSIM)"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != F32LE_VERSION {
        return Err(fmt_err("f32le", format!("unsupported version {version}")));
    }
    let complex = match bytes[8] {
        0 => false,
        1 => true,
        f => return Err(fmt_err("f32le", format!("bad complex flag {f}"))),
    };
    let rows = u64::from_le_bytes(bytes[9..17].try_into().unwrap()) as usize;
    let cols = u64::from_le_bytes(bytes[17..25].try_into().unwrap()) as usize;
    if rows == 0 || cols == 0 {
        return Err(Error::EmptyDataset);
    }
    let scalars = rows
        .checked_mul(cols)
        .and_then(|v| v.checked_mul(if complex { 2 } else { 1 }))
        .ok_or_else(|| fmt_err("f32le", "shape overflow"))?;
    let payload = &bytes[F32LE_HEADER_LEN..];
    if payload.len() != scalars * 4 {
        return Err(fmt_err(
            "f32le",
            format!("payload has {} bytes, header implies {}", payload.len(), scalars * 4),
        ));
    }
    let data = payload
        .chunks_exact(4)
        .map(|c| f64::from(f32::from_le_bytes(c.try_into().unwrap())))
        .collect();
    Ok(RawArray {
        rows,
        cols,
        complex,
        row_shape: vec![cols],
        data,
    })
}

/// Writes `points` as f32le. With `complex`, columns are interleaved pairs
/// and the header records `ncols / 2` complex scalars.
pub fn encode_f32le(points: ArrayView2<f64>, complex: bool) -> Result<Vec<u8>> {
    let (rows, width) = points.dim();
    if complex && width % 2 != 0 {
        return Err(fmt_err("f32le", "complex payload needs an even column count"));
    }
    let cols = if complex { width / 2 } else { width };
    let mut out = Vec::with_capacity(F32LE_HEADER_LEN + 4 * points.len());
    out.extend_from_slice(F32LE_MAGIC);
    out.extend_from_slice(&F32LE_VERSION.to_le_bytes());
    out.push(u8::from(complex));
    out.extend_from_slice(&(rows as u64).to_le_bytes());
    out.extend_from_slice(&(cols as u64).to_le_bytes());
    for v in points.iter() {
        out.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    Ok(out)
}

pub fn write_f32le(path: &Path, points: ArrayView2<f64>, complex: bool) -> Result<()> {
    let bytes = encode_f32le(points, complex)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

// ---------------------------------------------------------------- NPY

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum NpyDtype {
    F4,
    F8,
    C8,
    C16,
}

impl NpyDtype {
    fn parse(descr: &str) -> Result<Self> {
        match descr {
            "<f4" => Ok(NpyDtype::F4),
            "<f8" => Ok(NpyDtype::F8),
            "<c8" => Ok(NpyDtype::C8),
            "<c16" => Ok(NpyDtype::C16),
            other => Err(fmt_err("npy", format!("unsupported dtype `{other}`"))),
        }
    }

    fn scalar_bytes(self) -> usize {
        match self {
            NpyDtype::F4 | NpyDtype::C8 => 4,
            NpyDtype::F8 | NpyDtype::C16 => 8,
        }
    }

    fn is_complex(self) -> bool {
        matches!(self, NpyDtype::C8 | NpyDtype::C16)
    }
}

/// Value of `'key':` in a Python dict literal, up to the next top-level comma.
fn dict_value<'a>(header: &'a str, key: &str) -> Result<&'a str> {
    let pat = format!("'{key}':");
    let start = header
        .find(&pat)
        .ok_or_else(|| fmt_err("npy", format!("header lacks `{key}`")))?
        + pat.len();
    let rest = header[start..].trim_start();
    let end = if rest.starts_with('(') {
        rest.find(')').map(|i| i + 1)
    } else {
        rest.find([',', '}'])
    }
    .ok_or_else(|| fmt_err("npy", format!("unterminated `{key}`")))?;
    Ok(rest[..end].trim())
}

pub fn parse_npy(bytes: &[u8]) -> Result<RawArray> {
    if bytes.len() < 10 || &bytes[..6] != NPY_MAGIC {
        return Err(fmt_err("npy", "bad magic"));
    }
    if bytes[6] != 1 || bytes[7] != 0 {
        return Err(fmt_err("npy", format!("unsupported version {}.{}", bytes[6], bytes[7])));
    }
    let hlen = u16::from_le_bytes([bytes[8], bytes[9]]) as usize;
    let header = bytes
        .get(10..10 + hlen)
        .ok_or_else(|| fmt_err("npy", "truncated header"))?;
    let header = std::str::from_utf8(header).map_err(|_| fmt_err("npy", "header not utf-8"))?;

    let descr = dict_value(header, "descr")?.trim_matches(|c| c == '\'' || c == '"');
    let dtype = NpyDtype::parse(descr)?;
    match dict_value(header, "fortran_order")? {
        "False" => {}
        "True" => return Err(fmt_err("npy", "Fortran-order arrays are not supported")),
        other => return Err(fmt_err("npy", format!("bad fortran_order `{other}`"))),
    }
    let shape_lit = dict_value(header, "shape")?;
    let shape: Vec<usize> = shape_lit
        .trim_matches(|c| c == '(' || c == ')')
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| fmt_err("npy", format!("bad shape `{shape_lit}`"))))
        .collect::<Result<_>>()?;
    if shape.is_empty() {
        return Err(fmt_err("npy", "scalar arrays are not supported"));
    }
    let rows = shape[0];
    let row_shape: Vec<usize> = if shape.len() == 1 { vec![1] } else { shape[1..].to_vec() };
    let cols: usize = row_shape.iter().product();
    if rows == 0 || cols == 0 {
        return Err(Error::EmptyDataset);
    }
    let per = if dtype.is_complex() { 2 } else { 1 };
    let scalars = rows * cols * per;
    let payload = &bytes[10 + hlen..];
    if payload.len() != scalars * dtype.scalar_bytes() {
        return Err(fmt_err(
            "npy",
            format!(
                "payload has {} bytes, shape implies {}",
                payload.len(),
                scalars * dtype.scalar_bytes()
            ),
        ));
    }
    let data: Vec<f64> = match dtype.scalar_bytes() {
        4 => payload
            .chunks_exact(4)
            .map(|c| f64::from(f32::from_le_bytes(c.try_into().unwrap())))
            .collect(),
        _ => payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect(),
    };
    Ok(RawArray {
        rows,
        cols,
        complex: dtype.is_complex(),
        row_shape,
        data,
    })
}

/// Encodes `points` as a C-order NPY 1.0 array (`<f8`, or `<c16` with
/// `complex`, in which case columns are interleaved pairs).
pub fn encode_npy(points: ArrayView2<f64>, complex: bool) -> Result<Vec<u8>> {
    let (rows, width) = points.dim();
    if complex && width % 2 != 0 {
        return Err(fmt_err("npy", "complex payload needs an even column count"));
    }
    let (descr, cols) = if complex { ("<c16", width / 2) } else { ("<f8", width) };
    let mut header =
        format!("{{'descr': '{descr}', 'fortran_order': False, 'shape': ({rows}, {cols}), }}");
    let unpadded = NPY_MAGIC.len() + 2 + 2 + header.len() + 1;
    header.push_str(&" ".repeat((64 - unpadded % 64) % 64));
    header.push('\n');
    let mut out = Vec::with_capacity(10 + header.len() + 8 * points.len());
    out.extend_from_slice(NPY_MAGIC);
    out.extend_from_slice(&[1, 0]);
    out.extend_from_slice(&(header.len() as u16).to_le_bytes());
    out.extend_from_slice(header.as_bytes());
    for v in points.iter() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn write_npy(path: &Path, points: ArrayView2<f64>, complex: bool) -> Result<()> {
    let bytes = encode_npy(points, complex)?;
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(path, e))
}

pub fn read_raw(path: &Path, format: FileFormat, complex: bool) -> Result<RawArray> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let raw = match format {
        FileFormat::Csv => parse_csv(&bytes, complex)?,
        FileFormat::F32le => parse_f32le(&bytes)?,
        FileFormat::Npy => parse_npy(&bytes)?,
    };
    if raw.complex != complex {
        return Err(fmt_err(
            "manifest",
            format!(
                "{}: manifest declares complex={complex} but file holds complex={}",
                path.display(),
                raw.complex
            ),
        ));
    }
    Ok(raw)
}

pub fn write_matrix(path: &Path, format: FileFormat, points: ArrayView2<f64>, complex: bool) -> Result<()> {
    match format {
        FileFormat::Csv => write_csv(path, points),
        FileFormat::F32le => write_f32le(path, points, complex),
        FileFormat::Npy => write_npy(path, points, complex),
    }
}
