//! Legacy VTK polydata (`DATASET POLYDATA`) with `POINTS`, `LINES`, and
//! optional `POINT_DATA` / `CELL_DATA` attribute sections. Binary payloads
//! are big-endian.

use byteorder::{BigEndian, ByteOrder};
use indexmap::IndexMap;
use log::warn;

use super::{FormatTag, IoError};
use crate::model::{DeclaredType, Field, Space, Tractogram};

pub const TITLE_KEY: &str = "vtk.title";
const DEFAULT_TITLE: &str = "trako tractogram";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VtkMode {
    Ascii,
    Binary,
}

impl VtkMode {
    fn format(self) -> FormatTag {
        match self {
            VtkMode::Ascii => FormatTag::VtkLegacyAscii,
            VtkMode::Binary => FormatTag::VtkLegacyBinary,
        }
    }
}

/// ASCII/BINARY flag from the third header line.
pub(crate) fn detect_mode(bytes: &[u8]) -> Option<VtkMode> {
    let mut lines = bytes.split(|&b| b == b'\n');
    lines.next()?;
    lines.next()?;
    let third = lines.next()?;
    match third.trim_ascii().to_ascii_uppercase().as_slice() {
        b"ASCII" => Some(VtkMode::Ascii),
        b"BINARY" => Some(VtkMode::Binary),
        _ => None,
    }
}

fn type_from_name(name: &str) -> Option<DeclaredType> {
    Some(match name.to_ascii_lowercase().as_str() {
        "float" => DeclaredType::Float32,
        "double" => DeclaredType::Float64,
        "char" => DeclaredType::Int8,
        "unsigned_char" => DeclaredType::UInt8,
        "short" => DeclaredType::Int16,
        "unsigned_short" => DeclaredType::UInt16,
        "int" => DeclaredType::Int32,
        "unsigned_int" => DeclaredType::UInt32,
        "long" | "vtktypeint64" | "vtkidtype" => DeclaredType::Int64,
        "unsigned_long" | "vtktypeuint64" => DeclaredType::UInt64,
        _ => return None,
    })
}

fn type_name(t: DeclaredType) -> &'static str {
    match t {
        DeclaredType::Float32 => "float",
        DeclaredType::Float64 => "double",
        DeclaredType::Int8 => "char",
        DeclaredType::UInt8 => "unsigned_char",
        DeclaredType::Int16 => "short",
        DeclaredType::UInt16 => "unsigned_short",
        DeclaredType::Int32 => "int",
        DeclaredType::UInt32 => "unsigned_int",
        DeclaredType::Int64 => "vtktypeint64",
        DeclaredType::UInt64 => "vtktypeuint64",
    }
}

fn encode_name(name: &str) -> String {
    let mut out = String::with_capacity(name.len());
    for ch in name.chars() {
        if ch == '%' || ch.is_whitespace() || ch.is_control() {
            let mut buf = [0u8; 4];
            for b in ch.encode_utf8(&mut buf).bytes() {
                out.push_str(&format!("%{b:02X}"));
            }
        } else {
            out.push(ch);
        }
    }
    if out.is_empty() {
        out.push_str("%00");
    }
    out
}

fn decode_name(raw: &str) -> String {
    let bytes = raw.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' && i + 2 < bytes.len() {
            let hex = std::str::from_utf8(&bytes[i + 1..i + 3]).ok();
            if let Some(b) = hex.and_then(|h| u8::from_str_radix(h, 16).ok()) {
                if b != 0 {
                    out.push(b);
                }
                i += 3;
                continue;
            }
        }
        out.push(bytes[i]);
        i += 1;
    }
    String::from_utf8_lossy(&out).into_owned()
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    mode: VtkMode,
}

impl<'a> Cursor<'a> {
    fn format(&self) -> FormatTag {
        self.mode.format()
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek_token(&mut self) -> Option<&'a str> {
        let save = self.pos;
        let t = self.token().map(|(t, _)| t);
        self.pos = save;
        t
    }

    fn token(&mut self) -> Option<(&'a str, usize)> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return None;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .map(|s| (s, start))
    }

    /// Next token; running out of input means the body is truncated.
    fn expect(&mut self, _what: &str) -> Result<(&'a str, usize), IoError> {
        self.token().ok_or(IoError::TruncatedBody {
            format: self.format(),
            offset: self.bytes.len(),
        })
    }

    fn expect_usize(&mut self, what: &str) -> Result<usize, IoError> {
        let (tok, at) = self.expect(what)?;
        tok.parse().map_err(|_| self.syntax(at, format!("expected {what}, found {tok:?}")))
    }

    fn syntax(&self, offset: usize, reason: impl Into<String>) -> IoError {
        IoError::Syntax {
            format: self.format(),
            offset,
            reason: reason.into(),
        }
    }

    /// Rest of the current line, consuming its newline.
    fn line(&mut self) -> &'a str {
        let start = self.pos;
        let end = self.bytes[start..]
            .iter()
            .position(|&b| b == b'\n')
            .map_or(self.bytes.len(), |p| start + p);
        self.pos = (end + 1).min(self.bytes.len());
        std::str::from_utf8(&self.bytes[start..end])
            .unwrap_or("")
            .trim_end_matches('\r')
    }

    fn values(&mut self, n: usize, ty: DeclaredType) -> Result<Vec<f64>, IoError> {
        match self.mode {
            VtkMode::Ascii => {
                let mut out = Vec::with_capacity(n);
                for _ in 0..n {
                    let (tok, at) = self.expect("value")?;
                    let v = match ty {
                        DeclaredType::Float32 => tok.parse::<f32>().map(f64::from).ok(),
                        DeclaredType::Float64 => tok.parse::<f64>().ok(),
                        _ => tok
                            .parse::<i64>()
                            .ok()
                            .map(|v| v as f64)
                            .or_else(|| tok.parse::<u64>().ok().map(|v| v as f64)),
                    };
                    out.push(v.ok_or_else(|| {
                        self.syntax(at, format!("cannot parse {tok:?} as {}", type_name(ty)))
                    })?);
                }
                Ok(out)
            }
            VtkMode::Binary => {
                // payload starts right after the keyword line
                self.line();
                let size = ty.byte_size();
                let len = n.checked_mul(size).ok_or_else(|| self.syntax(self.pos, "size overflow"))?;
                if self.pos + len > self.bytes.len() {
                    return Err(IoError::TruncatedBody {
                        format: self.format(),
                        offset: self.bytes.len(),
                    });
                }
                let raw = &self.bytes[self.pos..self.pos + len];
                self.pos += len;
                let out = raw
                    .chunks_exact(size)
                    .map(|c| match ty {
                        DeclaredType::Float32 => BigEndian::read_f32(c) as f64,
                        DeclaredType::Float64 => BigEndian::read_f64(c),
                        DeclaredType::Int8 => c[0] as i8 as f64,
                        DeclaredType::UInt8 => c[0] as f64,
                        DeclaredType::Int16 => BigEndian::read_i16(c) as f64,
                        DeclaredType::UInt16 => BigEndian::read_u16(c) as f64,
                        DeclaredType::Int32 => BigEndian::read_i32(c) as f64,
                        DeclaredType::UInt32 => BigEndian::read_u32(c) as f64,
                        DeclaredType::Int64 => BigEndian::read_i64(c) as f64,
                        DeclaredType::UInt64 => BigEndian::read_u64(c) as f64,
                    })
                    .collect();
                Ok(out)
            }
        }
    }

    fn indices(&mut self, n: usize, ty: DeclaredType, at: usize) -> Result<Vec<usize>, IoError> {
        let vals = self.values(n, ty)?;
        vals.into_iter()
            .map(|v| {
                if v >= 0.0 && v.fract() == 0.0 {
                    Ok(v as usize)
                } else {
                    Err(self.syntax(at, format!("invalid index {v}")))
                }
            })
            .collect()
    }

    fn data_type(&mut self) -> Result<(DeclaredType, &'a str, usize), IoError> {
        let (tok, at) = self.expect("data type")?;
        let ty = type_from_name(tok).ok_or_else(|| IoError::UnsupportedDatatype {
            format: self.format(),
            offset: at,
            datatype: tok.to_string(),
        })?;
        Ok((ty, tok, at))
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Point,
    Cell,
}

/// Connectivity as flat ids plus per-line start offsets.
struct Lines {
    conn: Vec<usize>,
    starts: Vec<usize>,
}

fn read_lines(c: &mut Cursor, at: usize) -> Result<Lines, IoError> {
    let first = c.expect_usize("line count")?;
    let second = c.expect_usize("connectivity size")?;
    if c.peek_token() == Some("OFFSETS") {
        // VTK 5.1 layout: OFFSETS then CONNECTIVITY arrays
        c.token();
        let (ty, _, tat) = c.data_type()?;
        let starts = c.indices(first, ty, tat)?;
        let (kw, kat) = c.expect("CONNECTIVITY")?;
        if kw != "CONNECTIVITY" {
            return Err(c.syntax(kat, format!("expected CONNECTIVITY, found {kw:?}")));
        }
        let (ty, _, tat) = c.data_type()?;
        let conn = c.indices(second, ty, tat)?;
        if starts.first().copied().unwrap_or(0) != 0
            || starts.last().copied().unwrap_or(0) != conn.len()
            || starts.windows(2).any(|w| w[1] < w[0])
        {
            return Err(c.syntax(at, "inconsistent LINES offsets"));
        }
        let starts = if starts.is_empty() { vec![0] } else { starts };
        return Ok(Lines { conn, starts });
    }
    let raw = c.indices(second, DeclaredType::Int32, at)?;
    let mut conn = Vec::with_capacity(raw.len().saturating_sub(first));
    let mut starts = Vec::with_capacity(first + 1);
    starts.push(0);
    let mut i = 0;
    for _ in 0..first {
        let n = *raw
            .get(i)
            .ok_or_else(|| c.syntax(at, "LINES size too small for line count"))?;
        let ids = raw
            .get(i + 1..i + 1 + n)
            .ok_or_else(|| c.syntax(at, "LINES size too small for line lengths"))?;
        conn.extend_from_slice(ids);
        starts.push(conn.len());
        i += 1 + n;
    }
    if i != raw.len() {
        return Err(c.syntax(at, "LINES size does not match its contents"));
    }
    Ok(Lines { conn, starts })
}

pub fn read_vtk(bytes: &[u8]) -> Result<Tractogram, IoError> {
    if !bytes.starts_with(b"# vtk DataFile") {
        return Err(IoError::BadMagic {
            format: FormatTag::VtkLegacyAscii,
        });
    }
    let mode = detect_mode(bytes).ok_or_else(|| IoError::MalformedHeader {
        format: FormatTag::VtkLegacyAscii,
        offset: 0,
        reason: "third line must be ASCII or BINARY".into(),
    })?;
    let mut c = Cursor {
        bytes,
        pos: 0,
        mode,
    };
    c.line();
    let title = c.line().to_string();
    c.line();

    let (kw, at) = c.expect("DATASET")?;
    if !kw.eq_ignore_ascii_case("DATASET") {
        return Err(c.syntax(at, format!("expected DATASET, found {kw:?}")));
    }
    let (ds, at) = c.expect("dataset type")?;
    if !ds.eq_ignore_ascii_case("POLYDATA") {
        return Err(IoError::UnsupportedDataset {
            dataset: ds.to_string(),
            offset: at,
        });
    }

    let mut points: Option<Vec<[f32; 3]>> = None;
    let mut lines: Option<Lines> = None;
    let mut point_fields: IndexMap<String, Field> = IndexMap::new();
    let mut cell_fields: IndexMap<String, Field> = IndexMap::new();
    let mut section = Section::None;
    let mut section_count = 0usize;

    while let Some((kw, at)) = c.token() {
        let upper = kw.to_ascii_uppercase();
        match upper.as_str() {
            "POINTS" => {
                let n = c.expect_usize("point count")?;
                let (tok, tat) = c.expect("point type")?;
                let ty = match type_from_name(tok) {
                    Some(t @ (DeclaredType::Float32 | DeclaredType::Float64)) => t,
                    _ => {
                        return Err(IoError::NonFloatPoints {
                            datatype: tok.to_string(),
                            offset: tat,
                        })
                    }
                };
                if ty == DeclaredType::Float64 {
                    warn!("VTK: double POINTS are narrowed to float32");
                }
                let data_at = c.pos;
                let vals = c.values(n * 3, ty)?;
                let mut pts = Vec::with_capacity(n);
                for (i, p) in vals.chunks_exact(3).enumerate() {
                    let p = [p[0] as f32, p[1] as f32, p[2] as f32];
                    if !p.iter().all(|v| v.is_finite()) {
                        return Err(IoError::NonFiniteCoordinate {
                            format: c.format(),
                            offset: data_at + i,
                        });
                    }
                    pts.push(p);
                }
                points = Some(pts);
            }
            "LINES" => lines = Some(read_lines(&mut c, at)?),
            "VERTICES" | "POLYGONS" | "TRIANGLE_STRIPS" => {
                let m = c.expect_usize("cell count")?;
                let size = c.expect_usize("cell size")?;
                if m > 0 {
                    return Err(IoError::UnsupportedSection {
                        section: kw.to_string(),
                        offset: at,
                    });
                }
                if c.peek_token() == Some("OFFSETS") {
                    c.token();
                    let (ty, _, _) = c.data_type()?;
                    c.values(m, ty)?;
                    c.expect("CONNECTIVITY")?;
                    let (ty, _, _) = c.data_type()?;
                    c.values(size, ty)?;
                } else {
                    c.values(size, DeclaredType::Int32)?;
                }
            }
            "POINT_DATA" | "CELL_DATA" => {
                section = if upper == "POINT_DATA" {
                    Section::Point
                } else {
                    Section::Cell
                };
                section_count = c.expect_usize("attribute count")?;
            }
            "FIELD" => {
                c.expect("field name")?;
                let k = c.expect_usize("array count")?;
                for _ in 0..k {
                    let (name, nat) = c.expect("array name")?;
                    let dims = c.expect_usize("component count")?;
                    let tuples = c.expect_usize("tuple count")?;
                    let (ty, _, _) = c.data_type()?;
                    let values = c.values(dims * tuples, ty)?;
                    match section {
                        Section::None => {
                            warn!("VTK: ignoring dataset-level field {name:?}");
                        }
                        _ => {
                            if tuples != section_count {
                                return Err(c.syntax(
                                    nat,
                                    format!("array {name:?} has {tuples} tuples, section has {section_count}"),
                                ));
                            }
                            if dims == 0 {
                                return Err(c.syntax(nat, "array with zero components"));
                            }
                            let target = if section == Section::Point {
                                &mut point_fields
                            } else {
                                &mut cell_fields
                            };
                            target.insert(decode_name(name), Field::new(dims, values, ty));
                        }
                    }
                }
            }
            "SCALARS" | "VECTORS" | "NORMALS" | "TENSORS" | "TEXTURE_COORDINATES" => {
                if section == Section::None {
                    return Err(c.syntax(at, format!("{kw} outside POINT_DATA/CELL_DATA")));
                }
                let (name, _) = c.expect("attribute name")?;
                let name = decode_name(name);
                let dims = match upper.as_str() {
                    "SCALARS" => 0,
                    "VECTORS" | "NORMALS" => 3,
                    "TENSORS" => 9,
                    _ => c.expect_usize("texture dimension")?,
                };
                let (ty, _, _) = c.data_type()?;
                let dims = if upper == "SCALARS" {
                    let dims = match c.peek_token() {
                        Some(t) if t.parse::<usize>().is_ok() => c.expect_usize("component count")?,
                        _ => 1,
                    };
                    if c.peek_token().is_some_and(|t| t.eq_ignore_ascii_case("LOOKUP_TABLE")) {
                        c.token();
                        c.expect("lookup table name")?;
                    }
                    dims
                } else {
                    dims
                };
                let values = c.values(dims * section_count, ty)?;
                let target = if section == Section::Point {
                    &mut point_fields
                } else {
                    &mut cell_fields
                };
                target.insert(name, Field::new(dims, values, ty));
            }
            "METADATA" => {
                // INFORMATION blocks run until an empty line
                c.line();
                loop {
                    if c.pos >= c.bytes.len() {
                        break;
                    }
                    if c.line().trim().is_empty() {
                        break;
                    }
                }
            }
            _ => {
                return Err(IoError::UnsupportedSection {
                    section: kw.to_string(),
                    offset: at,
                })
            }
        }
    }

    let points = points.unwrap_or_default();
    let lines = lines.unwrap_or(Lines {
        conn: Vec::new(),
        starts: vec![0],
    });
    if let Some(&bad) = lines.conn.iter().find(|&&i| i >= points.len()) {
        return Err(c.syntax(0, format!("LINES references point {bad} of {}", points.len())));
    }
    let n_lines = lines.starts.len() - 1;
    for (name, f) in &point_fields {
        if f.element_count() != points.len() {
            return Err(c.syntax(0, format!("POINT_DATA field {name:?} does not cover all points")));
        }
    }
    for (name, f) in &cell_fields {
        if f.element_count() != n_lines {
            return Err(c.syntax(0, format!("CELL_DATA field {name:?} does not cover all lines")));
        }
    }

    let mut t = Tractogram::new();
    t.space = Space::Rasmm;
    t.metadata.insert(TITLE_KEY.into(), title);
    let consecutive =
        lines.conn.len() == points.len() && lines.conn.iter().enumerate().all(|(k, &i)| i == k);
    let has_empty = lines.starts.windows(2).any(|w| w[0] == w[1]);
    if consecutive && !has_empty {
        t.vertices = points;
        t.offsets = lines.starts;
        t.vertex_scalars = point_fields;
        t.fiber_properties = cell_fields;
        return Ok(t);
    }

    warn!("VTK: LINES do not reference points in consecutive runs; remapping");
    let kept: Vec<usize> = (0..n_lines)
        .filter(|&l| lines.starts[l + 1] > lines.starts[l])
        .collect();
    for &l in &kept {
        for &i in &lines.conn[lines.starts[l]..lines.starts[l + 1]] {
            t.vertices.push(points[i]);
        }
        t.offsets.push(t.vertices.len());
    }
    for (name, f) in point_fields {
        let mut values = Vec::with_capacity(t.vertices.len() * f.dims);
        for &l in &kept {
            for &i in &lines.conn[lines.starts[l]..lines.starts[l + 1]] {
                values.extend_from_slice(f.element(i));
            }
        }
        t.vertex_scalars
            .insert(name, Field::new(f.dims, values, f.declared_type));
    }
    for (name, f) in cell_fields {
        let mut values = Vec::with_capacity(kept.len() * f.dims);
        for &l in &kept {
            values.extend_from_slice(f.element(l));
        }
        t.fiber_properties
            .insert(name, Field::new(f.dims, values, f.declared_type));
    }
    Ok(t)
}

fn format_value(v: f64, ty: DeclaredType) -> String {
    match ty {
        DeclaredType::Float32 => {
            let v = v as f32;
            let a = v.abs();
            if a == 0.0 || (1e-5..1e16).contains(&a) {
                format!("{v}")
            } else {
                format!("{v:e}")
            }
        }
        DeclaredType::Float64 => {
            let a = v.abs();
            if a == 0.0 || (1e-5..1e16).contains(&a) {
                format!("{v}")
            } else {
                format!("{v:e}")
            }
        }
        DeclaredType::UInt64 => format!("{}", v as u64),
        _ => format!("{}", ty.cast(v) as i64),
    }
}

fn push_binary(out: &mut Vec<u8>, v: f64, ty: DeclaredType) {
    match ty {
        DeclaredType::Float32 => out.extend_from_slice(&(v as f32).to_be_bytes()),
        DeclaredType::Float64 => out.extend_from_slice(&v.to_be_bytes()),
        DeclaredType::Int8 => out.push(v as i8 as u8),
        DeclaredType::UInt8 => out.push(v as u8),
        DeclaredType::Int16 => out.extend_from_slice(&(v as i16).to_be_bytes()),
        DeclaredType::UInt16 => out.extend_from_slice(&(v as u16).to_be_bytes()),
        DeclaredType::Int32 => out.extend_from_slice(&(v as i32).to_be_bytes()),
        DeclaredType::UInt32 => out.extend_from_slice(&(v as u32).to_be_bytes()),
        DeclaredType::Int64 => out.extend_from_slice(&(v as i64).to_be_bytes()),
        DeclaredType::UInt64 => out.extend_from_slice(&(v as u64).to_be_bytes()),
    }
}

fn write_values(out: &mut Vec<u8>, values: &[f64], per_line: usize, ty: DeclaredType, mode: VtkMode) {
    match mode {
        VtkMode::Ascii => {
            for chunk in values.chunks(per_line.max(1)) {
                let line: Vec<String> = chunk.iter().map(|&v| format_value(v, ty)).collect();
                out.extend_from_slice(line.join(" ").as_bytes());
                out.push(b'\n');
            }
        }
        VtkMode::Binary => {
            for &v in values {
                push_binary(out, v, ty);
            }
            out.push(b'\n');
        }
    }
}

fn write_fields(out: &mut Vec<u8>, fields: &IndexMap<String, Field>, count: usize, mode: VtkMode) {
    out.extend_from_slice(format!("FIELD FieldData {}\n", fields.len()).as_bytes());
    for (name, f) in fields {
        out.extend_from_slice(
            format!(
                "{} {} {} {}\n",
                encode_name(name),
                f.dims,
                count,
                type_name(f.declared_type)
            )
            .as_bytes(),
        );
        write_values(out, &f.values, f.dims, f.declared_type, mode);
    }
}

/// Serialize as legacy VTK 3.0 polydata. Attributes are written as FIELD
/// arrays in their declared types.
pub fn write_vtk(t: &Tractogram, mode: VtkMode) -> Vec<u8> {
    let title: String = t
        .metadata
        .get(TITLE_KEY)
        .map_or(DEFAULT_TITLE, |s| s.as_str())
        .chars()
        .filter(|c| *c != '\n' && *c != '\r')
        .take(255)
        .collect();
    let mut out = Vec::with_capacity(t.vertex_count() * 16 + 256);
    let flag = match mode {
        VtkMode::Ascii => "ASCII",
        VtkMode::Binary => "BINARY",
    };
    out.extend_from_slice(
        format!("# vtk DataFile Version 3.0\n{title}\n{flag}\nDATASET POLYDATA\n").as_bytes(),
    );
    out.extend_from_slice(format!("POINTS {} float\n", t.vertex_count()).as_bytes());
    let coords: Vec<f64> = t.flat_vertices().iter().map(|&v| v as f64).collect();
    write_values(&mut out, &coords, 3, DeclaredType::Float32, mode);

    let ns = t.streamline_count();
    out.extend_from_slice(format!("LINES {} {}\n", ns, ns + t.vertex_count()).as_bytes());
    match mode {
        VtkMode::Ascii => {
            for s in 0..ns {
                let r = t.streamline_range(s);
                let mut line = r.len().to_string();
                for i in r {
                    line.push(' ');
                    line.push_str(&i.to_string());
                }
                line.push('\n');
                out.extend_from_slice(line.as_bytes());
            }
        }
        VtkMode::Binary => {
            for s in 0..ns {
                let r = t.streamline_range(s);
                out.extend_from_slice(&(r.len() as i32).to_be_bytes());
                for i in r {
                    out.extend_from_slice(&(i as i32).to_be_bytes());
                }
            }
            out.push(b'\n');
        }
    }
    if !t.vertex_scalars.is_empty() && t.vertex_count() > 0 {
        out.extend_from_slice(format!("POINT_DATA {}\n", t.vertex_count()).as_bytes());
        write_fields(&mut out, &t.vertex_scalars, t.vertex_count(), mode);
    }
    if !t.fiber_properties.is_empty() && ns > 0 {
        out.extend_from_slice(format!("CELL_DATA {ns}\n").as_bytes());
        write_fields(&mut out, &t.fiber_properties, ns, mode);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_ascii() {
        let src = b"# vtk DataFile Version 3.0\nx\nASCII\nDATASET POLYDATA\nPOINTS 2 float\n0 0 0 1 1 1\nLINES 1 3\n2 0 1\n";
        let t = read_vtk(src).unwrap();
        assert_eq!(t.offsets, vec![0, 2]);
        assert_eq!(t.vertices[1], [1.0, 1.0, 1.0]);
        assert_eq!(t.metadata[TITLE_KEY], "x");
    }

    #[test]
    fn cell_field_with_ten_components() {
        let mut src = String::from("# vtk DataFile Version 3.0\nx\nASCII\nDATASET POLYDATA\nPOINTS 5 float\n");
        for i in 0..5 {
            src.push_str(&format!("{i} 0 0\n"));
        }
        src.push_str("LINES 5 10\n");
        for i in 0..5 {
            src.push_str(&format!("1 {i}\n"));
        }
        src.push_str("CELL_DATA 5\nFIELD FieldData 1\nEmbeddingCoordinate 10 5 float\n");
        for i in 0..50 {
            src.push_str(&format!("{}.5 ", i));
        }
        let t = read_vtk(src.as_bytes()).unwrap();
        let f = &t.fiber_properties["EmbeddingCoordinate"];
        assert_eq!(f.dims, 10);
        assert_eq!(f.element_count(), 5);
        assert!(t.validate().is_empty());
    }

    #[test]
    fn scalars_and_tensors_sections() {
        let src = "# vtk DataFile Version 3.0\nx\nASCII\nDATASET POLYDATA\nPOINTS 2 float\n0 0 0 1 1 1\nLINES 1 3\n2 0 1\n\
            POINT_DATA 2\nSCALARS FA float\nLOOKUP_TABLE default\n0.1 0.2\n\
            SCALARS rgb unsigned_char 3\nLOOKUP_TABLE default\n1 2 3 4 5 6\n\
            TENSORS tensor double\n1 2 3 4 5 6 7 8 9\n9 8 7 6 5 4 3 2 1\n\
            CELL_DATA 1\nVECTORS dir float\n1 0 0\n";
        let t = read_vtk(src.as_bytes()).unwrap();
        assert_eq!(t.vertex_scalars["FA"].dims, 1);
        assert_eq!(t.vertex_scalars["rgb"].dims, 3);
        assert_eq!(t.vertex_scalars["rgb"].declared_type, DeclaredType::UInt8);
        assert_eq!(t.vertex_scalars["tensor"].dims, 9);
        assert_eq!(t.fiber_properties["dir"].values, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn vtk51_offsets_connectivity() {
        let src = "# vtk DataFile Version 5.1\nx\nASCII\nDATASET POLYDATA\nPOINTS 3 float\n0 0 0 1 1 1 2 2 2\n\
            LINES 3 3\nOFFSETS vtktypeint64\n0 2 3\nCONNECTIVITY vtktypeint64\n0 1 2\n";
        let t = read_vtk(src.as_bytes()).unwrap();
        assert_eq!(t.offsets, vec![0, 2, 3]);
    }

    #[test]
    fn remaps_non_consecutive_lines() {
        let src = "# vtk DataFile Version 3.0\nx\nASCII\nDATASET POLYDATA\nPOINTS 3 float\n0 0 0 1 1 1 2 2 2\n\
            LINES 2 6\n2 2 0\n2 0 1\nPOINT_DATA 3\nFIELD FieldData 1\nid 1 3 int\n10 11 12\n";
        let t = read_vtk(src.as_bytes()).unwrap();
        assert_eq!(t.offsets, vec![0, 2, 4]);
        assert_eq!(t.vertices[0], [2.0, 2.0, 2.0]);
        assert_eq!(t.vertex_scalars["id"].values, vec![12.0, 10.0, 10.0, 11.0]);
        assert!(t.validate().is_empty());
    }

    #[test]
    fn errors() {
        let not_poly = b"# vtk DataFile Version 3.0\nx\nASCII\nDATASET UNSTRUCTURED_GRID\n";
        assert!(matches!(read_vtk(not_poly), Err(IoError::UnsupportedDataset { .. })));
        let int_points = b"# vtk DataFile Version 3.0\nx\nASCII\nDATASET POLYDATA\nPOINTS 1 int\n0 0 0\n";
        assert!(matches!(read_vtk(int_points), Err(IoError::NonFloatPoints { .. })));
        let polys = b"# vtk DataFile Version 3.0\nx\nASCII\nDATASET POLYDATA\nPOINTS 3 float\n0 0 0 1 1 1 2 2 2\nPOLYGONS 1 4\n3 0 1 2\n";
        assert!(matches!(read_vtk(polys), Err(IoError::UnsupportedSection { .. })));
        let trunc = b"# vtk DataFile Version 3.0\nx\nASCII\nDATASET POLYDATA\nPOINTS 3 float\n0 0 0 1";
        assert!(matches!(read_vtk(trunc), Err(IoError::TruncatedBody { .. })));
        let mut bin = b"# vtk DataFile Version 3.0\nx\nBINARY\nDATASET POLYDATA\nPOINTS 3 float\n".to_vec();
        bin.extend_from_slice(&[0u8; 20]);
        assert!(matches!(read_vtk(&bin), Err(IoError::TruncatedBody { .. })));
        let bad_ref = b"# vtk DataFile Version 3.0\nx\nASCII\nDATASET POLYDATA\nPOINTS 1 float\n0 0 0\nLINES 1 3\n2 0 5\n";
        assert!(matches!(read_vtk(bad_ref), Err(IoError::Syntax { .. })));
    }

    #[test]
    fn binary_is_big_endian() {
        let t = Tractogram::from_streamlines([vec![[1.0, 2.0, 3.0]]]);
        let bytes = write_vtk(&t, VtkMode::Binary);
        let header = b"# vtk DataFile Version 3.0\ntrako tractogram\nBINARY\nDATASET POLYDATA\nPOINTS 1 float\n";
        assert!(bytes.starts_with(header));
        assert_eq!(&bytes[header.len()..header.len() + 4], &1.0f32.to_be_bytes());
    }

    #[test]
    fn names_with_spaces_round_trip() {
        assert_eq!(encode_name("mean FA%"), "mean%20FA%25");
        assert_eq!(decode_name("mean%20FA%25"), "mean FA%");
        let mut t = Tractogram::from_streamlines([vec![[0.0; 3], [1.0; 3]]]);
        t.space = Space::Rasmm;
        t.metadata.insert(TITLE_KEY.into(), "title".into());
        t.vertex_scalars
            .insert("mean FA".into(), Field::new(1, vec![0.5, 0.75], DeclaredType::Float64));
        for mode in [VtkMode::Ascii, VtkMode::Binary] {
            assert_eq!(read_vtk(&write_vtk(&t, mode)).unwrap(), t);
        }
    }

    #[test]
    fn extreme_values_ascii() {
        let mut t = Tractogram::from_streamlines([vec![[1e-30, -3.4e38, 0.1]]]);
        t.space = Space::Rasmm;
        t.metadata.insert(TITLE_KEY.into(), "t".into());
        t.vertex_scalars
            .insert("x".into(), Field::new(1, vec![1e-300], DeclaredType::Float64));
        t.fiber_properties
            .insert("id".into(), Field::new(1, vec![-7.0], DeclaredType::Int64));
        assert_eq!(read_vtk(&write_vtk(&t, VtkMode::Ascii)).unwrap(), t);
    }
}
