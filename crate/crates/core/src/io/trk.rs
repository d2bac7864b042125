//! TrackVis `.trk` files: a fixed 1000-byte header followed by streamline
//! records of `int32 n`, `n * (3 + n_scalars)` floats and `n_properties`
//! floats.

use byteorder::{BigEndian, ByteOrder, LittleEndian};
use indexmap::IndexMap;
use log::warn;

use super::{FormatTag, IoError};
use crate::model::{DeclaredType, Field, Space, Tractogram};

pub const HEADER_SIZE: usize = 1000;
const NAME_SLOTS: usize = 10;
const NAME_LEN: usize = 20;

const OFF_DIM: usize = 6;
const OFF_VOXEL_SIZE: usize = 12;
const OFF_ORIGIN: usize = 24;
const OFF_N_SCALARS: usize = 36;
const OFF_SCALAR_NAME: usize = 38;
const OFF_N_PROPERTIES: usize = 238;
const OFF_PROPERTY_NAME: usize = 240;
const OFF_VOX_TO_RAS: usize = 440;
const OFF_VOXEL_ORDER: usize = 948;
const OFF_IMAGE_ORIENTATION: usize = 956;
const OFF_INVERT_X: usize = 982;
const OFF_N_COUNT: usize = 988;
const OFF_VERSION: usize = 992;
const OFF_HDR_SIZE: usize = 996;

/// Metadata keys carrying the TRK header fields.
pub const TRK_HEADER_KEYS: [&str; 12] = [
    "trk.dim",
    "trk.voxel_size",
    "trk.origin",
    "trk.vox_to_ras",
    "trk.voxel_order",
    "trk.image_orientation_patient",
    "trk.invert_x",
    "trk.invert_y",
    "trk.invert_z",
    "trk.swap_xy",
    "trk.swap_yz",
    "trk.swap_zx",
];
const FLAG_KEYS: [&str; 6] = [
    "trk.invert_x",
    "trk.invert_y",
    "trk.invert_z",
    "trk.swap_xy",
    "trk.swap_yz",
    "trk.swap_zx",
];

#[derive(Clone, Copy)]
enum Endian {
    Little,
    Big,
}

struct Reader<'a> {
    bytes: &'a [u8],
    endian: Endian,
}

impl Reader<'_> {
    fn i16(&self, at: usize) -> i16 {
        match self.endian {
            Endian::Little => LittleEndian::read_i16(&self.bytes[at..]),
            Endian::Big => BigEndian::read_i16(&self.bytes[at..]),
        }
    }
    fn i32(&self, at: usize) -> i32 {
        match self.endian {
            Endian::Little => LittleEndian::read_i32(&self.bytes[at..]),
            Endian::Big => BigEndian::read_i32(&self.bytes[at..]),
        }
    }
    fn f32(&self, at: usize) -> f32 {
        match self.endian {
            Endian::Little => LittleEndian::read_f32(&self.bytes[at..]),
            Endian::Big => BigEndian::read_f32(&self.bytes[at..]),
        }
    }
    fn f32s(&self, at: usize, n: usize) -> Vec<f32> {
        (0..n).map(|i| self.f32(at + 4 * i)).collect()
    }
}

fn join<T: ToString>(values: impl IntoIterator<Item = T>) -> String {
    values
        .into_iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn c_string(raw: &[u8]) -> String {
    let end = raw.iter().position(|&b| b == 0).unwrap_or(raw.len());
    String::from_utf8_lossy(&raw[..end]).into_owned()
}

/// Split `total` components into named fields using the 10 name slots.
/// A slot whose name is NUL-terminated before byte 19 may carry a
/// component count in byte 19.
fn field_layout(slots: &[u8], total: usize, prefix: &str, at: usize) -> Result<Vec<(String, usize)>, IoError> {
    let mut out: Vec<(String, usize)> = Vec::new();
    let mut used = 0;
    for slot in 0..NAME_SLOTS {
        if used >= total {
            break;
        }
        let raw = &slots[slot * NAME_LEN..(slot + 1) * NAME_LEN];
        if raw.iter().all(|&b| b == 0) {
            break;
        }
        let nul = raw.iter().position(|&b| b == 0);
        let dims = match nul {
            Some(p) if p < NAME_LEN - 1 && raw[NAME_LEN - 1] != 0 => raw[NAME_LEN - 1] as usize,
            _ => 1,
        };
        if used + dims > total {
            return Err(IoError::MalformedHeader {
                format: FormatTag::Trk,
                offset: at + slot * NAME_LEN,
                reason: format!("name slot {slot} claims {dims} components, only {} left", total - used),
            });
        }
        let mut name = c_string(raw);
        if name.is_empty() {
            name = format!("{prefix}_{used}");
        }
        out.push((name, dims));
        used += dims;
    }
    for i in used..total {
        out.push((format!("{prefix}_{i}"), 1));
    }
    // keep names unique
    let mut seen = std::collections::HashSet::new();
    for (i, (name, _)) in out.iter_mut().enumerate() {
        if !seen.insert(name.clone()) {
            *name = format!("{name}_{i}");
            seen.insert(name.clone());
        }
    }
    Ok(out)
}

pub fn read_trk(bytes: &[u8]) -> Result<Tractogram, IoError> {
    if !bytes.starts_with(b"TRACK") {
        return Err(IoError::BadMagic {
            format: FormatTag::Trk,
        });
    }
    if bytes.len() < HEADER_SIZE {
        return Err(IoError::MalformedHeader {
            format: FormatTag::Trk,
            offset: bytes.len(),
            reason: "header shorter than 1000 bytes".into(),
        });
    }
    let le = LittleEndian::read_i32(&bytes[OFF_HDR_SIZE..]);
    let endian = if le == HEADER_SIZE as i32 {
        Endian::Little
    } else if BigEndian::read_i32(&bytes[OFF_HDR_SIZE..]) == HEADER_SIZE as i32 {
        Endian::Big
    } else {
        return Err(IoError::HeaderSizeMismatch(le));
    };
    let r = Reader { bytes, endian };

    let n_scalars = r.i16(OFF_N_SCALARS);
    let n_properties = r.i16(OFF_N_PROPERTIES);
    let n_count = r.i32(OFF_N_COUNT);
    if n_scalars < 0 || n_properties < 0 || n_count < 0 {
        return Err(IoError::MalformedHeader {
            format: FormatTag::Trk,
            offset: OFF_N_SCALARS,
            reason: "negative count in header".into(),
        });
    }
    let (ns, np, declared) = (n_scalars as usize, n_properties as usize, n_count as usize);
    let scalar_layout = field_layout(
        &bytes[OFF_SCALAR_NAME..OFF_SCALAR_NAME + NAME_SLOTS * NAME_LEN],
        ns,
        "scalar",
        OFF_SCALAR_NAME,
    )?;
    let property_layout = field_layout(
        &bytes[OFF_PROPERTY_NAME..OFF_PROPERTY_NAME + NAME_SLOTS * NAME_LEN],
        np,
        "property",
        OFF_PROPERTY_NAME,
    )?;

    let mut metadata = IndexMap::new();
    metadata.insert(
        "trk.dim".to_string(),
        join((0..3).map(|i| r.i16(OFF_DIM + 2 * i))),
    );
    metadata.insert("trk.voxel_size".into(), join(r.f32s(OFF_VOXEL_SIZE, 3)));
    metadata.insert("trk.origin".into(), join(r.f32s(OFF_ORIGIN, 3)));
    metadata.insert("trk.vox_to_ras".into(), join(r.f32s(OFF_VOX_TO_RAS, 16)));
    metadata.insert(
        "trk.voxel_order".into(),
        c_string(&bytes[OFF_VOXEL_ORDER..OFF_VOXEL_ORDER + 4]),
    );
    metadata.insert(
        "trk.image_orientation_patient".into(),
        join(r.f32s(OFF_IMAGE_ORIENTATION, 6)),
    );
    for (i, key) in FLAG_KEYS.iter().enumerate() {
        metadata.insert(key.to_string(), bytes[OFF_INVERT_X + i].to_string());
    }

    let mut t = Tractogram::new();
    t.space = Space::Voxmm;
    t.metadata = metadata;
    let mut scalar_values: Vec<Vec<f64>> = vec![Vec::new(); scalar_layout.len()];
    let mut property_values: Vec<Vec<f64>> = vec![Vec::new(); property_layout.len()];

    let mut pos = HEADER_SIZE;
    let mut found = 0usize;
    let mut skipped_empty = 0usize;
    while pos < bytes.len() {
        if declared > 0 && found == declared {
            return Err(IoError::CountMismatch {
                declared,
                found: found + 1,
                offset: pos,
            });
        }
        let truncated = IoError::TruncatedBody {
            format: FormatTag::Trk,
            offset: bytes.len(),
        };
        if pos + 4 > bytes.len() {
            return Err(truncated);
        }
        let n = r.i32(pos);
        if n < 0 {
            return Err(IoError::Syntax {
                format: FormatTag::Trk,
                offset: pos,
                reason: format!("negative point count {n}"),
            });
        }
        let n = n as usize;
        let record = 4 + 4 * (n * (3 + ns) + np);
        if pos + record > bytes.len() {
            return Err(truncated);
        }
        let mut p = pos + 4;
        for _ in 0..n {
            let xyz = [r.f32(p), r.f32(p + 4), r.f32(p + 8)];
            if !xyz.iter().all(|c| c.is_finite()) {
                return Err(IoError::NonFiniteCoordinate {
                    format: FormatTag::Trk,
                    offset: p,
                });
            }
            p += 12;
            t.vertices.push(xyz);
            for (f, &(_, dims)) in scalar_layout.iter().enumerate() {
                for _ in 0..dims {
                    scalar_values[f].push(r.f32(p) as f64);
                    p += 4;
                }
            }
        }
        if n == 0 {
            skipped_empty += 1;
        } else {
            for (f, &(_, dims)) in property_layout.iter().enumerate() {
                for _ in 0..dims {
                    property_values[f].push(r.f32(p) as f64);
                    p += 4;
                }
            }
            t.offsets.push(t.vertices.len());
        }
        found += 1;
        pos += record;
    }
    if declared > 0 && found != declared {
        return Err(IoError::CountMismatch {
            declared,
            found,
            offset: pos,
        });
    }
    if skipped_empty > 0 {
        warn!("TRK: skipped {skipped_empty} streamline(s) without points");
    }
    for ((name, dims), values) in scalar_layout.into_iter().zip(scalar_values) {
        t.vertex_scalars
            .insert(name, Field::new(dims, values, DeclaredType::Float32));
    }
    for ((name, dims), values) in property_layout.into_iter().zip(property_values) {
        t.fiber_properties
            .insert(name, Field::new(dims, values, DeclaredType::Float32));
    }
    Ok(t)
}

/// Fields whose values cannot be stored exactly as float32.
pub(crate) fn dropped_fields(t: &Tractogram) -> Vec<String> {
    t.vertex_scalars
        .iter()
        .chain(&t.fiber_properties)
        .filter(|(_, f)| f.values.iter().any(|&v| v as f32 as f64 != v))
        .map(|(n, _)| n.clone())
        .collect()
}

fn parse_list<T: std::str::FromStr + Copy>(t: &Tractogram, key: &str, default: &[T]) -> Vec<T> {
    let Some(s) = t.metadata.get(key) else {
        return default.to_vec();
    };
    let parsed: Option<Vec<T>> = s.split_whitespace().map(|v| v.parse().ok()).collect();
    match parsed {
        Some(v) if v.len() == default.len() => v,
        _ => {
            warn!("TRK: ignoring malformed {key} = {s:?}");
            default.to_vec()
        }
    }
}

fn write_names(header: &mut [u8], at: usize, fields: &IndexMap<String, Field>, kind: &str) {
    if fields.len() > NAME_SLOTS {
        warn!(
            "TRK: only {NAME_SLOTS} {kind} names fit the header; {} field(s) will be unnamed",
            fields.len() - NAME_SLOTS
        );
    }
    for (slot, (name, field)) in fields.iter().take(NAME_SLOTS).enumerate() {
        let raw = &mut header[at + slot * NAME_LEN..at + (slot + 1) * NAME_LEN];
        // room for a NUL and the component count when dims > 1
        let max = if field.dims > 1 { NAME_LEN - 2 } else { NAME_LEN };
        let mut name_bytes = name.as_bytes();
        if name_bytes.len() > max {
            warn!("TRK: truncating {kind} name {name:?} to {max} bytes");
            name_bytes = &name_bytes[..max];
        }
        raw[..name_bytes.len()].copy_from_slice(name_bytes);
        if field.dims > 1 {
            raw[NAME_LEN - 1] = field.dims.min(255) as u8;
        }
    }
}

/// Serialize as little-endian TRK version 2. Header fields come from the
/// `trk.*` metadata keys when present.
pub fn write_trk(t: &Tractogram) -> Vec<u8> {
    let lossy = dropped_fields(t);
    if !lossy.is_empty() {
        warn!("TRK stores float32 only; rounding {}", lossy.join(", "));
    }
    let ns: usize = t.vertex_scalars.values().map(|f| f.dims).sum();
    let np: usize = t.fiber_properties.values().map(|f| f.dims).sum();
    let mut h = vec![0u8; HEADER_SIZE];
    h[..6].copy_from_slice(b"TRACK\0");
    for (i, d) in parse_list::<i16>(t, "trk.dim", &[1, 1, 1]).into_iter().enumerate() {
        LittleEndian::write_i16(&mut h[OFF_DIM + 2 * i..], d);
    }
    LittleEndian::write_f32_into(
        &parse_list::<f32>(t, "trk.voxel_size", &[1.0; 3]),
        &mut h[OFF_VOXEL_SIZE..OFF_VOXEL_SIZE + 12],
    );
    LittleEndian::write_f32_into(
        &parse_list::<f32>(t, "trk.origin", &[0.0; 3]),
        &mut h[OFF_ORIGIN..OFF_ORIGIN + 12],
    );
    LittleEndian::write_i16(&mut h[OFF_N_SCALARS..], ns as i16);
    write_names(&mut h, OFF_SCALAR_NAME, &t.vertex_scalars, "scalar");
    LittleEndian::write_i16(&mut h[OFF_N_PROPERTIES..], np as i16);
    write_names(&mut h, OFF_PROPERTY_NAME, &t.fiber_properties, "property");
    let identity = [
        1.0f32, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0,
    ];
    LittleEndian::write_f32_into(
        &parse_list::<f32>(t, "trk.vox_to_ras", &identity),
        &mut h[OFF_VOX_TO_RAS..OFF_VOX_TO_RAS + 64],
    );
    let order = t
        .metadata
        .get("trk.voxel_order")
        .map_or("RAS", |s| s.as_str());
    let order = &order.as_bytes()[..order.len().min(4)];
    h[OFF_VOXEL_ORDER..OFF_VOXEL_ORDER + order.len()].copy_from_slice(order);
    LittleEndian::write_f32_into(
        &parse_list::<f32>(t, "trk.image_orientation_patient", &[0.0; 6]),
        &mut h[OFF_IMAGE_ORIENTATION..OFF_IMAGE_ORIENTATION + 24],
    );
    for (i, key) in FLAG_KEYS.iter().enumerate() {
        h[OFF_INVERT_X + i] = parse_list::<u8>(t, key, &[0])[0];
    }
    LittleEndian::write_i32(&mut h[OFF_N_COUNT..], t.streamline_count() as i32);
    LittleEndian::write_i32(&mut h[OFF_VERSION..], 2);
    LittleEndian::write_i32(&mut h[OFF_HDR_SIZE..], HEADER_SIZE as i32);

    let mut out = h;
    out.reserve(t.vertex_count() * 4 * (3 + ns) + t.streamline_count() * 4 * (1 + np));
    let push = |out: &mut Vec<u8>, v: f32| out.extend_from_slice(&v.to_le_bytes());
    for s in 0..t.streamline_count() {
        let range = t.streamline_range(s);
        out.extend_from_slice(&(range.len() as i32).to_le_bytes());
        for v in range {
            for &c in &t.vertices[v] {
                push(&mut out, c);
            }
            for f in t.vertex_scalars.values() {
                for &x in f.element(v) {
                    push(&mut out, x as f32);
                }
            }
        }
        for f in t.fiber_properties.values() {
            for &x in f.element(s) {
                push(&mut out, x as f32);
            }
        }
    }
    out
}
