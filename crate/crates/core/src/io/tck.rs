//! MRtrix `.tck` streamline files.
//!
//! ASCII header of `key: value` lines closed by `END`, then float triplets
//! starting at the byte offset given by `file: . <offset>`. A NaN triplet
//! closes a streamline and an Inf triplet closes the stream.

use byteorder::{BigEndian, ByteOrder, LittleEndian};
use indexmap::IndexMap;
use log::warn;

use super::{FormatTag, IoError};
use crate::model::{Space, Tractogram};

const MAGIC: &[u8] = b"mrtrix tracks";
/// Header keys regenerated on every write and therefore not kept in metadata.
const LAYOUT_KEYS: [&str; 3] = ["count", "datatype", "file"];

fn header_err(offset: usize, reason: impl Into<String>) -> IoError {
    IoError::MalformedHeader {
        format: FormatTag::Tck,
        offset,
        reason: reason.into(),
    }
}

#[derive(Clone, Copy)]
enum Endian {
    Little,
    Big,
}

pub fn read_tck(bytes: &[u8]) -> Result<Tractogram, IoError> {
    if !bytes.starts_with(MAGIC) {
        return Err(IoError::BadMagic {
            format: FormatTag::Tck,
        });
    }
    let mut pos = 0;
    let mut first = true;
    let mut saw_end = false;
    let mut header: Vec<(String, String, usize)> = Vec::new();
    while pos < bytes.len() {
        let line_end = bytes[pos..]
            .iter()
            .position(|&b| b == b'\n')
            .map_or(bytes.len(), |p| pos + p);
        let line = std::str::from_utf8(&bytes[pos..line_end])
            .map_err(|_| header_err(pos, "header is not valid UTF-8"))?
            .trim_end_matches('\r');
        let line_start = pos;
        pos = line_end + 1;
        if first {
            if line.trim() != "mrtrix tracks" {
                return Err(header_err(0, "first line must be \"mrtrix tracks\""));
            }
            first = false;
            continue;
        }
        if line.trim() == "END" {
            saw_end = true;
            break;
        }
        if line.trim().is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once(':')
            .ok_or_else(|| header_err(line_start, format!("expected \"key: value\", got {line:?}")))?;
        header.push((key.trim().to_string(), value.trim().to_string(), line_start));
    }
    if !saw_end {
        return Err(header_err(bytes.len(), "no END line"));
    }
    let header_len = pos.min(bytes.len());

    let mut datatype = None;
    let mut file = None;
    let mut declared_count = None;
    let mut metadata: IndexMap<String, String> = IndexMap::new();
    for (key, value, at) in header {
        match key.as_str() {
            "datatype" => datatype = Some((value, at)),
            "file" => file = Some((value, at)),
            "count" => declared_count = value.parse::<usize>().ok(),
            _ => {
                metadata
                    .entry(key)
                    .and_modify(|v| {
                        v.push('\n');
                        v.push_str(&value);
                    })
                    .or_insert(value);
            }
        }
    }
    let (datatype, dt_at) = datatype.ok_or_else(|| header_err(header_len, "missing datatype"))?;
    let endian = match datatype.as_str() {
        "Float32LE" => Endian::Little,
        "Float32BE" => Endian::Big,
        _ => {
            return Err(IoError::UnsupportedDatatype {
                format: FormatTag::Tck,
                offset: dt_at,
                datatype,
            })
        }
    };
    let (file, file_at) = file.ok_or_else(|| header_err(header_len, "missing file entry"))?;
    let data_offset = file
        .strip_prefix('.')
        .and_then(|rest| rest.trim().parse::<usize>().ok())
        .ok_or_else(|| header_err(file_at, format!("unsupported file entry {file:?}")))?;
    if data_offset < header_len {
        return Err(header_err(file_at, "data offset points inside the header"));
    }

    let mut t = Tractogram::new();
    t.space = Space::Rasmm;
    t.metadata = metadata;
    let mut pos = data_offset;
    let mut current = 0usize;
    let mut dropped_empty = 0usize;
    loop {
        if pos + 12 > bytes.len() {
            return Err(IoError::TruncatedBody {
                format: FormatTag::Tck,
                offset: bytes.len(),
            });
        }
        let chunk = &bytes[pos..pos + 12];
        let p = match endian {
            Endian::Little => [
                LittleEndian::read_f32(&chunk[0..4]),
                LittleEndian::read_f32(&chunk[4..8]),
                LittleEndian::read_f32(&chunk[8..12]),
            ],
            Endian::Big => [
                BigEndian::read_f32(&chunk[0..4]),
                BigEndian::read_f32(&chunk[4..8]),
                BigEndian::read_f32(&chunk[8..12]),
            ],
        };
        if p.iter().all(|c| c.is_infinite()) {
            break;
        }
        if p.iter().all(|c| c.is_nan()) {
            if current == 0 {
                dropped_empty += 1;
            } else {
                t.offsets.push(t.vertices.len());
                current = 0;
            }
        } else if p.iter().all(|c| c.is_finite()) {
            t.vertices.push(p);
            current += 1;
        } else {
            return Err(IoError::NonFiniteCoordinate {
                format: FormatTag::Tck,
                offset: pos,
            });
        }
        pos += 12;
    }
    if current > 0 {
        // streamline closed by the Inf terminator instead of a NaN triplet
        t.offsets.push(t.vertices.len());
    }
    if dropped_empty > 0 {
        warn!("TCK: skipped {dropped_empty} empty streamline(s)");
    }
    if let Some(n) = declared_count {
        if n != t.streamline_count() {
            warn!(
                "TCK: header count {n} disagrees with {} streamlines in the body",
                t.streamline_count()
            );
        }
    }
    Ok(t)
}

/// Serialize as Float32LE. Scalar and property fields cannot be stored and
/// are dropped with a warning.
pub fn write_tck(t: &Tractogram) -> Vec<u8> {
    let dropped = super::dropped_fields(t, FormatTag::Tck);
    if !dropped.is_empty() {
        warn!("TCK cannot store attributes; dropping {}", dropped.join(", "));
    }
    let mut lines = String::from("mrtrix tracks\n");
    for (key, value) in &t.metadata {
        if LAYOUT_KEYS.contains(&key.as_str()) {
            continue;
        }
        for v in value.split('\n') {
            lines.push_str(&format!("{key}: {v}\n"));
        }
    }
    lines.push_str(&format!("count: {}\n", t.streamline_count()));
    lines.push_str("datatype: Float32LE\n");
    // The offset's digit count feeds back into the header length.
    let mut offset = lines.len() + "file: . \nEND\n".len();
    loop {
        let candidate = lines.len() + format!("file: . {offset}\nEND\n").len();
        if candidate == offset {
            break;
        }
        offset = candidate;
    }
    lines.push_str(&format!("file: . {offset}\nEND\n"));
    debug_assert_eq!(lines.len(), offset);

    let triplets = t.vertex_count() + t.streamline_count() + 1;
    let mut out = Vec::with_capacity(offset + triplets * 12);
    out.extend_from_slice(lines.as_bytes());
    let mut buf = [0u8; 12];
    let mut push = |out: &mut Vec<u8>, p: [f32; 3]| {
        LittleEndian::write_f32_into(&p, &mut buf);
        out.extend_from_slice(&buf);
    };
    for s in t.streamlines() {
        for &p in s {
            push(&mut out, p);
        }
        push(&mut out, [f32::NAN; 3]);
    }
    push(&mut out, [f32::INFINITY; 3]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DeclaredType, Field};

    fn body(triplets: &[[f32; 3]]) -> Vec<u8> {
        let mut v = Vec::new();
        for p in triplets {
            for c in p {
                v.extend_from_slice(&c.to_le_bytes());
            }
        }
        v
    }

    fn file_with(header: &str, triplets: &[[f32; 3]]) -> Vec<u8> {
        let mut h = format!("mrtrix tracks\n{header}");
        let off = h.len() + "file: . 000\nEND\n".len();
        h.push_str(&format!("file: . {off:03}\nEND\n"));
        let mut bytes = h.into_bytes();
        bytes.extend(body(triplets));
        bytes
    }

    const NAN3: [f32; 3] = [f32::NAN; 3];
    const INF3: [f32; 3] = [f32::INFINITY; 3];

    #[test]
    fn one_streamline() {
        let bytes = file_with(
            "datatype: Float32LE\n",
            &[[0.0, 0.0, 0.0], [1.0, 1.0, 1.0], NAN3, INF3],
        );
        let t = read_tck(&bytes).unwrap();
        assert_eq!(t.offsets, vec![0, 2]);
        assert_eq!(t.vertices, vec![[0.0, 0.0, 0.0], [1.0, 1.0, 1.0]]);
        assert_eq!(t.space, Space::Rasmm);
        assert!(t.validate().is_empty());
    }

    #[test]
    fn big_endian_body() {
        let mut bytes = file_with("datatype: Float32BE\n", &[]);
        for p in [[1.5f32, -2.0, 3.25], NAN3, INF3] {
            for c in p {
                bytes.extend_from_slice(&c.to_be_bytes());
            }
        }
        let t = read_tck(&bytes).unwrap();
        assert_eq!(t.vertices, vec![[1.5, -2.0, 3.25]]);
    }

    #[test]
    fn empty_streamlines_skipped() {
        let bytes = file_with(
            "datatype: Float32LE\n",
            &[NAN3, [1.0, 2.0, 3.0], NAN3, NAN3, INF3],
        );
        let t = read_tck(&bytes).unwrap();
        assert_eq!(t.offsets, vec![0, 1]);
    }

    #[test]
    fn header_errors() {
        let no_end = b"mrtrix tracks\ndatatype: Float32LE\nfile: . 40\n".to_vec();
        assert!(matches!(read_tck(&no_end), Err(IoError::MalformedHeader { .. })));

        let no_dt = file_with("", &[INF3]);
        assert!(matches!(read_tck(&no_dt), Err(IoError::MalformedHeader { .. })));

        let f64_dt = file_with("datatype: Float64LE\n", &[INF3]);
        match read_tck(&f64_dt) {
            Err(IoError::UnsupportedDatatype { datatype, offset, .. }) => {
                assert_eq!(datatype, "Float64LE");
                assert_eq!(offset, 14);
            }
            other => panic!("{other:?}"),
        }

        assert!(matches!(
            read_tck(b"mrtrix tracks\nnot a key value\nEND\n"),
            Err(IoError::MalformedHeader { offset: 14, .. })
        ));
        assert!(matches!(read_tck(b"mrtrix tracksX\nEND\n"), Err(IoError::MalformedHeader { .. })));
        assert!(matches!(read_tck(b"TRACK"), Err(IoError::BadMagic { .. })));
    }

    #[test]
    fn truncated_body() {
        let bytes = file_with("datatype: Float32LE\n", &[[0.0, 0.0, 0.0], NAN3]);
        assert!(matches!(read_tck(&bytes), Err(IoError::TruncatedBody { .. })));
        let mut bytes = file_with("datatype: Float32LE\n", &[[0.0, 0.0, 0.0], NAN3, INF3]);
        bytes.truncate(bytes.len() - 5);
        assert!(matches!(read_tck(&bytes), Err(IoError::TruncatedBody { .. })));
    }

    #[test]
    fn partial_nan_is_rejected() {
        let bytes = file_with(
            "datatype: Float32LE\n",
            &[[0.0, f32::NAN, 0.0], NAN3, INF3],
        );
        assert!(matches!(
            read_tck(&bytes),
            Err(IoError::NonFiniteCoordinate { .. })
        ));
    }

    #[test]
    fn empty_tractogram_is_header_plus_inf() {
        let bytes = write_tck(&Tractogram::new());
        let text = String::from_utf8_lossy(&bytes);
        let off: usize = text
            .lines()
            .find_map(|l| l.strip_prefix("file: . "))
            .unwrap()
            .parse()
            .unwrap();
        assert_eq!(bytes.len(), off + 12);
        assert_eq!(&bytes[off..], &body(&[INF3])[..]);
        let t = read_tck(&bytes).unwrap();
        assert_eq!(t.streamline_count(), 0);
    }

    #[test]
    fn two_vertices_four_triplets() {
        let t = Tractogram::from_streamlines([vec![[0.0, 0.0, 0.0], [1.0, 2.0, 3.0]]]);
        let bytes = write_tck(&t);
        let text = String::from_utf8_lossy(&bytes);
        let off: usize = text
            .lines()
            .find_map(|l| l.strip_prefix("file: . "))
            .unwrap()
            .parse()
            .unwrap();
        assert_eq!((bytes.len() - off) / 12, 4);
        assert!(text.contains("count: 1\n"));
    }

    #[test]
    fn metadata_round_trip_including_repeated_keys() {
        let mut t = Tractogram::from_streamlines([vec![[0.5, 0.25, 0.125]]]);
        t.space = Space::Rasmm;
        t.metadata.insert("step_size".into(), "0.5".into());
        t.metadata
            .insert("command_history".into(), "tckgen a b\ntckedit c d".into());
        let bytes = write_tck(&t);
        let text = String::from_utf8_lossy(&bytes);
        assert!(text.contains("command_history: tckgen a b\ncommand_history: tckedit c d\n"));
        assert_eq!(read_tck(&bytes).unwrap(), t);
    }

    #[test]
    fn fields_are_dropped() {
        let mut t = Tractogram::from_streamlines([vec![[0.0; 3]]]);
        t.space = Space::Rasmm;
        t.vertex_scalars
            .insert("FA".into(), Field::new(1, vec![0.5], DeclaredType::Float32));
        let back = read_tck(&write_tck(&t)).unwrap();
        assert!(back.vertex_scalars.is_empty());
        assert_eq!(back.vertices, t.vertices);
    }

    #[test]
    fn offset_fixed_point_near_digit_boundary() {
        for pad in 0..120 {
            let mut t = Tractogram::new();
            t.metadata.insert("pad".into(), "x".repeat(pad));
            let bytes = write_tck(&t);
            read_tck(&bytes).unwrap();
        }
    }
}
