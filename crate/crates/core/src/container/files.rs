//! `.tko` serialization: glTF JSON with embedded base64 buffers, or GLB.

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use byteorder::{ByteOrder, LittleEndian};

use super::gltf::{Buffer, Gltf};
use super::{ContainerError, TrakoDocument};

const GLB_MAGIC: u32 = 0x4654_6C67;
const GLB_VERSION: u32 = 2;
const CHUNK_JSON: u32 = 0x4E4F_534A;
const CHUNK_BIN: u32 = 0x004E_4942;
const DATA_URI_PREFIX: &str = "data:application/octet-stream;base64,";

fn to_json(tree: &Gltf) -> Vec<u8> {
    serde_json::to_vec(tree).expect("glTF tree always serializes")
}

fn from_json(bytes: &[u8]) -> Result<Gltf, ContainerError> {
    let value: serde_json::Value =
        serde_json::from_slice(bytes).map_err(|e| ContainerError::MalformedJson(e.to_string()))?;
    let is_gltf = value
        .get("asset")
        .and_then(|a| a.get("version"))
        .and_then(|v| v.as_str())
        .is_some();
    if !is_gltf {
        return Err(ContainerError::NotATrakoFile("missing asset.version".into()));
    }
    let tree: Gltf =
        serde_json::from_value(value).map_err(|e| ContainerError::MalformedJson(e.to_string()))?;
    if !tree.extensions_used.iter().any(|e| e == super::gltf::EXT_TRACTOGRAM) {
        return Err(ContainerError::NotATrakoFile(
            "TRAKO_tractogram not listed in extensionsUsed".into(),
        ));
    }
    Ok(tree)
}

pub fn write_tko_json(doc: &TrakoDocument) -> Vec<u8> {
    let mut tree = doc.json_tree.clone();
    for (b, data) in tree.buffers.iter_mut().zip(&doc.binary_buffers) {
        b.uri = Some(format!("{DATA_URI_PREFIX}{}", STANDARD.encode(data)));
    }
    to_json(&tree)
}

pub fn read_tko_json(bytes: &[u8]) -> Result<TrakoDocument, ContainerError> {
    let mut tree = from_json(bytes)?;
    let mut binary_buffers = Vec::with_capacity(tree.buffers.len());
    for (i, b) in tree.buffers.iter_mut().enumerate() {
        let uri = b
            .uri
            .take()
            .ok_or_else(|| ContainerError::CorruptStream(format!("buffer {i} has no uri")))?;
        let Some((head, payload)) = uri.split_once(',') else {
            return Err(ContainerError::CorruptStream(format!(
                "buffer {i}: external uris are not supported"
            )));
        };
        if !head.starts_with("data:") || !head.ends_with(";base64") {
            return Err(ContainerError::CorruptStream(format!(
                "buffer {i}: expected a base64 data uri"
            )));
        }
        let data = STANDARD
            .decode(payload)
            .map_err(|e| ContainerError::CorruptStream(format!("buffer {i}: {e}")))?;
        if data.len() < b.byte_length {
            return Err(ContainerError::CorruptStream(format!(
                "buffer {i}: {} bytes, byteLength says {}",
                data.len(),
                b.byte_length
            )));
        }
        binary_buffers.push(data);
    }
    Ok(TrakoDocument {
        json_tree: tree,
        binary_buffers,
    })
}

fn pad_to_4(v: &mut Vec<u8>, fill: u8) {
    while v.len() % 4 != 0 {
        v.push(fill);
    }
}

pub fn write_tko_binary(doc: &TrakoDocument) -> Vec<u8> {
    let mut tree = doc.json_tree.clone();
    let mut bin = Vec::new();
    if doc.binary_buffers.len() > 1 {
        let mut starts = Vec::new();
        for data in &doc.binary_buffers {
            pad_to_4(&mut bin, 0);
            starts.push(bin.len());
            bin.extend_from_slice(data);
        }
        for v in &mut tree.buffer_views {
            v.byte_offset += starts[v.buffer];
            v.buffer = 0;
        }
        tree.buffers = vec![Buffer {
            byte_length: bin.len(),
            uri: None,
        }];
    } else if let Some(data) = doc.binary_buffers.first() {
        bin.extend_from_slice(data);
    }
    let mut json = to_json(&tree);
    pad_to_4(&mut json, b' ');
    pad_to_4(&mut bin, 0);

    let mut total = 12 + 8 + json.len();
    if !bin.is_empty() {
        total += 8 + bin.len();
    }
    let mut out = Vec::with_capacity(total);
    let mut word = [0u8; 4];
    for w in [GLB_MAGIC, GLB_VERSION, total as u32, json.len() as u32, CHUNK_JSON] {
        LittleEndian::write_u32(&mut word, w);
        out.extend_from_slice(&word);
    }
    out.extend_from_slice(&json);
    if !bin.is_empty() {
        for w in [bin.len() as u32, CHUNK_BIN] {
            LittleEndian::write_u32(&mut word, w);
            out.extend_from_slice(&word);
        }
        out.extend_from_slice(&bin);
    }
    out
}

pub fn read_tko_binary(bytes: &[u8]) -> Result<TrakoDocument, ContainerError> {
    if bytes.len() < 12 {
        return Err(ContainerError::TruncatedFile(bytes.len()));
    }
    if LittleEndian::read_u32(&bytes[0..4]) != GLB_MAGIC {
        return Err(ContainerError::BadMagic);
    }
    let version = LittleEndian::read_u32(&bytes[4..8]);
    if version != GLB_VERSION {
        return Err(ContainerError::UnsupportedGlbVersion(version));
    }
    let declared = LittleEndian::read_u32(&bytes[8..12]) as usize;
    if declared > bytes.len() {
        return Err(ContainerError::TruncatedFile(bytes.len()));
    }
    if declared < bytes.len() {
        return Err(ContainerError::ChunkLengthMismatch(format!(
            "header length {declared}, file has {} bytes",
            bytes.len()
        )));
    }
    let mut pos = 12;
    let mut json = None;
    let mut bin = None;
    while pos < declared {
        if pos + 8 > declared {
            return Err(ContainerError::TruncatedFile(pos));
        }
        let len = LittleEndian::read_u32(&bytes[pos..pos + 4]) as usize;
        let kind = LittleEndian::read_u32(&bytes[pos + 4..pos + 8]);
        let start = pos + 8;
        let end = start
            .checked_add(len)
            .filter(|&e| e <= declared)
            .ok_or(ContainerError::TruncatedFile(declared))?;
        match kind {
            CHUNK_JSON if json.is_none() && pos == 12 => json = Some(&bytes[start..end]),
            CHUNK_BIN if json.is_some() && bin.is_none() => bin = Some(&bytes[start..end]),
            CHUNK_JSON | CHUNK_BIN => {
                return Err(ContainerError::ChunkLengthMismatch(format!(
                    "unexpected chunk order at byte {pos}"
                )))
            }
            _ => {}
        }
        pos = end;
    }
    let json = json.ok_or_else(|| ContainerError::NotATrakoFile("GLB has no JSON chunk".into()))?;
    let mut tree = from_json(json)?;
    let mut binary_buffers = Vec::new();
    for (i, b) in tree.buffers.iter_mut().enumerate() {
        if i == 0 && b.uri.is_none() {
            let data = bin.ok_or_else(|| {
                ContainerError::ChunkLengthMismatch("buffer 0 needs a BIN chunk".into())
            })?;
            if data.len() < b.byte_length || data.len() > b.byte_length + 3 {
                return Err(ContainerError::ChunkLengthMismatch(format!(
                    "BIN chunk has {} bytes, buffer 0 declares {}",
                    data.len(),
                    b.byte_length
                )));
            }
            binary_buffers.push(data[..b.byte_length].to_vec());
        } else {
            return Err(ContainerError::CorruptStream(format!(
                "buffer {i}: only the GLB-stored buffer is supported"
            )));
        }
    }
    Ok(TrakoDocument {
        json_tree: tree,
        binary_buffers,
    })
}

/// Read either `.tko` flavour, picked by the GLB magic.
pub fn read_tko(bytes: &[u8]) -> Result<TrakoDocument, ContainerError> {
    if bytes.starts_with(b"glTF") {
        read_tko_binary(bytes)
    } else {
        read_tko_json(bytes)
    }
}
