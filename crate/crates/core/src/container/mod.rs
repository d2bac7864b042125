//! The `.tko` container: a glTF 2.0 document whose single mesh primitive
//! carries streamline vertices as `POSITION`, with a `TRAKO_tractogram`
//! mesh extension mapping offsets, per-vertex scalars, per-fiber properties
//! and metadata onto accessors. Compressed accessors carry their codec
//! parameters in a `TRAKO_compressed` extension and point at the payload
//! bufferView from there.

mod files;
pub mod gltf;

use byteorder::{ByteOrder, LittleEndian};
use indexmap::IndexMap;
use rayon::prelude::*;
use thiserror::Error;

use crate::codec::{
    decode_attribute, decode_offsets, encode_attribute, encode_offsets, CodecConfig, CodecError,
    CompressedAttribute, QuantizationParams,
};
use crate::model::{DeclaredType, Field, Tractogram};
use crate::scalar::Scalar;

pub use files::{read_tko, read_tko_binary, read_tko_json, write_tko_binary, write_tko_json};
use gltf::*;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ContainerError {
    #[error("not a TRAKO file: {0}")]
    NotATrakoFile(String),
    #[error("unsupported {extension} version {version}")]
    UnsupportedExtensionVersion { extension: &'static str, version: u32 },
    #[error("corrupt stream: {0}")]
    CorruptStream(String),
    #[error("malformed JSON: {0}")]
    MalformedJson(String),
    #[error("bad GLB magic")]
    BadMagic,
    #[error("unsupported GLB version {0}")]
    UnsupportedGlbVersion(u32),
    #[error("GLB chunk length mismatch: {0}")]
    ChunkLengthMismatch(String),
    #[error("GLB file truncated at byte {0}")]
    TruncatedFile(usize),
    #[error("tractogram too large for 32-bit offsets: {0} vertices")]
    TooLarge(usize),
    #[error("invalid tractogram: {0}")]
    InvalidTractogram(String),
    #[error(transparent)]
    Codec(#[from] CodecError),
}

/// A glTF document plus the binary buffers its `buffers` entries describe.
/// URIs are never stored here; the JSON writer embeds buffers as data URIs
/// and the GLB writer places buffer 0 in the BIN chunk.
#[derive(Debug, Clone, PartialEq)]
pub struct TrakoDocument {
    pub json_tree: Gltf,
    pub binary_buffers: Vec<Vec<u8>>,
}

impl TrakoDocument {
    pub fn buffer_bytes(&self) -> usize {
        self.binary_buffers.iter().map(Vec::len).sum()
    }

    pub fn tractogram_extension(&self) -> Result<&TractogramExtension, ContainerError> {
        self.json_tree
            .meshes
            .first()
            .and_then(|m| m.extensions.tractogram.as_ref())
            .ok_or_else(|| ContainerError::NotATrakoFile("no TRAKO_tractogram mesh extension".into()))
    }

    /// Codec parameters of every compressed accessor, keyed by role.
    pub fn compressed_attributes(&self) -> Vec<(String, &CompressedExtension)> {
        let Ok(ext) = self.tractogram_extension() else {
            return Vec::new();
        };
        let mut out = Vec::new();
        let mut push = |name: String, idx: usize| {
            if let Some(c) = self
                .json_tree
                .accessors
                .get(idx)
                .and_then(|a| a.extensions.compressed.as_ref())
            {
                out.push((name, c));
            }
        };
        if let Some(&pos) = self.json_tree.meshes[0]
            .primitives
            .first()
            .and_then(|p| p.attributes.get("POSITION"))
        {
            push("POSITION".into(), pos);
        }
        push("offsets".into(), ext.offsets);
        for (n, f) in &ext.vertex_scalars {
            push(n.clone(), f.accessor);
        }
        for (n, f) in &ext.fiber_properties {
            push(n.clone(), f.accessor);
        }
        out
    }
}

struct Builder {
    bin: Vec<u8>,
    views: Vec<BufferView>,
    accessors: Vec<Accessor>,
}

impl Builder {
    fn view(&mut self, bytes: &[u8], target: Option<u32>) -> Option<usize> {
        if bytes.is_empty() {
            return None;
        }
        while self.bin.len() % 4 != 0 {
            self.bin.push(0);
        }
        self.views.push(BufferView {
            buffer: 0,
            byte_offset: self.bin.len(),
            byte_length: bytes.len(),
            byte_stride: None,
            target,
        });
        self.bin.extend_from_slice(bytes);
        Some(self.views.len() - 1)
    }

    fn accessor(&mut self, a: Accessor) -> usize {
        self.accessors.push(a);
        self.accessors.len() - 1
    }

    fn compressed(
        &mut self,
        ca: &CompressedAttribute,
        component_type: u32,
        kind: &str,
        count: usize,
        bounds: Option<(Vec<f64>, Vec<f64>)>,
    ) -> usize {
        let view = self.view(&ca.payload, None);
        let (min, max) = bounds.unzip();
        self.accessor(Accessor {
            buffer_view: None,
            byte_offset: 0,
            component_type,
            count,
            kind: kind.to_string(),
            min,
            max,
            extensions: AccessorExtensions {
                compressed: Some(CompressedExtension {
                    version: EXTENSION_VERSION,
                    buffer_view: view,
                    stages: ca.stages.clone(),
                    bits: ca.params.bits,
                    min_values: ca.params.min_values.clone(),
                    max_values: ca.params.max_values.clone(),
                    count: ca.params.count,
                    components: ca.params.components,
                    declared_type: ca.declared_type,
                }),
            },
        })
    }

    fn raw(
        &mut self,
        bytes: &[u8],
        component_type: u32,
        kind: &str,
        count: usize,
        target: Option<u32>,
        bounds: Option<(Vec<f64>, Vec<f64>)>,
    ) -> usize {
        let view = self.view(bytes, target);
        let (min, max) = bounds.unzip();
        self.accessor(Accessor {
            buffer_view: view,
            byte_offset: 0,
            component_type,
            count,
            kind: kind.to_string(),
            min,
            max,
            extensions: AccessorExtensions::default(),
        })
    }
}

fn bounding_box(t: &Tractogram) -> (Vec<f64>, Vec<f64>) {
    let mut lo = [f32::INFINITY; 3];
    let mut hi = [f32::NEG_INFINITY; 3];
    for v in &t.vertices {
        for a in 0..3 {
            lo[a] = lo[a].min(v[a]);
            hi[a] = hi[a].max(v[a]);
        }
    }
    if t.vertices.is_empty() {
        return (vec![0.0; 3], vec![0.0; 3]);
    }
    (
        lo.iter().map(|&v| v as f64).collect(),
        hi.iter().map(|&v| v as f64).collect(),
    )
}

fn raw_field_bytes(f: &Field) -> Vec<u8> {
    let t = f.declared_type;
    let mut out = Vec::with_capacity(f.values.len() * t.byte_size());
    for &v in &f.values {
        match t {
            DeclaredType::Float32 => out.extend_from_slice(&(v as f32).to_le_bytes()),
            DeclaredType::Float64 => out.extend_from_slice(&v.to_le_bytes()),
            DeclaredType::Int8 => out.push(v as i8 as u8),
            DeclaredType::UInt8 => out.push(v as u8),
            DeclaredType::Int16 => out.extend_from_slice(&(v as i16).to_le_bytes()),
            DeclaredType::UInt16 => out.extend_from_slice(&(v as u16).to_le_bytes()),
            DeclaredType::Int32 => out.extend_from_slice(&(v as i32).to_le_bytes()),
            DeclaredType::UInt32 => out.extend_from_slice(&(v as u32).to_le_bytes()),
            DeclaredType::Int64 => out.extend_from_slice(&(v as i64).to_le_bytes()),
            DeclaredType::UInt64 => out.extend_from_slice(&(v as u64).to_le_bytes()),
        }
    }
    out
}

fn raw_field_values(bytes: &[u8], t: DeclaredType) -> Vec<f64> {
    bytes
        .chunks_exact(t.byte_size())
        .map(|c| match t {
            DeclaredType::Float32 => LittleEndian::read_f32(c) as f64,
            DeclaredType::Float64 => LittleEndian::read_f64(c),
            DeclaredType::Int8 => c[0] as i8 as f64,
            DeclaredType::UInt8 => c[0] as f64,
            DeclaredType::Int16 => LittleEndian::read_i16(c) as f64,
            DeclaredType::UInt16 => LittleEndian::read_u16(c) as f64,
            DeclaredType::Int32 => LittleEndian::read_i32(c) as f64,
            DeclaredType::UInt32 => LittleEndian::read_u32(c) as f64,
            DeclaredType::Int64 => LittleEndian::read_i64(c) as f64,
            DeclaredType::UInt64 => LittleEndian::read_u64(c) as f64,
        })
        .collect()
}

enum Job<'a> {
    Positions,
    Offsets,
    Field(&'a Field),
}

/// Pack a tractogram into a glTF document. `None` stores raw little-endian
/// values with no compression extension.
pub fn build_document(t: &Tractogram, config: Option<&CodecConfig>) -> Result<TrakoDocument, ContainerError> {
    let violations = t.validate();
    if let Some(v) = violations.first() {
        return Err(ContainerError::InvalidTractogram(v.to_string()));
    }
    if t.vertex_count() > u32::MAX as usize {
        return Err(ContainerError::TooLarge(t.vertex_count()));
    }
    let mut b = Builder {
        bin: Vec::new(),
        views: Vec::new(),
        accessors: Vec::new(),
    };
    let bbox = bounding_box(t);
    let position;
    let offsets;
    let mut vertex_scalars = IndexMap::new();
    let mut fiber_properties = IndexMap::new();
    let field_ref = |accessor, f: &Field| FieldRef {
        accessor,
        components: f.dims,
        declared_type: f.declared_type,
    };

    match config {
        Some(cfg) => {
            cfg.check()?;
            let mut jobs = vec![Job::Positions, Job::Offsets];
            jobs.extend(t.vertex_scalars.values().map(Job::Field));
            jobs.extend(t.fiber_properties.values().map(Job::Field));
            let encoded: Vec<CompressedAttribute> = jobs
                .par_iter()
                .map(|job| match job {
                    Job::Positions => {
                        encode_attribute(t.flat_vertices(), 3, cfg, DeclaredType::Float32)
                    }
                    Job::Offsets => encode_offsets(&t.offsets, cfg.compression_level),
                    Job::Field(f) => encode_attribute(&f.values, f.dims, cfg, f.declared_type),
                })
                .collect::<Result<_, _>>()?;
            let mut it = encoded.iter();
            position = b.compressed(
                it.next().unwrap(),
                COMPONENT_FLOAT,
                "VEC3",
                t.vertex_count(),
                Some(bbox),
            );
            offsets = b.compressed(
                it.next().unwrap(),
                COMPONENT_UNSIGNED_INT,
                "SCALAR",
                t.offsets.len(),
                None,
            );
            for (name, f) in &t.vertex_scalars {
                let (kind, count) = accessor_shape(f.dims, f.element_count());
                let a = b.compressed(it.next().unwrap(), COMPONENT_FLOAT, kind, count, None);
                vertex_scalars.insert(name.clone(), field_ref(a, f));
            }
            for (name, f) in &t.fiber_properties {
                let (kind, count) = accessor_shape(f.dims, f.element_count());
                let a = b.compressed(it.next().unwrap(), COMPONENT_FLOAT, kind, count, None);
                fiber_properties.insert(name.clone(), field_ref(a, f));
            }
        }
        None => {
            let mut pos_bytes = vec![0u8; t.vertex_count() * 12];
            LittleEndian::write_f32_into(t.flat_vertices(), &mut pos_bytes);
            position = b.raw(
                &pos_bytes,
                COMPONENT_FLOAT,
                "VEC3",
                t.vertex_count(),
                Some(TARGET_ARRAY_BUFFER),
                Some(bbox),
            );
            let off: Vec<u32> = t.offsets.iter().map(|&o| o as u32).collect();
            let mut off_bytes = vec![0u8; off.len() * 4];
            LittleEndian::write_u32_into(&off, &mut off_bytes);
            offsets = b.raw(&off_bytes, COMPONENT_UNSIGNED_INT, "SCALAR", off.len(), None, None);
            let raw_field = |b: &mut Builder, f: &Field| {
                let (ct, words) = raw_storage(f.declared_type);
                let (kind, count) = if words == 1 {
                    accessor_shape(f.dims, f.element_count())
                } else {
                    ("SCALAR", f.values.len() * words)
                };
                b.raw(&raw_field_bytes(f), ct, kind, count, None, None)
            };
            for (name, f) in &t.vertex_scalars {
                let a = raw_field(&mut b, f);
                vertex_scalars.insert(name.clone(), field_ref(a, f));
            }
            for (name, f) in &t.fiber_properties {
                let a = raw_field(&mut b, f);
                fiber_properties.insert(name.clone(), field_ref(a, f));
            }
        }
    }

    let mut extensions_used = vec![EXT_TRACTOGRAM.to_string()];
    if config.is_some() {
        extensions_used.push(EXT_COMPRESSED.to_string());
    }
    let mut attributes = IndexMap::new();
    attributes.insert("POSITION".to_string(), position);
    let buffers = if b.bin.is_empty() {
        Vec::new()
    } else {
        vec![Buffer {
            byte_length: b.bin.len(),
            uri: None,
        }]
    };
    let json_tree = Gltf {
        asset: Asset {
            version: "2.0".into(),
            generator: Some(format!("trako {}", env!("CARGO_PKG_VERSION"))),
        },
        extensions_used,
        buffers,
        buffer_views: b.views,
        accessors: b.accessors,
        meshes: vec![Mesh {
            primitives: vec![Primitive {
                attributes,
                mode: Some(MODE_POINTS),
            }],
            extensions: MeshExtensions {
                tractogram: Some(TractogramExtension {
                    version: EXTENSION_VERSION,
                    space: t.space,
                    offsets,
                    vertex_scalars,
                    fiber_properties,
                    metadata: t.metadata.clone(),
                }),
            },
        }],
    };
    let binary_buffers = if b.bin.is_empty() { Vec::new() } else { vec![b.bin] };
    Ok(TrakoDocument {
        json_tree,
        binary_buffers,
    })
}

fn corrupt(msg: impl Into<String>) -> ContainerError {
    ContainerError::CorruptStream(msg.into())
}

struct Parser<'a> {
    doc: &'a TrakoDocument,
}

impl<'a> Parser<'a> {
    fn accessor(&self, idx: usize) -> Result<&'a Accessor, ContainerError> {
        self.doc
            .json_tree
            .accessors
            .get(idx)
            .ok_or_else(|| corrupt(format!("accessor {idx} does not exist")))
    }

    fn view_bytes(&self, idx: usize) -> Result<&'a [u8], ContainerError> {
        let view = self
            .doc
            .json_tree
            .buffer_views
            .get(idx)
            .ok_or_else(|| corrupt(format!("bufferView {idx} does not exist")))?;
        let buf = self
            .doc
            .binary_buffers
            .get(view.buffer)
            .ok_or_else(|| corrupt(format!("buffer {} does not exist", view.buffer)))?;
        buf.get(view.byte_offset..view.byte_offset + view.byte_length)
            .ok_or_else(|| corrupt(format!("bufferView {idx} exceeds its buffer")))
    }

    fn compressed(&self, ext: &CompressedExtension) -> Result<CompressedAttribute, ContainerError> {
        if ext.version != EXTENSION_VERSION {
            return Err(ContainerError::UnsupportedExtensionVersion {
                extension: EXT_COMPRESSED,
                version: ext.version,
            });
        }
        let payload = match ext.buffer_view {
            Some(v) => self.view_bytes(v)?.to_vec(),
            None => Vec::new(),
        };
        Ok(CompressedAttribute {
            payload,
            params: QuantizationParams {
                bits: ext.bits,
                min_values: ext.min_values.clone(),
                max_values: ext.max_values.clone(),
                components: ext.components,
                count: ext.count,
            },
            stages: ext.stages.clone(),
            declared_type: ext.declared_type,
        })
    }

    /// Tightly packed bytes of an uncompressed accessor.
    fn raw_bytes(&self, a: &Accessor) -> Result<Vec<u8>, ContainerError> {
        let comp = component_size(a.component_type)
            .ok_or_else(|| corrupt(format!("unknown componentType {}", a.component_type)))?;
        let per = components_of(&a.kind)
            .ok_or_else(|| corrupt(format!("unknown accessor type {}", a.kind)))?;
        let elem = comp * per;
        let Some(view_idx) = a.buffer_view else {
            return Ok(vec![0u8; a.count * elem]);
        };
        let bytes = self.view_bytes(view_idx)?;
        let view = &self.doc.json_tree.buffer_views[view_idx];
        let stride = view.byte_stride.unwrap_or(elem);
        if a.count == 0 {
            return Ok(Vec::new());
        }
        let needed = a.byte_offset + stride * (a.count - 1) + elem;
        if needed > bytes.len() {
            return Err(corrupt(format!("accessor needs {needed} bytes, view has {}", bytes.len())));
        }
        if stride == elem {
            return Ok(bytes[a.byte_offset..a.byte_offset + elem * a.count].to_vec());
        }
        let mut out = Vec::with_capacity(elem * a.count);
        for i in 0..a.count {
            let s = a.byte_offset + i * stride;
            out.extend_from_slice(&bytes[s..s + elem]);
        }
        Ok(out)
    }

    fn positions<T: Scalar>(&self, idx: usize) -> Result<Vec<[T; 3]>, ContainerError> {
        let a = self.accessor(idx)?;
        let flat: Vec<T> = match &a.extensions.compressed {
            Some(ext) => {
                if ext.components != 3 {
                    return Err(corrupt("POSITION must have 3 components"));
                }
                decode_attribute::<T>(&self.compressed(ext)?)?
            }
            None => {
                if a.component_type != COMPONENT_FLOAT || a.kind != "VEC3" {
                    return Err(corrupt("POSITION must be a float VEC3 accessor"));
                }
                self.raw_bytes(a)?
                    .chunks_exact(4)
                    .map(|c| T::from_f32(LittleEndian::read_f32(c)).unwrap())
                    .collect()
            }
        };
        Ok(flat.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect())
    }

    fn offsets(&self, idx: usize) -> Result<Vec<usize>, ContainerError> {
        let a = self.accessor(idx)?;
        match &a.extensions.compressed {
            Some(ext) => Ok(decode_offsets(&self.compressed(ext)?)?),
            None => {
                if a.component_type != COMPONENT_UNSIGNED_INT {
                    return Err(corrupt("offsets must be an unsigned int accessor"));
                }
                let bytes = self.raw_bytes(a)?;
                Ok(bytes
                    .chunks_exact(4)
                    .map(|c| LittleEndian::read_u32(c) as usize)
                    .collect())
            }
        }
    }

    fn field(&self, name: &str, r: &FieldRef) -> Result<Field, ContainerError> {
        let a = self.accessor(r.accessor)?;
        let values = match &a.extensions.compressed {
            Some(ext) => {
                if ext.components != r.components || ext.declared_type != r.declared_type {
                    return Err(corrupt(format!("field {name:?} disagrees with its accessor")));
                }
                let t = r.declared_type;
                let mut v = decode_attribute::<f64>(&self.compressed(ext)?)?;
                if t != DeclaredType::Float64 {
                    let integer = t.is_integer();
                    for x in &mut v {
                        *x = t.cast(if integer { x.round() } else { *x });
                    }
                }
                v
            }
            None => {
                let (ct, _) = raw_storage(r.declared_type);
                if a.component_type != ct {
                    return Err(corrupt(format!(
                        "field {name:?}: componentType {} does not store {}",
                        a.component_type, r.declared_type
                    )));
                }
                raw_field_values(&self.raw_bytes(a)?, r.declared_type)
            }
        };
        if r.components == 0 {
            return Err(corrupt(format!("field {name:?} has zero components")));
        }
        Ok(Field::new(r.components, values, r.declared_type))
    }
}

/// Restore the tractogram a document holds.
pub fn parse_document(doc: &TrakoDocument) -> Result<Tractogram, ContainerError> {
    let ext = doc.tractogram_extension()?;
    if ext.version != EXTENSION_VERSION {
        return Err(ContainerError::UnsupportedExtensionVersion {
            extension: EXT_TRACTOGRAM,
            version: ext.version,
        });
    }
    let position = *doc.json_tree.meshes[0]
        .primitives
        .first()
        .and_then(|p| p.attributes.get("POSITION"))
        .ok_or_else(|| ContainerError::NotATrakoFile("mesh has no POSITION attribute".into()))?;
    let p = Parser { doc };

    enum Out {
        Positions(Vec<[f32; 3]>),
        Offsets(Vec<usize>),
        Field(Field),
    }
    let mut jobs: Vec<(usize, Option<(&String, &FieldRef)>)> = vec![(0, None), (1, None)];
    jobs.extend(ext.vertex_scalars.iter().map(|f| (2, Some(f))));
    jobs.extend(ext.fiber_properties.iter().map(|f| (2, Some(f))));
    let results: Vec<Out> = jobs
        .par_iter()
        .map(|(kind, f)| match (kind, f) {
            (0, _) => p.positions::<f32>(position).map(Out::Positions),
            (1, _) => p.offsets(ext.offsets).map(Out::Offsets),
            (_, Some((name, r))) => p.field(name, r).map(Out::Field),
            _ => unreachable!(),
        })
        .collect::<Result<_, _>>()?;

    let mut t = Tractogram::new();
    t.space = ext.space;
    t.metadata = ext.metadata.clone();
    let mut fields = Vec::new();
    for r in results {
        match r {
            Out::Positions(v) => t.vertices = v,
            Out::Offsets(o) => t.offsets = o,
            Out::Field(f) => fields.push(f),
        }
    }
    let mut fields = fields.into_iter();
    for name in ext.vertex_scalars.keys() {
        t.vertex_scalars.insert(name.clone(), fields.next().unwrap());
    }
    for name in ext.fiber_properties.keys() {
        t.fiber_properties.insert(name.clone(), fields.next().unwrap());
    }
    if let Some(v) = t.validate().first() {
        return Err(corrupt(format!("restored tractogram is inconsistent: {v}")));
    }
    Ok(t)
}

/// Vertex positions decoded at precision `T`, skipping the float32 narrowing
/// `parse_document` applies.
pub fn restore_positions<T: Scalar>(doc: &TrakoDocument) -> Result<Vec<[T; 3]>, ContainerError> {
    doc.tractogram_extension()?;
    let position = *doc.json_tree.meshes[0]
        .primitives
        .first()
        .and_then(|p| p.attributes.get("POSITION"))
        .ok_or_else(|| ContainerError::NotATrakoFile("mesh has no POSITION attribute".into()))?;
    Parser { doc }.positions::<T>(position)
}

/// Build and serialize in one step.
pub fn encode_tko(t: &Tractogram, config: Option<&CodecConfig>, binary: bool) -> Result<Vec<u8>, ContainerError> {
    let doc = build_document(t, config)?;
    Ok(if binary {
        write_tko_binary(&doc)
    } else {
        write_tko_json(&doc)
    })
}

pub fn decode_tko(bytes: &[u8]) -> Result<Tractogram, ContainerError> {
    parse_document(&read_tko(bytes)?)
}

/// Worst-case reconstruction error per POSITION axis of a document; zeros
/// for uncompressed documents.
pub fn position_error_bounds(doc: &TrakoDocument) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (name, ext) in doc.compressed_attributes() {
        if name == "POSITION" && ext.stages.contains(&crate::codec::Stage::Quantize) {
            let params = QuantizationParams {
                bits: ext.bits,
                min_values: ext.min_values.clone(),
                max_values: ext.max_values.clone(),
                components: ext.components,
                count: ext.count,
            };
            for (a, o) in out.iter_mut().enumerate() {
                *o = params.error_bound(a);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests;
