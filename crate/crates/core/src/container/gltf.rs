//! The subset of the glTF 2.0 JSON schema a `.tko` document uses.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::codec::Stage;
use crate::model::{DeclaredType, Space};

pub const EXT_TRACTOGRAM: &str = "TRAKO_tractogram";
pub const EXT_COMPRESSED: &str = "TRAKO_compressed";
pub const EXTENSION_VERSION: u32 = 1;

pub const COMPONENT_BYTE: u32 = 5120;
pub const COMPONENT_UNSIGNED_BYTE: u32 = 5121;
pub const COMPONENT_SHORT: u32 = 5122;
pub const COMPONENT_UNSIGNED_SHORT: u32 = 5123;
pub const COMPONENT_UNSIGNED_INT: u32 = 5125;
pub const COMPONENT_FLOAT: u32 = 5126;

pub const TARGET_ARRAY_BUFFER: u32 = 34962;
pub const MODE_POINTS: u32 = 0;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Gltf {
    pub asset: Asset,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub extensions_used: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub buffers: Vec<Buffer>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub buffer_views: Vec<BufferView>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub accessors: Vec<Accessor>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub meshes: Vec<Mesh>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Asset {
    pub version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Buffer {
    pub byte_length: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uri: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BufferView {
    pub buffer: usize,
    #[serde(default)]
    pub byte_offset: usize,
    pub byte_length: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub byte_stride: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Accessor {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub buffer_view: Option<usize>,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub byte_offset: usize,
    pub component_type: u32,
    pub count: usize,
    #[serde(rename = "type")]
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "AccessorExtensions::is_empty")]
    pub extensions: AccessorExtensions,
}

fn is_zero(v: &usize) -> bool {
    *v == 0
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AccessorExtensions {
    #[serde(
        rename = "TRAKO_compressed",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub compressed: Option<CompressedExtension>,
}

impl AccessorExtensions {
    fn is_empty(&self) -> bool {
        self.compressed.is_none()
    }
}

/// Everything needed to invert one codec payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CompressedExtension {
    pub version: u32,
    /// Absent for an empty payload.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub buffer_view: Option<usize>,
    pub stages: Vec<Stage>,
    pub bits: u8,
    pub min_values: Vec<f64>,
    pub max_values: Vec<f64>,
    pub count: usize,
    pub components: usize,
    pub declared_type: DeclaredType,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    pub primitives: Vec<Primitive>,
    #[serde(default, skip_serializing_if = "MeshExtensions::is_empty")]
    pub extensions: MeshExtensions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Primitive {
    pub attributes: IndexMap<String, usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MeshExtensions {
    #[serde(
        rename = "TRAKO_tractogram",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub tractogram: Option<TractogramExtension>,
}

impl MeshExtensions {
    fn is_empty(&self) -> bool {
        self.tractogram.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub struct TractogramExtension {
    pub version: u32,
    pub space: Space,
    /// Accessor holding streamline offsets.
    pub offsets: usize,
    #[serde(default)]
    pub vertex_scalars: IndexMap<String, FieldRef>,
    #[serde(default)]
    pub fiber_properties: IndexMap<String, FieldRef>,
    #[serde(default)]
    pub metadata: IndexMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub struct FieldRef {
    pub accessor: usize,
    pub components: usize,
    pub declared_type: DeclaredType,
}

/// glTF accessor type and element count for `elements` values of `dims`
/// components. Widths glTF has no type for are flattened to SCALAR.
pub fn accessor_shape(dims: usize, elements: usize) -> (&'static str, usize) {
    match dims {
        1 => ("SCALAR", elements),
        2 => ("VEC2", elements),
        3 => ("VEC3", elements),
        4 => ("VEC4", elements),
        _ => ("SCALAR", elements * dims),
    }
}

pub fn components_of(kind: &str) -> Option<usize> {
    Some(match kind {
        "SCALAR" => 1,
        "VEC2" => 2,
        "VEC3" => 3,
        "VEC4" => 4,
        "MAT2" => 4,
        "MAT3" => 9,
        "MAT4" => 16,
        _ => return None,
    })
}

pub fn component_size(component_type: u32) -> Option<usize> {
    Some(match component_type {
        COMPONENT_BYTE | COMPONENT_UNSIGNED_BYTE => 1,
        COMPONENT_SHORT | COMPONENT_UNSIGNED_SHORT => 2,
        COMPONENT_UNSIGNED_INT | COMPONENT_FLOAT => 4,
        _ => return None,
    })
}

/// Raw storage of a declared type in an uncompressed document: the glTF
/// component type and how many components one value occupies. Types glTF
/// cannot express are stored bit-for-bit as unsigned 32-bit words.
pub fn raw_storage(t: DeclaredType) -> (u32, usize) {
    match t {
        DeclaredType::Float32 => (COMPONENT_FLOAT, 1),
        DeclaredType::Int8 => (COMPONENT_BYTE, 1),
        DeclaredType::UInt8 => (COMPONENT_UNSIGNED_BYTE, 1),
        DeclaredType::Int16 => (COMPONENT_SHORT, 1),
        DeclaredType::UInt16 => (COMPONENT_UNSIGNED_SHORT, 1),
        DeclaredType::Int32 | DeclaredType::UInt32 => (COMPONENT_UNSIGNED_INT, 1),
        DeclaredType::Float64 | DeclaredType::Int64 | DeclaredType::UInt64 => {
            (COMPONENT_UNSIGNED_INT, 2)
        }
    }
}
