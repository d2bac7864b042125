//! In-memory tractogram model shared by every other module.

use std::fmt;
use std::ops::Range;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

/// Component type an attribute had in its source file. Values are held as
/// `f64` in memory; the declared type only governs serialization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeclaredType {
    Float32,
    Float64,
    Int8,
    UInt8,
    Int16,
    UInt16,
    Int32,
    UInt32,
    Int64,
    UInt64,
}

impl DeclaredType {
    pub fn is_integer(self) -> bool {
        !matches!(self, DeclaredType::Float32 | DeclaredType::Float64)
    }

    pub fn byte_size(self) -> usize {
        match self {
            DeclaredType::Int8 | DeclaredType::UInt8 => 1,
            DeclaredType::Int16 | DeclaredType::UInt16 => 2,
            DeclaredType::Float32 | DeclaredType::Int32 | DeclaredType::UInt32 => 4,
            DeclaredType::Float64 | DeclaredType::Int64 | DeclaredType::UInt64 => 8,
        }
    }

    /// Inclusive value range for integer types.
    pub fn integer_range(self) -> Option<(f64, f64)> {
        Some(match self {
            DeclaredType::Int8 => (i8::MIN as f64, i8::MAX as f64),
            DeclaredType::UInt8 => (0.0, u8::MAX as f64),
            DeclaredType::Int16 => (i16::MIN as f64, i16::MAX as f64),
            DeclaredType::UInt16 => (0.0, u16::MAX as f64),
            DeclaredType::Int32 => (i32::MIN as f64, i32::MAX as f64),
            DeclaredType::UInt32 => (0.0, u32::MAX as f64),
            DeclaredType::Int64 => (i64::MIN as f64, i64::MAX as f64),
            DeclaredType::UInt64 => (0.0, u64::MAX as f64),
            DeclaredType::Float32 | DeclaredType::Float64 => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DeclaredType::Float32 => "float32",
            DeclaredType::Float64 => "float64",
            DeclaredType::Int8 => "int8",
            DeclaredType::UInt8 => "uint8",
            DeclaredType::Int16 => "int16",
            DeclaredType::UInt16 => "uint16",
            DeclaredType::Int32 => "int32",
            DeclaredType::UInt32 => "uint32",
            DeclaredType::Int64 => "int64",
            DeclaredType::UInt64 => "uint64",
        }
    }

    /// Narrow a value to what this type can hold.
    pub fn cast(self, v: f64) -> f64 {
        match self {
            DeclaredType::Float32 => v as f32 as f64,
            DeclaredType::Float64 => v,
            DeclaredType::Int8 => v as i8 as f64,
            DeclaredType::UInt8 => v as u8 as f64,
            DeclaredType::Int16 => v as i16 as f64,
            DeclaredType::UInt16 => v as u16 as f64,
            DeclaredType::Int32 => v as i32 as f64,
            DeclaredType::UInt32 => v as u32 as f64,
            DeclaredType::Int64 => v as i64 as f64,
            DeclaredType::UInt64 => v as u64 as f64,
        }
    }
}

impl fmt::Display for DeclaredType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Coordinate convention of the source file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Space {
    /// World/scanner millimeters (TCK).
    Rasmm,
    /// Voxel-scaled millimeters (TRK).
    Voxmm,
    #[default]
    Unknown,
}

impl Space {
    pub fn as_str(self) -> &'static str {
        match self {
            Space::Rasmm => "rasmm",
            Space::Voxmm => "voxmm",
            Space::Unknown => "unknown",
        }
    }
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Multi-component attribute attached either to vertices or to streamlines.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    /// Components per element.
    pub dims: usize,
    /// Flat values, `element_count * dims` long.
    pub values: Vec<f64>,
    pub declared_type: DeclaredType,
}

/// Per-vertex data.
pub type ScalarField = Field;
/// Per-streamline data.
pub type PropertyField = Field;

impl Field {
    pub fn new(dims: usize, values: Vec<f64>, declared_type: DeclaredType) -> Self {
        Field {
            dims,
            values,
            declared_type,
        }
    }

    /// Number of elements, ignoring a trailing partial element.
    pub fn element_count(&self) -> usize {
        if self.dims == 0 {
            0
        } else {
            self.values.len() / self.dims
        }
    }

    pub fn element(&self, i: usize) -> &[f64] {
        &self.values[i * self.dims..(i + 1) * self.dims]
    }
}

/// Streamlines stored as one flat vertex array plus start offsets.
#[derive(Debug, Clone, PartialEq)]
pub struct Tractogram {
    pub vertices: Vec<[f32; 3]>,
    /// Start index of each streamline plus a terminal entry equal to the
    /// vertex count.
    pub offsets: Vec<usize>,
    pub vertex_scalars: IndexMap<String, ScalarField>,
    pub fiber_properties: IndexMap<String, PropertyField>,
    pub metadata: IndexMap<String, String>,
    pub space: Space,
}

impl Default for Tractogram {
    fn default() -> Self {
        Tractogram {
            vertices: Vec::new(),
            offsets: vec![0],
            vertex_scalars: IndexMap::new(),
            fiber_properties: IndexMap::new(),
            metadata: IndexMap::new(),
            space: Space::Unknown,
        }
    }
}

impl Tractogram {
    pub fn new() -> Self {
        Self::default()
    }

    /// Build from a list of polylines.
    pub fn from_streamlines<I, S>(streamlines: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[[f32; 3]]>,
    {
        let mut t = Tractogram::new();
        for s in streamlines {
            t.push_streamline(s.as_ref());
        }
        t
    }

    pub fn push_streamline(&mut self, points: &[[f32; 3]]) {
        self.vertices.extend_from_slice(points);
        self.offsets.push(self.vertices.len());
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn streamline_count(&self) -> usize {
        self.offsets.len().saturating_sub(1)
    }

    pub fn streamline_range(&self, i: usize) -> Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    pub fn streamline(&self, i: usize) -> &[[f32; 3]] {
        &self.vertices[self.streamline_range(i)]
    }

    pub fn streamlines(&self) -> impl Iterator<Item = &[[f32; 3]]> + '_ {
        self.offsets.windows(2).map(|w| &self.vertices[w[0]..w[1]])
    }

    /// Vertex count of every streamline.
    pub fn lengths(&self) -> Vec<usize> {
        self.offsets.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Coordinates as one flat `x y z x y z ...` slice.
    pub fn flat_vertices(&self) -> &[f32] {
        self.vertices.as_flattened()
    }

    /// Check every structural invariant; an empty result means valid.
    pub fn validate(&self) -> Vec<Violation> {
        validate(self)
    }

    pub fn stats(&self) -> SummaryStats {
        stats(self)
    }
}

/// One broken invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    OffsetsEmpty,
    OffsetsStartNonZero { found: usize },
    OffsetsNotIncreasing { index: usize },
    OffsetsEndMismatch { last: usize, vertex_count: usize },
    NonFiniteVertex { index: usize },
    ZeroDims { field: String },
    ScalarLengthMismatch { field: String, expected: usize, found: usize },
    PropertyLengthMismatch { field: String, expected: usize, found: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::OffsetsEmpty => write!(f, "offsets is empty"),
            Violation::OffsetsStartNonZero { found } => {
                write!(f, "offsets must start at 0, found {found}")
            }
            Violation::OffsetsNotIncreasing { index } => {
                write!(f, "offsets not strictly increasing at index {index}")
            }
            Violation::OffsetsEndMismatch { last, vertex_count } => write!(
                f,
                "last offset {last} does not equal vertex count {vertex_count}"
            ),
            Violation::NonFiniteVertex { index } => {
                write!(f, "vertex {index} has a non-finite coordinate")
            }
            Violation::ZeroDims { field } => write!(f, "field {field:?} has zero dims"),
            Violation::ScalarLengthMismatch {
                field,
                expected,
                found,
            } => write!(
                f,
                "ScalarField length mismatch: {field:?} has {found} values, expected {expected}"
            ),
            Violation::PropertyLengthMismatch {
                field,
                expected,
                found,
            } => write!(
                f,
                "PropertyField length mismatch: {field:?} has {found} values, expected {expected}"
            ),
        }
    }
}

pub fn validate(t: &Tractogram) -> Vec<Violation> {
    let mut out = Vec::new();
    match t.offsets.first() {
        None => out.push(Violation::OffsetsEmpty),
        Some(&first) => {
            if first != 0 {
                out.push(Violation::OffsetsStartNonZero { found: first });
            }
            for (i, w) in t.offsets.windows(2).enumerate() {
                if w[1] <= w[0] {
                    out.push(Violation::OffsetsNotIncreasing { index: i + 1 });
                }
            }
            let last = *t.offsets.last().unwrap();
            if last != t.vertices.len() {
                out.push(Violation::OffsetsEndMismatch {
                    last,
                    vertex_count: t.vertices.len(),
                });
            }
        }
    }
    for (i, v) in t.vertices.iter().enumerate() {
        if !v.iter().all(|c| c.is_finite()) {
            out.push(Violation::NonFiniteVertex { index: i });
        }
    }
    let nv = t.vertex_count();
    let ns = t.streamline_count();
    for (name, field) in &t.vertex_scalars {
        if field.dims == 0 {
            out.push(Violation::ZeroDims { field: name.clone() });
        } else if field.values.len() != nv * field.dims {
            out.push(Violation::ScalarLengthMismatch {
                field: name.clone(),
                expected: nv * field.dims,
                found: field.values.len(),
            });
        }
    }
    for (name, field) in &t.fiber_properties {
        if field.dims == 0 {
            out.push(Violation::ZeroDims { field: name.clone() });
        } else if field.values.len() != ns * field.dims {
            out.push(Violation::PropertyLengthMismatch {
                field: name.clone(),
                expected: ns * field.dims,
                found: field.values.len(),
            });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributeKind {
    Vertex,
    Fiber,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeSummary {
    pub name: String,
    pub kind: AttributeKind,
    pub dims: usize,
    pub declared_type: DeclaredType,
    /// `None` for empty fields.
    pub range: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub streamline_count: usize,
    pub vertex_count: usize,
    /// Streamlines holding a single vertex.
    pub single_vertex_streamlines: usize,
    /// Per-axis `[min, max]`; `None` when there are no vertices.
    pub bbox: Option<[[f32; 2]; 3]>,
    pub attributes: Vec<AttributeSummary>,
}

fn value_range(values: &[f64]) -> Option<(f64, f64)> {
    values.iter().fold(None, |acc, &v| match acc {
        None => Some((v, v)),
        Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
    })
}

pub fn stats(t: &Tractogram) -> SummaryStats {
    let bbox = t.vertices.first().map(|first| {
        let mut b = [[first[0], first[0]], [first[1], first[1]], [first[2], first[2]]];
        for v in &t.vertices {
            for a in 0..3 {
                b[a][0] = b[a][0].min(v[a]);
                b[a][1] = b[a][1].max(v[a]);
            }
        }
        b
    });
    let summarize = |kind: AttributeKind| {
        move |(name, f): (&String, &Field)| AttributeSummary {
            name: name.clone(),
            kind,
            dims: f.dims,
            declared_type: f.declared_type,
            range: value_range(&f.values),
        }
    };
    let mut attributes: Vec<AttributeSummary> = t
        .vertex_scalars
        .iter()
        .map(summarize(AttributeKind::Vertex))
        .collect();
    attributes.extend(t.fiber_properties.iter().map(summarize(AttributeKind::Fiber)));
    SummaryStats {
        streamline_count: t.streamline_count(),
        vertex_count: t.vertex_count(),
        single_vertex_streamlines: t.offsets.windows(2).filter(|w| w[1] - w[0] == 1).count(),
        bbox,
        attributes,
    }
}
