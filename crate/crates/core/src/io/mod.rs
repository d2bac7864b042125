//! Readers and writers for TCK, TRK and legacy VTK polydata files, plus
//! format detection for those and the `.tko` container.

pub mod tck;
pub mod trk;
pub mod vtk;

use std::fmt;
use std::path::Path;

use thiserror::Error;

use crate::model::Tractogram;

pub use tck::{read_tck, write_tck};
pub use trk::{read_trk, write_trk, TRK_HEADER_KEYS};
pub use vtk::{read_vtk, write_vtk, VtkMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FormatTag {
    Tck,
    Trk,
    VtkLegacyAscii,
    VtkLegacyBinary,
    TkoJson,
    TkoBinary,
}

impl FormatTag {
    pub fn name(self) -> &'static str {
        match self {
            FormatTag::Tck => "TCK",
            FormatTag::Trk => "TRK",
            FormatTag::VtkLegacyAscii => "VTK (ASCII)",
            FormatTag::VtkLegacyBinary => "VTK (binary)",
            FormatTag::TkoJson => "TKO (JSON)",
            FormatTag::TkoBinary => "TKO (binary)",
        }
    }

    pub fn is_tko(self) -> bool {
        matches!(self, FormatTag::TkoJson | FormatTag::TkoBinary)
    }
}

impl fmt::Display for FormatTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IoError {
    #[error("unrecognized file format")]
    UnknownFormat,
    #[error("{format}: malformed header at byte {offset}: {reason}")]
    MalformedHeader {
        format: FormatTag,
        offset: usize,
        reason: String,
    },
    #[error("{format}: body truncated at byte {offset}")]
    TruncatedBody { format: FormatTag, offset: usize },
    #[error("{format}: unsupported datatype {datatype:?} at byte {offset}")]
    UnsupportedDatatype {
        format: FormatTag,
        offset: usize,
        datatype: String,
    },
    #[error("{format}: bad magic at byte 0")]
    BadMagic { format: FormatTag },
    #[error("TRK: hdr_size is {0}, expected 1000 (byte 996)")]
    HeaderSizeMismatch(i32),
    #[error("TRK: header declares {declared} streamlines but the body holds {found} (byte {offset})")]
    CountMismatch {
        declared: usize,
        found: usize,
        offset: usize,
    },
    #[error("VTK: unsupported dataset {dataset:?} at byte {offset}")]
    UnsupportedDataset { dataset: String, offset: usize },
    #[error("VTK: unsupported section {section:?} at byte {offset}")]
    UnsupportedSection { section: String, offset: usize },
    #[error("VTK: POINTS of type {datatype:?} at byte {offset}; expected float or double")]
    NonFloatPoints { datatype: String, offset: usize },
    #[error("{format}: non-finite coordinate at byte {offset}")]
    NonFiniteCoordinate { format: FormatTag, offset: usize },
    #[error("{format}: {reason} at byte {offset}")]
    Syntax {
        format: FormatTag,
        offset: usize,
        reason: String,
    },
}

impl IoError {
    /// Byte offset the error refers to, when there is one.
    pub fn offset(&self) -> Option<usize> {
        match self {
            IoError::UnknownFormat => None,
            IoError::BadMagic { .. } => Some(0),
            IoError::HeaderSizeMismatch(_) => Some(996),
            IoError::MalformedHeader { offset, .. }
            | IoError::TruncatedBody { offset, .. }
            | IoError::UnsupportedDatatype { offset, .. }
            | IoError::CountMismatch { offset, .. }
            | IoError::UnsupportedDataset { offset, .. }
            | IoError::UnsupportedSection { offset, .. }
            | IoError::NonFloatPoints { offset, .. }
            | IoError::NonFiniteCoordinate { offset, .. }
            | IoError::Syntax { offset, .. } => Some(*offset),
        }
    }
}

fn extension(hint: &str) -> Option<String> {
    Path::new(hint)
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
}

/// Identify a file from its leading bytes, using the filename only to
/// settle cases the bytes leave open.
pub fn detect_format(leading_bytes: &[u8], filename_hint: &str) -> Result<FormatTag, IoError> {
    let b = leading_bytes;
    if b.starts_with(b"mrtrix tracks") {
        return Ok(FormatTag::Tck);
    }
    if b.starts_with(b"TRACK") {
        return Ok(FormatTag::Trk);
    }
    if b.starts_with(b"glTF") {
        return Ok(FormatTag::TkoBinary);
    }
    if b.starts_with(b"# vtk DataFile") {
        return vtk::detect_mode(b)
            .map(|m| match m {
                VtkMode::Ascii => FormatTag::VtkLegacyAscii,
                VtkMode::Binary => FormatTag::VtkLegacyBinary,
            })
            .ok_or(IoError::UnknownFormat);
    }
    let trimmed = b.trim_ascii_start();
    if trimmed.first() == Some(&b'{') {
        match serde_json::from_slice::<serde_json::Value>(trimmed) {
            Ok(v) if v.get("asset").is_some() => return Ok(FormatTag::TkoJson),
            Ok(_) => {}
            // Leading bytes of a larger document.
            Err(e) if e.is_eof() => {
                let ext = extension(filename_hint);
                let looks_gltf = trimmed.windows(7).any(|w| w == b"\"asset\"");
                if looks_gltf || matches!(ext.as_deref(), Some("tko" | "gltf")) {
                    return Ok(FormatTag::TkoJson);
                }
            }
            Err(_) => {}
        }
    }
    Err(IoError::UnknownFormat)
}

/// Format a tractogram should be written as, chosen from a file extension.
pub fn format_for_extension(path: &str) -> Option<FormatTag> {
    match extension(path)?.as_str() {
        "tck" => Some(FormatTag::Tck),
        "trk" => Some(FormatTag::Trk),
        "vtk" => Some(FormatTag::VtkLegacyBinary),
        "tko" | "gltf" => Some(FormatTag::TkoJson),
        "glb" => Some(FormatTag::TkoBinary),
        _ => None,
    }
}

/// Parse any of the plain tractography formats.
pub fn read_tractogram(bytes: &[u8], filename_hint: &str) -> Result<(Tractogram, FormatTag), IoError> {
    let format = detect_format(bytes, filename_hint)?;
    let t = match format {
        FormatTag::Tck => read_tck(bytes)?,
        FormatTag::Trk => read_trk(bytes)?,
        FormatTag::VtkLegacyAscii | FormatTag::VtkLegacyBinary => read_vtk(bytes)?,
        FormatTag::TkoJson | FormatTag::TkoBinary => {
            return Err(IoError::Syntax {
                format,
                offset: 0,
                reason: "container files are read through the container module".into(),
            })
        }
    };
    Ok((t, format))
}

/// Serialize to one of the plain tractography formats.
///
/// # Panics
/// On a `.tko` format tag.
pub fn write_tractogram(t: &Tractogram, format: FormatTag) -> Vec<u8> {
    match format {
        FormatTag::Tck => write_tck(t),
        FormatTag::Trk => write_trk(t),
        FormatTag::VtkLegacyAscii => write_vtk(t, VtkMode::Ascii),
        FormatTag::VtkLegacyBinary => write_vtk(t, VtkMode::Binary),
        FormatTag::TkoJson | FormatTag::TkoBinary => {
            panic!("container formats are written through the container module")
        }
    }
}

/// Attributes `format` cannot represent and would drop on write.
pub fn dropped_fields(t: &Tractogram, format: FormatTag) -> Vec<String> {
    match format {
        FormatTag::Tck => t
            .vertex_scalars
            .keys()
            .chain(t.fiber_properties.keys())
            .cloned()
            .collect(),
        FormatTag::Trk => trk::dropped_fields(t),
        _ => Vec::new(),
    }
}
