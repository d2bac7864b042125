//! Compressed storage of tractography streamlines in glTF containers.

pub mod codec;
pub mod container;
pub mod gen;
pub mod io;
pub mod metrics;
pub mod model;
pub mod scalar;

pub use codec::{CodecConfig, CodecError};
pub use container::{decode_tko, encode_tko, ContainerError, TrakoDocument};
pub use io::{FormatTag, IoError};
pub use model::{DeclaredType, Field, Space, Tractogram};

pub type ErrorStats = metrics::ErrorStats<f64>;
pub type ErrorStatsF32 = metrics::ErrorStats<f32>;
