//! Lossy-but-bounded attribute codec.
//!
//! Float attributes run `quantize -> delta -> zigzag -> varint -> deflate`.
//! Integer attributes skip quantization and restore exactly. The payload is
//! an optional raw DEFLATE wrapper around LEB128 varints of zigzagged
//! per-component deltas, elements in original order with components
//! interleaved.

mod deflate;
mod delta;
mod quantize;
mod varint;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::DeclaredType;
use crate::scalar::Scalar;

pub use deflate::{deflate_level, deflate_stage, inflate_stage, MAX_LEVEL};
pub use delta::{delta_decode, delta_encode, unzigzag, zigzag};
pub use quantize::{
    check_bits, dequantize, levels, quantize, QuantizationParams, MAX_BITS, MIN_BITS,
};
pub use varint::{read_varint, varint_decode, varint_encode, write_varint, MAX_VARINT_LEN};

use quantize::Quantizer;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CodecError {
    #[error("non-finite input value at index {index}")]
    NonFiniteInput { index: usize },
    #[error("code {code} at index {index} outside [0, {max}]")]
    OutOfRangeCode { index: usize, code: i64, max: u32 },
    #[error("quantization bits {0} outside the allowed range 1-31")]
    InvalidBits(u8),
    #[error("compression level {0} outside the allowed range 0-10")]
    InvalidLevel(u8),
    #[error("invalid quantization parameters: {0}")]
    InvalidParams(String),
    #[error("truncated varint at byte {offset}")]
    TruncatedVarint { offset: usize },
    #[error("overlong or non-minimal varint at byte {offset}")]
    OverlongVarint { offset: usize },
    #[error("corrupt stream: {0}")]
    CorruptStream(String),
    #[error("length mismatch: expected {expected} values, found {found}")]
    LengthMismatch { expected: usize, found: usize },
}

/// Pipeline stage tags, in canonical application order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Quantize,
    Delta,
    Zigzag,
    Varint,
    Deflate,
}

const CANONICAL_ORDER: [Stage; 5] = [
    Stage::Quantize,
    Stage::Delta,
    Stage::Zigzag,
    Stage::Varint,
    Stage::Deflate,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Prediction {
    #[default]
    Delta,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodecConfig {
    pub bits: u8,
    /// 0 disables DEFLATE; 1..=9 map to the DEFLATE level; 10 maps to 9.
    pub compression_level: u8,
    pub prediction: Prediction,
    pub lossless_integers: bool,
}

impl Default for CodecConfig {
    fn default() -> Self {
        CodecConfig {
            bits: 14,
            compression_level: 10,
            prediction: Prediction::Delta,
            lossless_integers: true,
        }
    }
}

impl CodecConfig {
    pub fn with_bits(bits: u8) -> Self {
        CodecConfig {
            bits,
            ..Default::default()
        }
    }

    pub fn check(&self) -> Result<(), CodecError> {
        check_bits(self.bits)?;
        if self.compression_level > MAX_LEVEL {
            return Err(CodecError::InvalidLevel(self.compression_level));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompressedAttribute {
    pub payload: Vec<u8>,
    pub params: QuantizationParams,
    pub stages: Vec<Stage>,
    pub declared_type: DeclaredType,
}

impl CompressedAttribute {
    pub fn has_stage(&self, stage: Stage) -> bool {
        self.stages.contains(&stage)
    }

    /// Largest reconstruction error of component `c`; 0 on lossless paths.
    pub fn error_bound(&self, c: usize) -> f64 {
        if self.has_stage(Stage::Quantize) {
            self.params.error_bound(c)
        } else {
            0.0
        }
    }
}

/// Stages must be an ordered subset of the canonical order and include
/// `varint`.
fn check_stages(stages: &[Stage]) -> Result<(), CodecError> {
    let mut rank = 0;
    for s in stages {
        let pos = CANONICAL_ORDER
            .iter()
            .position(|c| c == s)
            .expect("all stages are canonical");
        if pos < rank {
            return Err(CodecError::CorruptStream(format!(
                "stage list out of order: {stages:?}"
            )));
        }
        rank = pos + 1;
    }
    if !stages.contains(&Stage::Varint) {
        return Err(CodecError::CorruptStream("stage list lacks varint".into()));
    }
    Ok(())
}

/// Integer values, when every value is integral and fits an `i64`.
fn as_integers<T: Scalar>(values: &[T]) -> Option<Vec<i64>> {
    const LIMIT: f64 = 9.223_372_036_854_775_807e18;
    values
        .iter()
        .map(|v| {
            let v = v.to_f64_lossless();
            (v.fract() == 0.0 && v.abs() < LIMIT).then_some(v as i64)
        })
        .collect()
}

fn pack(
    ints: impl Iterator<Item = i64>,
    components: usize,
    len: usize,
    prediction: Prediction,
    zigzagged: bool,
) -> Vec<u8> {
    let mut prev = vec![0i64; components];
    let mut out = Vec::with_capacity(len * 2);
    for (i, v) in ints.enumerate() {
        let c = i % components;
        let s = match prediction {
            Prediction::Delta if i >= components => v.wrapping_sub(prev[c]),
            _ => v,
        };
        prev[c] = v;
        let u = if zigzagged { zigzag(s) } else { s as u64 };
        write_varint(u, &mut out);
    }
    out
}

/// Encode `values` (interleaved, `dims` per element).
pub fn encode_attribute<T: Scalar>(
    values: &[T],
    dims: usize,
    config: &CodecConfig,
    declared_type: DeclaredType,
) -> Result<CompressedAttribute, CodecError> {
    config.check()?;
    let params = QuantizationParams::from_data(values, dims, config.bits)?;
    let lossless = if config.lossless_integers && declared_type.is_integer() {
        as_integers(values)
    } else {
        None
    };

    let mut stages = Vec::with_capacity(5);
    let raw = match lossless {
        Some(ints) => {
            if config.prediction == Prediction::Delta {
                stages.push(Stage::Delta);
            }
            pack(ints.into_iter(), dims, values.len(), config.prediction, true)
        }
        None => {
            stages.push(Stage::Quantize);
            if config.prediction == Prediction::Delta {
                stages.push(Stage::Delta);
            }
            let qz = Quantizer::new(&params)?;
            let codes = values
                .iter()
                .enumerate()
                .map(|(i, v)| qz.encode(v.to_f64_lossless(), i % dims) as i64);
            pack(codes, dims, values.len(), config.prediction, true)
        }
    };
    stages.push(Stage::Zigzag);
    stages.push(Stage::Varint);

    let payload = if deflate_level(config.compression_level).is_some() {
        stages.push(Stage::Deflate);
        deflate_stage(&raw, config.compression_level)?
    } else {
        raw
    };
    Ok(CompressedAttribute {
        payload,
        params,
        stages,
        declared_type,
    })
}

/// Undo the varint/zigzag/delta stages, handing each integer and its
/// component to `sink`.
fn unpack(
    ca: &CompressedAttribute,
    mut sink: impl FnMut(usize, usize, i64) -> Result<(), CodecError>,
) -> Result<(), CodecError> {
    check_stages(&ca.stages)?;
    let inflated;
    let bytes: &[u8] = if ca.has_stage(Stage::Deflate) {
        inflated = inflate_stage(&ca.payload)?;
        &inflated
    } else {
        &ca.payload
    };
    let k = ca.params.components;
    if k == 0 {
        return Err(CodecError::InvalidParams("components must be >= 1".into()));
    }
    let expected = ca.params.count.checked_mul(k).ok_or_else(|| {
        CodecError::InvalidParams("element count overflows".into())
    })?;
    let zigzagged = ca.has_stage(Stage::Zigzag);
    let delta = ca.has_stage(Stage::Delta);
    let mut acc = vec![0i64; k];
    let mut pos = 0;
    let mut i = 0;
    while pos < bytes.len() {
        if i == expected {
            return Err(CodecError::LengthMismatch {
                expected,
                found: expected + varint_decode(&bytes[pos..])?.len(),
            });
        }
        let u = read_varint(bytes, &mut pos)?;
        let s = if zigzagged { unzigzag(u) } else { u as i64 };
        let c = i % k;
        let v = if delta && i >= k { acc[c].wrapping_add(s) } else { s };
        acc[c] = v;
        sink(i, c, v)?;
        i += 1;
    }
    if i != expected {
        return Err(CodecError::LengthMismatch { expected, found: i });
    }
    Ok(())
}

/// Invert [`encode_attribute`]; output has `count * components` values.
pub fn decode_attribute<T: Scalar>(ca: &CompressedAttribute) -> Result<Vec<T>, CodecError> {
    let mut out = Vec::with_capacity(ca.params.count * ca.params.components);
    if ca.has_stage(Stage::Quantize) {
        let qz = Quantizer::new(&ca.params)?;
        let max = ca.params.levels();
        unpack(ca, |i, c, v| {
            if v < 0 || v > max as i64 {
                return Err(CodecError::OutOfRangeCode {
                    index: i,
                    code: v,
                    max,
                });
            }
            out.push(T::from_f64_nearest(qz.decode(v as u32, c)));
            Ok(())
        })?;
    } else {
        unpack(ca, |_, _, v| {
            out.push(T::from_f64_nearest(v as f64));
            Ok(())
        })?;
    }
    Ok(out)
}

/// Lossless encoding of streamline offsets: the deltas are the streamline
/// lengths.
pub fn encode_offsets(offsets: &[usize], compression_level: u8) -> Result<CompressedAttribute, CodecError> {
    if compression_level > MAX_LEVEL {
        return Err(CodecError::InvalidLevel(compression_level));
    }
    let raw = pack(
        offsets.iter().map(|&o| o as i64),
        1,
        offsets.len(),
        Prediction::Delta,
        false,
    );
    let mut stages = vec![Stage::Delta, Stage::Varint];
    let payload = if deflate_level(compression_level).is_some() {
        stages.push(Stage::Deflate);
        deflate_stage(&raw, compression_level)?
    } else {
        raw
    };
    let last = offsets.last().copied().unwrap_or(0) as f64;
    Ok(CompressedAttribute {
        payload,
        params: QuantizationParams {
            bits: MAX_BITS,
            min_values: vec![0.0],
            max_values: vec![last],
            components: 1,
            count: offsets.len(),
        },
        stages,
        declared_type: DeclaredType::UInt32,
    })
}

pub fn decode_offsets(ca: &CompressedAttribute) -> Result<Vec<usize>, CodecError> {
    if ca.has_stage(Stage::Quantize) || ca.params.components != 1 {
        return Err(CodecError::CorruptStream(
            "offsets must be a lossless single-component stream".into(),
        ));
    }
    let mut out: Vec<usize> = Vec::with_capacity(ca.params.count);
    unpack(ca, |i, _, v| {
        let ok = match out.last() {
            None => v == 0,
            Some(&prev) => v > prev as i64,
        };
        if !ok {
            return Err(CodecError::CorruptStream(format!(
                "offset {v} at index {i} breaks monotonicity"
            )));
        }
        out.push(v as usize);
        Ok(())
    })?;
    Ok(out)
}
