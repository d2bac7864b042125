//! Uniform per-component quantization onto `2^q - 1` steps.
//!
//! A component with range `[min, max]` maps `v` to
//! `round((v - min) * (2^q - 1) / (max - min))`, ties away from zero, so both
//! endpoints are representable. A degenerate range maps everything to 0.

use serde::{Deserialize, Serialize};

use super::CodecError;
use crate::scalar::Scalar;

pub const MIN_BITS: u8 = 1;
pub const MAX_BITS: u8 = 31;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizationParams {
    pub bits: u8,
    pub min_values: Vec<f64>,
    pub max_values: Vec<f64>,
    pub components: usize,
    pub count: usize,
}

impl QuantizationParams {
    /// Tightest per-component range over `values` (interleaved, `components`
    /// per element).
    pub fn from_data<T: Scalar>(
        values: &[T],
        components: usize,
        bits: u8,
    ) -> Result<Self, CodecError> {
        check_bits(bits)?;
        if components == 0 {
            return Err(CodecError::InvalidParams("components must be >= 1".into()));
        }
        if values.len() % components != 0 {
            return Err(CodecError::LengthMismatch {
                expected: values.len().next_multiple_of(components),
                found: values.len(),
            });
        }
        let mut min_values = vec![f64::INFINITY; components];
        let mut max_values = vec![f64::NEG_INFINITY; components];
        for (i, v) in values.iter().enumerate() {
            let v = v.to_f64_lossless();
            if !v.is_finite() {
                return Err(CodecError::NonFiniteInput { index: i });
            }
            let c = i % components;
            min_values[c] = min_values[c].min(v);
            max_values[c] = max_values[c].max(v);
        }
        if values.is_empty() {
            min_values.fill(0.0);
            max_values.fill(0.0);
        }
        Ok(QuantizationParams {
            bits,
            min_values,
            max_values,
            components,
            count: values.len() / components,
        })
    }

    /// Largest code, `2^q - 1`.
    pub fn levels(&self) -> u32 {
        levels(self.bits)
    }

    pub fn range(&self, c: usize) -> f64 {
        self.max_values[c] - self.min_values[c]
    }

    /// Distance between adjacent reconstruction points of component `c`.
    pub fn step(&self, c: usize) -> f64 {
        self.range(c) / self.levels() as f64
    }

    /// Worst-case absolute reconstruction error of component `c`.
    pub fn error_bound(&self, c: usize) -> f64 {
        self.range(c) / (2.0 * self.levels() as f64)
    }

    pub fn check(&self) -> Result<(), CodecError> {
        check_bits(self.bits)?;
        if self.components == 0
            || self.min_values.len() != self.components
            || self.max_values.len() != self.components
        {
            return Err(CodecError::InvalidParams(
                "min/max length must equal components".into(),
            ));
        }
        for c in 0..self.components {
            let (lo, hi) = (self.min_values[c], self.max_values[c]);
            if !(lo.is_finite() && hi.is_finite()) || lo > hi {
                return Err(CodecError::InvalidParams(format!(
                    "component {c} has invalid range [{lo}, {hi}]"
                )));
            }
            if !(hi - lo).is_finite() {
                return Err(CodecError::InvalidParams(format!(
                    "component {c} range overflows"
                )));
            }
        }
        Ok(())
    }
}

pub fn check_bits(bits: u8) -> Result<(), CodecError> {
    if (MIN_BITS..=MAX_BITS).contains(&bits) {
        Ok(())
    } else {
        Err(CodecError::InvalidBits(bits))
    }
}

#[inline]
pub fn levels(bits: u8) -> u32 {
    ((1u64 << bits) - 1) as u32
}

/// Maps values onto integer codes for one parameter set.
#[derive(Debug, Clone)]
pub(crate) struct Quantizer<'a> {
    params: &'a QuantizationParams,
    levels: f64,
}

impl<'a> Quantizer<'a> {
    pub(crate) fn new(params: &'a QuantizationParams) -> Result<Self, CodecError> {
        params.check()?;
        Ok(Quantizer {
            params,
            levels: params.levels() as f64,
        })
    }

    #[inline]
    pub(crate) fn encode(&self, v: f64, c: usize) -> u32 {
        let lo = self.params.min_values[c];
        let range = self.params.max_values[c] - lo;
        if range <= 0.0 {
            return 0;
        }
        let q = ((v - lo) * self.levels / range).round();
        q.clamp(0.0, self.levels) as u32
    }

    #[inline]
    pub(crate) fn decode(&self, code: u32, c: usize) -> f64 {
        let lo = self.params.min_values[c];
        let hi = self.params.max_values[c];
        if code == 0 || hi <= lo {
            lo
        } else if code as f64 == self.levels {
            hi
        } else {
            lo + code as f64 * (hi - lo) / self.levels
        }
    }
}

/// Quantize interleaved `values` with `params`.
pub fn quantize<T: Scalar>(values: &[T], params: &QuantizationParams) -> Result<Vec<u32>, CodecError> {
    let qz = Quantizer::new(params)?;
    let k = params.components;
    if values.len() != params.count * k {
        return Err(CodecError::LengthMismatch {
            expected: params.count * k,
            found: values.len(),
        });
    }
    values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let v = v.to_f64_lossless();
            if v.is_finite() {
                Ok(qz.encode(v, i % k))
            } else {
                Err(CodecError::NonFiniteInput { index: i })
            }
        })
        .collect()
}

/// Reconstruct values from integer codes.
pub fn dequantize<T: Scalar>(codes: &[u32], params: &QuantizationParams) -> Result<Vec<T>, CodecError> {
    let qz = Quantizer::new(params)?;
    let k = params.components;
    let max = params.levels();
    codes
        .iter()
        .enumerate()
        .map(|(i, &code)| {
            if code > max {
                Err(CodecError::OutOfRangeCode {
                    index: i,
                    code: code as i64,
                    max,
                })
            } else {
                Ok(T::from_f64_nearest(qz.decode(code, i % k)))
            }
        })
        .collect()
}
