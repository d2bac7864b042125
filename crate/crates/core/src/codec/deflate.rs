//! Optional raw DEFLATE (RFC 1951) stage.

use std::io::{Read, Write};

use flate2::read::DeflateDecoder;
use flate2::write::DeflateEncoder;
use flate2::Compression;

use super::CodecError;

/// Highest accepted compression level.
pub const MAX_LEVEL: u8 = 10;

/// DEFLATE level for a compression level; `None` disables the stage.
pub fn deflate_level(level: u8) -> Option<u32> {
    match level {
        0 => None,
        1..=9 => Some(level as u32),
        _ => Some(9),
    }
}

/// Compress `bytes` at level `level` (0..=10). Level 0 returns the input
/// unchanged.
pub fn deflate_stage(bytes: &[u8], level: u8) -> Result<Vec<u8>, CodecError> {
    if level > MAX_LEVEL {
        return Err(CodecError::InvalidLevel(level));
    }
    let Some(l) = deflate_level(level) else {
        return Ok(bytes.to_vec());
    };
    let mut enc = DeflateEncoder::new(Vec::with_capacity(bytes.len() / 2 + 16), Compression::new(l));
    enc.write_all(bytes)
        .and_then(|_| enc.finish())
        .map_err(|e| CodecError::CorruptStream(format!("deflate failed: {e}")))
}

pub fn inflate_stage(bytes: &[u8]) -> Result<Vec<u8>, CodecError> {
    let mut out = Vec::with_capacity(bytes.len() * 3);
    DeflateDecoder::new(bytes)
        .read_to_end(&mut out)
        .map_err(|e| CodecError::CorruptStream(format!("inflate failed: {e}")))?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn level_zero_is_identity() {
        let data = b"abcabcabc".to_vec();
        assert_eq!(deflate_stage(&data, 0).unwrap(), data);
    }

    #[test]
    fn level_mapping() {
        assert_eq!(deflate_level(0), None);
        assert_eq!(deflate_level(1), Some(1));
        assert_eq!(deflate_level(9), Some(9));
        assert_eq!(deflate_level(10), Some(9));
        assert_eq!(deflate_stage(b"x", 11), Err(CodecError::InvalidLevel(11)));
    }

    #[test]
    fn levels_nine_and_ten_coincide() {
        let data: Vec<u8> = (0..5000u32).map(|i| (i * 7 % 13) as u8).collect();
        assert_eq!(deflate_stage(&data, 9).unwrap(), deflate_stage(&data, 10).unwrap());
    }

    #[test]
    fn garbage_is_rejected() {
        assert!(matches!(
            inflate_stage(&[0xff, 0xff, 0xff, 0xff]),
            Err(CodecError::CorruptStream(_))
        ));
    }

    proptest! {
        #[test]
        fn inflate_inverts_deflate(
            data in proptest::collection::vec(any::<u8>(), 0..2000),
            level in 1u8..=10,
        ) {
            let packed = deflate_stage(&data, level).unwrap();
            prop_assert_eq!(inflate_stage(&packed).unwrap(), data);
        }
    }
}
