//! Unsigned LEB128: 7 payload bits per byte, high bit set on every byte
//! except the last. Decoding accepts only the canonical minimal form.

use super::CodecError;

/// Longest canonical encoding of a `u64`.
pub const MAX_VARINT_LEN: usize = 10;

#[inline]
pub fn write_varint(mut v: u64, out: &mut Vec<u8>) {
    while v >= 0x80 {
        out.push((v as u8) | 0x80);
        v >>= 7;
    }
    out.push(v as u8);
}

/// Decode one varint starting at `*pos`, advancing `*pos` past it.
#[inline]
pub fn read_varint(bytes: &[u8], pos: &mut usize) -> Result<u64, CodecError> {
    let start = *pos;
    let mut value = 0u64;
    let mut shift = 0u32;
    loop {
        let Some(&b) = bytes.get(*pos) else {
            return Err(CodecError::TruncatedVarint { offset: start });
        };
        *pos += 1;
        let len = *pos - start;
        if len == MAX_VARINT_LEN && b > 0x01 {
            // Tenth byte may only carry the top bit of a u64.
            return Err(CodecError::OverlongVarint { offset: start });
        }
        value |= u64::from(b & 0x7f) << shift;
        if b & 0x80 == 0 {
            if b == 0 && len > 1 {
                return Err(CodecError::OverlongVarint { offset: start });
            }
            return Ok(value);
        }
        shift += 7;
    }
}

pub fn varint_encode(values: &[u64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(values.len());
    for &v in values {
        write_varint(v, &mut out);
    }
    out
}

/// Decode a byte sequence made entirely of varints.
pub fn varint_decode(bytes: &[u8]) -> Result<Vec<u64>, CodecError> {
    let mut out = Vec::with_capacity(bytes.len());
    let mut pos = 0;
    while pos < bytes.len() {
        out.push(read_varint(bytes, &mut pos)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn known_encodings() {
        assert_eq!(varint_encode(&[0]), vec![0x00]);
        assert_eq!(varint_encode(&[1]), vec![0x01]);
        assert_eq!(varint_encode(&[127]), vec![0x7f]);
        assert_eq!(varint_encode(&[128]), vec![0x80, 0x01]);
        assert_eq!(varint_encode(&[300]), vec![0xAC, 0x02]);
        assert_eq!(varint_encode(&[u64::MAX]).len(), MAX_VARINT_LEN);
    }

    #[test]
    fn rejects_truncated() {
        assert_eq!(
            varint_decode(&[0x05, 0x80]),
            Err(CodecError::TruncatedVarint { offset: 1 })
        );
    }

    #[test]
    fn rejects_non_minimal() {
        assert_eq!(
            varint_decode(&[0x80, 0x00]),
            Err(CodecError::OverlongVarint { offset: 0 })
        );
        assert_eq!(
            varint_decode(&[0x81, 0x80, 0x00]),
            Err(CodecError::OverlongVarint { offset: 0 })
        );
    }

    #[test]
    fn rejects_overlong() {
        let mut bytes = vec![0xff; 9];
        bytes.push(0x02);
        assert_eq!(
            varint_decode(&bytes),
            Err(CodecError::OverlongVarint { offset: 0 })
        );
        let mut bytes = vec![0x80; 10];
        bytes.push(0x01);
        assert!(varint_decode(&bytes).is_err());
        let mut max = vec![0xff; 9];
        max.push(0x01);
        assert_eq!(varint_decode(&max), Ok(vec![u64::MAX]));
    }

    proptest! {
        #[test]
        fn round_trip(values in proptest::collection::vec(any::<u64>(), 0..200)) {
            let bytes = varint_encode(&values);
            prop_assert_eq!(varint_decode(&bytes).unwrap(), values);
        }

        #[test]
        fn length_is_minimal(v in any::<u64>()) {
            let bits = 64 - v.leading_zeros() as usize;
            let expected = bits.div_ceil(7).max(1);
            prop_assert_eq!(varint_encode(&[v]).len(), expected);
        }
    }
}
