//! Delta prediction and zigzag mapping for interleaved integer streams.

/// Element 0 is emitted verbatim; every later element emits the difference
/// to the previous element of the same component.
pub fn delta_encode(values: &[i64], components: usize) -> Vec<i64> {
    assert!(components > 0, "components must be positive");
    let mut out = Vec::with_capacity(values.len());
    for (i, &v) in values.iter().enumerate() {
        if i < components {
            out.push(v);
        } else {
            out.push(v.wrapping_sub(values[i - components]));
        }
    }
    out
}

pub fn delta_decode(deltas: &[i64], components: usize) -> Vec<i64> {
    assert!(components > 0, "components must be positive");
    let mut out: Vec<i64> = Vec::with_capacity(deltas.len());
    for (i, &d) in deltas.iter().enumerate() {
        if i < components {
            out.push(d);
        } else {
            let prev = out[i - components];
            out.push(prev.wrapping_add(d));
        }
    }
    out
}

#[inline]
pub fn zigzag(s: i64) -> u64 {
    ((s << 1) ^ (s >> 63)) as u64
}

#[inline]
pub fn unzigzag(u: u64) -> i64 {
    ((u >> 1) as i64) ^ -((u & 1) as i64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_component() {
        assert_eq!(delta_encode(&[5, 5, 5], 1), vec![5, 0, 0]);
    }

    #[test]
    fn interleaved_components() {
        assert_eq!(
            delta_encode(&[0, 0, 1, 2, 3, 1], 2),
            vec![0, 0, 1, 2, 2, -1]
        );
        assert_eq!(delta_decode(&[0, 0, 1, 2, 2, -1], 2), vec![0, 0, 1, 2, 3, 1]);
    }

    #[test]
    fn zigzag_values() {
        assert_eq!(zigzag(0), 0);
        assert_eq!(zigzag(-1), 1);
        assert_eq!(zigzag(1), 2);
        assert_eq!(zigzag(-2), 3);
        assert_eq!(zigzag(i64::MAX), u64::MAX - 1);
        assert_eq!(zigzag(i64::MIN), u64::MAX);
    }

    #[test]
    fn zigzag_matches_definition_at_32bit_boundaries() {
        for s in [
            0i64,
            1,
            -1,
            i32::MAX as i64,
            i32::MIN as i64,
            i32::MAX as i64 - 1,
            i32::MIN as i64 + 1,
        ] {
            let expected = if s >= 0 { 2 * s as u64 } else { (-2 * s - 1) as u64 };
            assert_eq!(zigzag(s), expected);
            assert_eq!(unzigzag(zigzag(s)), s);
        }
    }

    proptest! {
        #[test]
        fn zigzag_bijective(s in any::<i64>()) {
            prop_assert_eq!(unzigzag(zigzag(s)), s);
        }

        #[test]
        fn zigzag_32bit_range(s in i32::MIN..=i32::MAX) {
            let s = s as i64;
            prop_assert_eq!(unzigzag(zigzag(s)), s);
            prop_assert!(zigzag(s) <= u32::MAX as u64);
        }

        #[test]
        fn delta_round_trip(
            values in proptest::collection::vec(any::<i64>(), 0..120),
            components in 1usize..5,
        ) {
            let enc = delta_encode(&values, components);
            prop_assert_eq!(delta_decode(&enc, components), values);
        }
    }
}
