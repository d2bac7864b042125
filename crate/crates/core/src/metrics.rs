//! Compression and fidelity measures between an original tractogram and its
//! restoration.

use std::fmt::Write as _;

use indexmap::IndexMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Field, Tractogram};
use crate::scalar::Scalar;

pub const DEFAULT_BINS: usize = 128;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("original size must be positive")]
    ZeroOriginalSize,
    #[error("compressed size must be positive")]
    ZeroCompressedSize,
    #[error("topology mismatch: {0}")]
    TopologyMismatch(String),
    #[error("streamline count mismatch: {expected} vs {found}")]
    StreamlineCountMismatch { expected: usize, found: usize },
    #[error("field mismatch: {0}")]
    FieldMismatch(String),
    #[error("tractogram has no vertices")]
    EmptyTractogram,
    #[error("need at least 2 bins, got {0}")]
    InvalidBins(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ErrorStats<T> {
    pub min: T,
    pub max: T,
    pub mean: T,
    pub std: T,
}

impl<T: Scalar> ErrorStats<T> {
    /// Population statistics; all zeros for an empty sequence.
    pub fn from_errors(errors: &[T]) -> Self {
        if errors.is_empty() {
            return ErrorStats {
                min: T::zero(),
                max: T::zero(),
                mean: T::zero(),
                std: T::zero(),
            };
        }
        // Welford with the mean clamped into [min, max] against rounding.
        let mut min = T::infinity();
        let mut max = T::neg_infinity();
        let mut mean = T::zero();
        let mut m2 = T::zero();
        for (i, &e) in errors.iter().enumerate() {
            min = min.min(e);
            max = max.max(e);
            let n = T::from_usize(i + 1).unwrap();
            let d = e - mean;
            mean = mean + d / n;
            m2 = m2 + d * (e - mean);
        }
        let n = T::from_usize(errors.len()).unwrap();
        ErrorStats {
            min,
            max,
            mean: mean.max(min).min(max),
            std: (m2 / n).max(T::zero()).sqrt(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.max == T::zero()
    }
}

/// Percentage size reduction.
pub fn compression_ratio(original_size: f64, compressed_size: f64) -> Result<f64, MetricsError> {
    if !(original_size > 0.0) {
        return Err(MetricsError::ZeroOriginalSize);
    }
    Ok(100.0 * (1.0 - compressed_size / original_size))
}

pub fn compression_factor(original_size: f64, compressed_size: f64) -> Result<f64, MetricsError> {
    if !(compressed_size > 0.0) {
        return Err(MetricsError::ZeroCompressedSize);
    }
    Ok(original_size / compressed_size)
}

fn distance<T: Scalar>(a: &[f32; 3], b: &[f32; 3]) -> T {
    let mut s = T::zero();
    for k in 0..3 {
        let d = T::from_f32(a[k]).unwrap() - T::from_f32(b[k]).unwrap();
        s = s + d * d;
    }
    s.sqrt()
}

fn check_topology(orig: &Tractogram, restored: &Tractogram) -> Result<(), MetricsError> {
    if orig.offsets == restored.offsets {
        return Ok(());
    }
    if orig.streamline_count() != restored.streamline_count() {
        return Err(MetricsError::TopologyMismatch(format!(
            "{} streamlines vs {}",
            orig.streamline_count(),
            restored.streamline_count()
        )));
    }
    let i = (0..orig.streamline_count())
        .find(|&i| orig.streamline_range(i).len() != restored.streamline_range(i).len())
        .unwrap_or(0);
    Err(MetricsError::TopologyMismatch(format!(
        "streamline {i} has {} vertices vs {}",
        orig.streamline_range(i).len(),
        restored.streamline_range(i).len()
    )))
}

/// Euclidean distance between corresponding vertices.
pub fn vertex_distances<T: Scalar>(orig: &Tractogram, restored: &Tractogram) -> Result<Vec<T>, MetricsError> {
    check_topology(orig, restored)?;
    Ok(orig
        .vertices
        .par_iter()
        .zip(&restored.vertices)
        .map(|(a, b)| distance(a, b))
        .collect())
}

pub fn pointwise_errors<T: Scalar>(orig: &Tractogram, restored: &Tractogram) -> Result<ErrorStats<T>, MetricsError> {
    Ok(ErrorStats::from_errors(&vertex_distances::<T>(orig, restored)?))
}

/// Sum of all per-vertex distances.
pub fn pointwise_error_sum<T: Scalar>(orig: &Tractogram, restored: &Tractogram) -> Result<T, MetricsError> {
    Ok(vertex_distances::<T>(orig, restored)?
        .into_iter()
        .fold(T::zero(), |a, b| a + b))
}

/// Errors at the first and last vertex of each streamline; once for
/// single-vertex streamlines.
pub fn endpoint_errors<T: Scalar>(orig: &Tractogram, restored: &Tractogram) -> Result<ErrorStats<T>, MetricsError> {
    let (n, m) = (orig.streamline_count(), restored.streamline_count());
    if n != m {
        return Err(MetricsError::StreamlineCountMismatch {
            expected: n,
            found: m,
        });
    }
    let mut errors = Vec::with_capacity(2 * n);
    for (a, b) in orig.streamlines().zip(restored.streamlines()) {
        if a.is_empty() || b.is_empty() {
            continue;
        }
        errors.push(distance(&a[0], &b[0]));
        if a.len() > 1 || b.len() > 1 {
            errors.push(distance(&a[a.len() - 1], &b[b.len() - 1]));
        }
    }
    Ok(ErrorStats::from_errors(&errors))
}

fn field_errors<T: Scalar>(name: &str, a: &Field, b: &Field) -> Result<ErrorStats<T>, MetricsError> {
    if a.dims != b.dims || a.values.len() != b.values.len() {
        return Err(MetricsError::FieldMismatch(format!(
            "{name}: {}x{} vs {}x{}",
            a.element_count(),
            a.dims,
            b.element_count(),
            b.dims
        )));
    }
    let errors: Vec<T> = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| T::from_f64_nearest((x - y).abs()))
        .collect();
    Ok(ErrorStats::from_errors(&errors))
}

/// Absolute per-component error of every vertex scalar and fiber property.
/// A property sharing a scalar's name is keyed `fiber:<name>`.
pub fn attribute_errors<T: Scalar>(
    orig: &Tractogram,
    restored: &Tractogram,
) -> Result<IndexMap<String, ErrorStats<T>>, MetricsError> {
    let pairs = [
        (&orig.vertex_scalars, &restored.vertex_scalars, "vertex scalar"),
        (&orig.fiber_properties, &restored.fiber_properties, "fiber property"),
    ];
    for (a, b, what) in pairs {
        if a.len() != b.len() || a.keys().any(|k| !b.contains_key(k)) {
            let names = |m: &IndexMap<String, Field>| m.keys().cloned().collect::<Vec<_>>().join(", ");
            return Err(MetricsError::FieldMismatch(format!(
                "{what} names [{}] vs [{}]",
                names(a),
                names(b)
            )));
        }
    }
    let mut out = IndexMap::new();
    for (name, a) in &orig.vertex_scalars {
        out.insert(name.clone(), field_errors(name, a, &restored.vertex_scalars[name])?);
    }
    for (name, a) in &orig.fiber_properties {
        let key = if out.contains_key(name) {
            format!("fiber:{name}")
        } else {
            name.clone()
        };
        out.insert(key, field_errors(name, a, &restored.fiber_properties[name])?);
    }
    Ok(out)
}

fn axis_coefficient(a: &[[f32; 3]], b: &[[f32; 3]], axis: usize, bins: usize) -> f64 {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in a.iter().chain(b) {
        let x = v[axis] as f64;
        lo = lo.min(x);
        hi = hi.max(x);
    }
    let width = hi - lo;
    let histogram = |vs: &[[f32; 3]]| {
        let mut h = vec![0u64; bins];
        for v in vs {
            let i = if width > 0.0 {
                (((v[axis] as f64 - lo) / width * bins as f64) as usize).min(bins - 1)
            } else {
                0
            };
            h[i] += 1;
        }
        h
    };
    let (p, q) = (histogram(a), histogram(b));
    let bc: f64 = p
        .iter()
        .zip(&q)
        .map(|(&x, &y)| (x as f64 * y as f64).sqrt())
        .sum();
    (bc / (a.len() as f64 * b.len() as f64).sqrt()).clamp(0.0, 1.0)
}

/// Mean over x, y and z of the Bhattacharyya coefficient between the two
/// tractograms' coordinate histograms on their union range.
pub fn bhattacharyya_overlap(orig: &Tractogram, restored: &Tractogram, bins: usize) -> Result<f64, MetricsError> {
    if bins < 2 {
        return Err(MetricsError::InvalidBins(bins));
    }
    if orig.vertices.is_empty() || restored.vertices.is_empty() {
        return Err(MetricsError::EmptyTractogram);
    }
    let sum: f64 = (0..3usize)
        .into_par_iter()
        .map(|axis| axis_coefficient(&orig.vertices, &restored.vertices, axis, bins))
        .sum();
    Ok(sum / 3.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub original_size: u64,
    pub compressed_size: u64,
    /// Percent.
    pub ratio: f64,
    pub factor: f64,
    pub vertex_errors: ErrorStats<f64>,
    pub endpoint_errors: ErrorStats<f64>,
    pub attribute_errors: IndexMap<String, ErrorStats<f64>>,
    pub bhattacharyya: f64,
    pub encode_ms: Option<f64>,
    pub decode_ms: Option<f64>,
}

pub fn compare(
    orig: &Tractogram,
    restored: &Tractogram,
    orig_bytes: u64,
    comp_bytes: u64,
    bins: usize,
) -> Result<ComparisonReport, MetricsError> {
    let ratio = compression_ratio(orig_bytes as f64, comp_bytes as f64)?;
    let factor = compression_factor(orig_bytes as f64, comp_bytes as f64)?;
    let vertex_errors = pointwise_errors(orig, restored)?;
    let endpoint_errors = endpoint_errors(orig, restored)?;
    let attribute_errors = attribute_errors(orig, restored)?;
    let bhattacharyya = if orig.vertices.is_empty() && restored.vertices.is_empty() {
        1.0
    } else {
        bhattacharyya_overlap(orig, restored, bins)?
    };
    Ok(ComparisonReport {
        original_size: orig_bytes,
        compressed_size: comp_bytes,
        ratio,
        factor,
        vertex_errors,
        endpoint_errors,
        attribute_errors,
        bhattacharyya,
        encode_ms: None,
        decode_ms: None,
    })
}

impl ComparisonReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report always serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let ms = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.1} ms"));
        let _ = writeln!(s, "original size     {:>14} bytes", self.original_size);
        let _ = writeln!(s, "compressed size   {:>14} bytes", self.compressed_size);
        let _ = writeln!(s, "ratio C_r         {:>13.3} %", self.ratio);
        let _ = writeln!(s, "factor C_f        {:>13.3} x", self.factor);
        let _ = writeln!(s, "bhattacharyya B   {:>15.6}", self.bhattacharyya);
        let _ = writeln!(s, "encode            {:>15}", ms(self.encode_ms));
        let _ = writeln!(s, "decode            {:>15}", ms(self.decode_ms));
        let _ = writeln!(
            s,
            "\n{:<24} {:>12} {:>12} {:>12} {:>12}",
            "errors", "min", "max", "mean", "std"
        );
        let mut row = |name: &str, e: &ErrorStats<f64>| {
            let _ = writeln!(
                s,
                "{name:<24} {:>12.6} {:>12.6} {:>12.6} {:>12.6}",
                e.min, e.max, e.mean, e.std
            );
        };
        row("vertices [mm]", &self.vertex_errors);
        row("endpoints [mm]", &self.endpoint_errors);
        for (name, e) in &self.attribute_errors {
            row(name, e);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DeclaredType;
    use proptest::prelude::*;

    fn bundle() -> Tractogram {
        let mut t = Tractogram::from_streamlines([
            vec![[0.0, 0.0, 0.0], [1.0, 2.0, 3.0], [2.0, 2.0, 2.0]],
            vec![[5.0, 5.0, 5.0]],
            vec![[-1.0, 4.0, 0.5], [-2.0, 4.5, 0.25]],
        ]);
        t.vertex_scalars.insert(
            "fa".into(),
            Field::new(1, vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6], DeclaredType::Float32),
        );
        t.fiber_properties
            .insert("id".into(), Field::new(1, vec![1.0, 2.0, 3.0], DeclaredType::Int32));
        t
    }

    fn shifted(t: &Tractogram, dx: f32) -> Tractogram {
        let mut s = t.clone();
        for v in &mut s.vertices {
            v[0] += dx;
        }
        s
    }

    #[test]
    fn ratio_and_factor() {
        let r = compression_ratio(16.55, 1.46).unwrap();
        assert!((r - 91.178).abs() < 1e-3, "{r}");
        let f = compression_factor(16.55, 1.46).unwrap();
        assert!((f - 11.3356).abs() < 1e-4, "{f}");
        assert_eq!(compression_ratio(7.0, 7.0).unwrap(), 0.0);
        assert_eq!(compression_ratio(8.0, 4.0).unwrap(), 50.0);
        assert_eq!(compression_factor(7.0, 7.0).unwrap(), 1.0);
        assert_eq!(compression_factor(10.0, 1.0).unwrap(), 10.0);
        assert_eq!(compression_ratio(0.0, 1.0), Err(MetricsError::ZeroOriginalSize));
        assert_eq!(compression_factor(1.0, 0.0), Err(MetricsError::ZeroCompressedSize));
    }

    proptest! {
        #[test]
        fn factor_ratio_identity(o in 1.0f64..1e12, c in 1.0f64..1e12) {
            let r = compression_ratio(o, c).unwrap();
            let f = compression_factor(o, c).unwrap();
            let g = 100.0 / (100.0 - r);
            prop_assert!(((f - g) / f).abs() < 1e-9);
        }

        #[test]
        fn stats_invariants(v in prop::collection::vec(0.0f64..1e3, 1..200)) {
            let s = ErrorStats::from_errors(&v);
            prop_assert!(0.0 <= s.min && s.min <= s.mean && s.mean <= s.max);
            prop_assert!(s.std >= 0.0);
        }
    }

    #[test]
    fn stats_values() {
        let s = ErrorStats::from_errors(&[1.0f64, 3.0]);
        assert_eq!(s, ErrorStats { min: 1.0, max: 3.0, mean: 2.0, std: 1.0 });
        let s = ErrorStats::<f32>::from_errors(&[]);
        assert!(s.is_zero());
    }

    #[test]
    fn identical_is_zero() {
        let t = bundle();
        assert!(pointwise_errors::<f64>(&t, &t).unwrap().is_zero());
        assert!(endpoint_errors::<f32>(&t, &t).unwrap().is_zero());
        for e in attribute_errors::<f64>(&t, &t).unwrap().values() {
            assert!(e.is_zero());
        }
        assert!((bhattacharyya_overlap(&t, &t, 128).unwrap() - 1.0).abs() < 1e-12);
        let r = compare(&t, &t, 100, 100, DEFAULT_BINS).unwrap();
        assert_eq!(r.ratio, 0.0);
        assert_eq!(r.bhattacharyya, 1.0);
    }

    #[test]
    fn uniform_shift() {
        let t = bundle();
        let s = shifted(&t, 0.125);
        let e = pointwise_errors::<f64>(&t, &s).unwrap();
        assert_eq!((e.min, e.max, e.mean, e.std), (0.125, 0.125, 0.125, 0.0));
        let e = endpoint_errors::<f64>(&t, &s).unwrap();
        assert_eq!((e.min, e.max, e.mean), (0.125, 0.125, 0.125));
        assert_eq!(pointwise_error_sum::<f64>(&t, &s).unwrap(), 0.75);
    }

    #[test]
    fn endpoints_count() {
        let t = bundle();
        let mut s = t.clone();
        s.vertices[1][2] += 10.0;
        assert!(endpoint_errors::<f64>(&t, &s).unwrap().is_zero());
        s.vertices[3][2] += 2.0;
        let e = endpoint_errors::<f64>(&t, &s).unwrap();
        assert_eq!(e.max, 2.0);
        assert!((e.mean - 2.0 / 5.0).abs() < 1e-12);
    }

    #[test]
    fn topology_mismatch() {
        let t = bundle();
        let mut s = t.clone();
        s.offsets = vec![0, 2, 4, 6];
        assert!(matches!(
            pointwise_errors::<f64>(&t, &s),
            Err(MetricsError::TopologyMismatch(_))
        ));
        let short = Tractogram::from_streamlines([vec![[0.0f32; 3]]]);
        assert!(matches!(
            endpoint_errors::<f64>(&t, &short),
            Err(MetricsError::StreamlineCountMismatch { expected: 3, found: 1 })
        ));
    }

    #[test]
    fn field_mismatch() {
        let t = bundle();
        let mut s = t.clone();
        s.vertex_scalars.clear();
        assert!(matches!(attribute_errors::<f64>(&t, &s), Err(MetricsError::FieldMismatch(_))));
        let mut s = t.clone();
        s.fiber_properties["id"].dims = 3;
        assert!(matches!(attribute_errors::<f64>(&t, &s), Err(MetricsError::FieldMismatch(_))));
    }

    #[test]
    fn attribute_differences() {
        let t = bundle();
        let mut s = t.clone();
        s.vertex_scalars["fa"].values[2] = 0.5;
        let e = &attribute_errors::<f64>(&t, &s).unwrap()["fa"];
        assert!((e.max - 0.2).abs() < 1e-12);
        assert_eq!(e.min, 0.0);
    }

    #[test]
    fn bhattacharyya_bounds() {
        let a = Tractogram::from_streamlines([vec![[-5.0, -5.0, -5.0], [-1.0, -2.0, -3.0]]]);
        let b = Tractogram::from_streamlines([vec![[5.0, 5.0, 5.0], [1.0, 2.0, 3.0]]]);
        assert_eq!(bhattacharyya_overlap(&a, &b, 128).unwrap(), 0.0);
        let t = bundle();
        let s = shifted(&t, 0.5);
        let ab = bhattacharyya_overlap(&t, &s, 64).unwrap();
        let ba = bhattacharyya_overlap(&s, &t, 64).unwrap();
        assert_eq!(ab, ba);
        assert!((0.0..=1.0).contains(&ab));
        let mut p = t.clone();
        p.vertices.reverse();
        assert_eq!(bhattacharyya_overlap(&t, &p, 128).unwrap(), 1.0);
        assert_eq!(bhattacharyya_overlap(&t, &t, 1), Err(MetricsError::InvalidBins(1)));
        assert_eq!(
            bhattacharyya_overlap(&t, &Tractogram::new(), 128),
            Err(MetricsError::EmptyTractogram)
        );
    }

    #[test]
    fn constant_axis() {
        let a = Tractogram::from_streamlines([vec![[1.0, 0.0, 0.0], [1.0, 1.0, 0.0]]]);
        assert_eq!(bhattacharyya_overlap(&a, &a, 8).unwrap(), 1.0);
    }

    #[test]
    fn report_json_round_trip() {
        let t = bundle();
        let mut r = compare(&t, &shifted(&t, 0.01), 1000, 97, 32).unwrap();
        r.encode_ms = Some(1.5);
        let json = r.to_json();
        assert_eq!(ComparisonReport::from_json(&json).unwrap(), r);
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        for key in [
            "original_size",
            "compressed_size",
            "ratio",
            "factor",
            "vertex_errors",
            "endpoint_errors",
            "attribute_errors",
            "bhattacharyya",
            "encode_ms",
            "decode_ms",
        ] {
            assert!(v.get(key).is_some(), "{key}");
        }
        for key in ["min", "max", "mean", "std"] {
            assert!(v["vertex_errors"].get(key).is_some());
        }
        let table = r.to_table();
        assert!(table.contains("vertices [mm]"));
        assert!(table.contains("fa"));
    }
}
