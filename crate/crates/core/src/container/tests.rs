use super::*;
use crate::codec::Stage;
use crate::model::Space;

fn sample() -> Tractogram {
    let mut t = Tractogram::from_streamlines([
        vec![[0.0, 0.0, 0.0], [1.0, 0.5, 0.25], [2.0, 1.0, 0.5]],
        vec![[10.0, -3.0, 4.0]],
        vec![[5.0, 5.0, 5.0], [5.5, 5.25, 5.0], [6.0, 5.5, 5.0], [6.5, 5.75, 5.0]],
    ]);
    t.space = Space::Rasmm;
    t.metadata.insert("subject".into(), "s01".into());
    let fa: Vec<f64> = (0..8).map(|i| (0.1 * i as f32) as f64).collect();
    t.vertex_scalars
        .insert("FA".into(), Field::new(1, fa, DeclaredType::Float32));
    let rgb: Vec<f64> = (0..24).map(|i| (i * 10 % 256) as f64).collect();
    t.vertex_scalars
        .insert("rgb".into(), Field::new(3, rgb, DeclaredType::UInt8));
    t.fiber_properties.insert(
        "cluster".into(),
        Field::new(1, vec![3.0, 70000.0, -2.0], DeclaredType::Int32),
    );
    t.fiber_properties.insert(
        "weight".into(),
        Field::new(1, vec![0.25, 1e-9, 3.5], DeclaredType::Float64),
    );
    t
}

fn assert_close(a: &Tractogram, b: &Tractogram, tol: f64) {
    assert_eq!(a.offsets, b.offsets);
    assert_eq!(a.space, b.space);
    assert_eq!(a.metadata, b.metadata);
    for (x, y) in a.vertices.iter().zip(&b.vertices) {
        for k in 0..3 {
            assert!(((x[k] - y[k]) as f64).abs() <= tol, "{x:?} vs {y:?}");
        }
    }
    assert_eq!(
        a.vertex_scalars.keys().collect::<Vec<_>>(),
        b.vertex_scalars.keys().collect::<Vec<_>>()
    );
    assert_eq!(
        a.fiber_properties.keys().collect::<Vec<_>>(),
        b.fiber_properties.keys().collect::<Vec<_>>()
    );
}

#[test]
fn uncompressed_round_trip_is_exact() {
    let t = sample();
    for binary in [false, true] {
        let bytes = encode_tko(&t, None, binary).unwrap();
        let back = decode_tko(&bytes).unwrap();
        assert_eq!(back, t);
    }
}

#[test]
fn compressed_round_trip() {
    let t = sample();
    let cfg = CodecConfig::default();
    for binary in [false, true] {
        let bytes = encode_tko(&t, Some(&cfg), binary).unwrap();
        let back = decode_tko(&bytes).unwrap();
        assert_close(&t, &back, 1e-3);
        assert_eq!(back.fiber_properties["cluster"], t.fiber_properties["cluster"]);
        assert_eq!(back.vertex_scalars["rgb"], t.vertex_scalars["rgb"]);
        assert_eq!(back.vertex_scalars["FA"].declared_type, DeclaredType::Float32);
    }
}

#[test]
fn json_and_glb_hold_the_same_document() {
    let doc = build_document(&sample(), Some(&CodecConfig::default())).unwrap();
    let a = read_tko_json(&write_tko_json(&doc)).unwrap();
    let b = read_tko_binary(&write_tko_binary(&doc)).unwrap();
    assert_eq!(a, doc);
    assert_eq!(b, doc);
}

#[test]
fn output_is_deterministic() {
    let t = sample();
    let cfg = CodecConfig::default();
    assert_eq!(
        encode_tko(&t, Some(&cfg), true).unwrap(),
        encode_tko(&t, Some(&cfg), true).unwrap()
    );
}

#[test]
fn document_shape() {
    let doc = build_document(&sample(), Some(&CodecConfig::default())).unwrap();
    let tree = &doc.json_tree;
    assert_eq!(tree.asset.version, "2.0");
    assert_eq!(tree.extensions_used, vec![EXT_TRACTOGRAM, EXT_COMPRESSED]);
    assert_eq!(tree.meshes.len(), 1);
    assert_eq!(tree.meshes[0].primitives[0].mode, Some(MODE_POINTS));
    let pos = &tree.accessors[tree.meshes[0].primitives[0].attributes["POSITION"]];
    assert_eq!(pos.kind, "VEC3");
    assert_eq!(pos.count, 8);
    assert!(pos.buffer_view.is_none());
    assert_eq!(pos.min.as_deref(), Some(&[0.0, -3.0, 0.0][..]));
    assert_eq!(pos.max.as_deref(), Some(&[10.0, 5.75, 5.0][..]));
    let ext = pos.extensions.compressed.as_ref().unwrap();
    assert_eq!(
        ext.stages,
        vec![Stage::Quantize, Stage::Delta, Stage::Zigzag, Stage::Varint, Stage::Deflate]
    );
    for v in &tree.buffer_views {
        assert_eq!(v.byte_offset % 4, 0);
    }
    let names: Vec<_> = doc.compressed_attributes().into_iter().map(|(n, _)| n).collect();
    assert_eq!(names, ["POSITION", "offsets", "FA", "rgb", "cluster", "weight"]);
}

#[test]
fn json_uses_gltf_names() {
    let bytes = encode_tko(&sample(), Some(&CodecConfig::default()), false).unwrap();
    let v: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
    assert!(v["buffers"][0]["uri"]
        .as_str()
        .unwrap()
        .starts_with("data:application/octet-stream;base64,"));
    let acc = &v["accessors"][0];
    assert_eq!(acc["componentType"], 5126);
    assert_eq!(acc["type"], "VEC3");
    let ext = &acc["extensions"]["TRAKO_compressed"];
    assert_eq!(ext["bits"], 14);
    assert_eq!(ext["declaredType"], "float32");
    let tract = &v["meshes"][0]["extensions"]["TRAKO_tractogram"];
    assert_eq!(tract["space"], "rasmm");
    assert_eq!(tract["fiber_properties"]["cluster"]["declared_type"], "int32");
}

#[test]
fn uncompressed_has_no_codec_extension() {
    let doc = build_document(&sample(), None).unwrap();
    assert_eq!(doc.json_tree.extensions_used, vec![EXT_TRACTOGRAM]);
    assert!(doc.compressed_attributes().is_empty());
    let pos = &doc.json_tree.accessors[0];
    assert_eq!(pos.buffer_view, Some(0));
    assert_eq!(doc.json_tree.buffer_views[0].target, Some(TARGET_ARRAY_BUFFER));
    assert_eq!(position_error_bounds(&doc), [0.0; 3]);
}

#[test]
fn empty_tractogram() {
    let t = Tractogram::new();
    for cfg in [None, Some(CodecConfig::default())] {
        for binary in [false, true] {
            let bytes = encode_tko(&t, cfg.as_ref(), binary).unwrap();
            assert_eq!(decode_tko(&bytes).unwrap(), t);
        }
    }
}

#[test]
fn error_bounds_follow_bbox() {
    let doc = build_document(&sample(), Some(&CodecConfig::with_bits(8))).unwrap();
    let b = position_error_bounds(&doc);
    assert!((b[0] - 10.0 / 255.0 / 2.0).abs() < 1e-12);
    assert!((b[1] - 8.75 / 255.0 / 2.0).abs() < 1e-12);
}

#[test]
fn invalid_input_is_rejected() {
    let mut t = sample();
    t.offsets[1] = 0;
    assert!(matches!(
        build_document(&t, None),
        Err(ContainerError::InvalidTractogram(_))
    ));
    let cfg = CodecConfig::with_bits(0);
    assert!(matches!(
        build_document(&sample(), Some(&cfg)),
        Err(ContainerError::Codec(CodecError::InvalidBits(0)))
    ));
}

#[test]
fn glb_corruption() {
    let bytes = encode_tko(&sample(), Some(&CodecConfig::default()), true).unwrap();
    assert!(matches!(read_tko_binary(&bytes[..8]), Err(ContainerError::TruncatedFile(_))));
    assert!(matches!(
        read_tko_binary(&bytes[..bytes.len() - 4]),
        Err(ContainerError::TruncatedFile(_))
    ));
    let mut bad = bytes.clone();
    bad[0] = b'x';
    assert_eq!(read_tko_binary(&bad), Err(ContainerError::BadMagic));
    let mut longer = bytes.clone();
    longer.extend_from_slice(&[0; 4]);
    assert!(matches!(
        read_tko_binary(&longer),
        Err(ContainerError::ChunkLengthMismatch(_))
    ));
    let mut flipped = bytes.clone();
    let n = flipped.len();
    flipped[n - 20] ^= 0xff;
    assert!(decode_tko(&flipped).is_err());
}

#[test]
fn json_corruption() {
    assert!(matches!(read_tko_json(b"{not json"), Err(ContainerError::MalformedJson(_))));
    assert!(matches!(
        read_tko_json(br#"{"asset":{"version":"2.0"}}"#),
        Err(ContainerError::NotATrakoFile(_))
    ));
    assert!(matches!(read_tko_json(br#"{"a":1}"#), Err(ContainerError::NotATrakoFile(_))));
    let doc = build_document(&sample(), Some(&CodecConfig::default())).unwrap();
    let mut v: serde_json::Value = serde_json::from_slice(&write_tko_json(&doc)).unwrap();
    v["meshes"][0]["extensions"]["TRAKO_tractogram"]["version"] = 2.into();
    let bytes = serde_json::to_vec(&v).unwrap();
    assert!(matches!(
        decode_tko(&bytes),
        Err(ContainerError::UnsupportedExtensionVersion { version: 2, .. })
    ));
}

#[test]
fn truncated_payload_is_corrupt() {
    let mut doc = build_document(&sample(), Some(&CodecConfig::default())).unwrap();
    doc.json_tree.buffer_views[0].byte_length -= 3;
    assert!(parse_document(&doc).is_err());
    let mut doc = build_document(&sample(), Some(&CodecConfig::default())).unwrap();
    doc.binary_buffers[0].truncate(10);
    assert!(matches!(parse_document(&doc), Err(ContainerError::CorruptStream(_))));
}

#[test]
fn double_precision_positions() {
    let t = sample();
    let doc = build_document(&t, Some(&CodecConfig::with_bits(9))).unwrap();
    let hi: Vec<[f64; 3]> = restore_positions(&doc).unwrap();
    let lo = parse_document(&doc).unwrap().vertices;
    let bounds = position_error_bounds(&doc);
    for ((h, l), o) in hi.iter().zip(&lo).zip(&t.vertices) {
        for k in 0..3 {
            assert_eq!(h[k] as f32, l[k]);
            assert!((h[k] - o[k] as f64).abs() <= bounds[k]);
        }
    }
    let raw = build_document(&t, None).unwrap();
    let exact: Vec<[f64; 3]> = restore_positions(&raw).unwrap();
    assert!(exact.iter().zip(&t.vertices).all(|(a, b)| a.map(|x| x as f32) == *b));
}

#[test]
fn restored_float32_fields_are_narrowed() {
    let back = decode_tko(&encode_tko(&sample(), Some(&CodecConfig::with_bits(6)), true).unwrap()).unwrap();
    for v in &back.vertex_scalars["FA"].values {
        assert_eq!(*v as f32 as f64, *v);
    }
}
