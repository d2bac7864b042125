use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::warn;
use trako::codec::{CodecConfig, Stage};
use trako::container::{self, ContainerError};
use trako::gen::{generate, GenConfig};
use trako::io::{self, FormatTag};
use trako::metrics::{self, ComparisonReport, MetricsError};
use trako::Tractogram;

use crate::cli_args::{AnyFormat, GenArgs, PlainFormat, TkompareArgs, TrakofyArgs, UntrakofyArgs};

pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_LOSSY: i32 = 3;
pub const EXIT_TOPOLOGY: i32 = 4;

#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

type Result<T> = std::result::Result<T, Failure>;

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Failure::new(EXIT_FAILURE, format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Failure::new(EXIT_FAILURE, format!("{}: {e}", path.display())))
}

fn hint(path: &Path) -> String {
    path.to_string_lossy().into_owned()
}

struct Loaded {
    tractogram: Tractogram,
    format: FormatTag,
    size: u64,
    decode_ms: Option<f64>,
    document: Option<container::TrakoDocument>,
}

fn load(path: &Path) -> Result<Loaded> {
    let bytes = read_file(path)?;
    let format = io::detect_format(&bytes, &hint(path))
        .map_err(|e| Failure::new(EXIT_FAILURE, format!("{}: {e}", path.display())))?;
    if format.is_tko() {
        let start = Instant::now();
        let doc = container::read_tko(&bytes).map_err(|e| corrupt(path, e))?;
        let t = container::parse_document(&doc).map_err(|e| corrupt(path, e))?;
        return Ok(Loaded {
            tractogram: t,
            format,
            size: bytes.len() as u64,
            decode_ms: Some(ms(start)),
            document: Some(doc),
        });
    }
    let (t, format) = io::read_tractogram(&bytes, &hint(path)).map_err(|e| parse_failure(path, e))?;
    Ok(Loaded {
        tractogram: t,
        format,
        size: bytes.len() as u64,
        decode_ms: None,
        document: None,
    })
}

fn parse_failure(path: &Path, e: io::IoError) -> Failure {
    Failure::new(EXIT_FAILURE, format!("{}: {e}", path.display()))
}

fn corrupt(path: &Path, e: ContainerError) -> Failure {
    Failure::new(EXIT_FAILURE, format!("{}: corrupt container: {e}", path.display()))
}

fn ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn human_size(n: u64) -> String {
    const UNITS: [&str; 4] = ["B", "KB", "MB", "GB"];
    let mut v = n as f64;
    let mut u = 0;
    while v >= 1000.0 && u + 1 < UNITS.len() {
        v /= 1000.0;
        u += 1;
    }
    if u == 0 {
        format!("{n} B")
    } else {
        format!("{v:.2} {}", UNITS[u])
    }
}

pub fn trakofy(args: TrakofyArgs) -> Result<()> {
    let bytes = read_file(&args.input)?;
    let format = io::detect_format(&bytes, &hint(&args.input))
        .map_err(|e| parse_failure(&args.input, e))?;
    if format.is_tko() {
        return Err(Failure::new(
            EXIT_FAILURE,
            format!("{}: already a .tko container", args.input.display()),
        ));
    }
    let (mut t, _) =
        io::read_tractogram(&bytes, &hint(&args.input)).map_err(|e| parse_failure(&args.input, e))?;
    if args.no_scalars {
        t.vertex_scalars.clear();
    }
    if args.no_properties {
        t.fiber_properties.clear();
    }
    let config = CodecConfig {
        bits: args.bits,
        compression_level: args.level,
        ..Default::default()
    };
    let start = Instant::now();
    let out = container::encode_tko(&t, (!args.uncompressed).then_some(&config), args.binary)
        .map_err(|e| Failure::new(EXIT_FAILURE, format!("{}: {e}", args.input.display())))?;
    let elapsed = ms(start);
    let output = args.output.unwrap_or_else(|| args.input.with_extension("tko"));
    write_file(&output, &out)?;

    let (orig, comp) = (bytes.len() as f64, out.len() as f64);
    let ratio = metrics::compression_ratio(orig, comp).unwrap_or(0.0);
    let factor = metrics::compression_factor(orig, comp).unwrap_or(0.0);
    println!(
        "{} ({format}) -> {}: {} -> {}, C_r {ratio:.2}%, C_f {factor:.3}x, {elapsed:.1} ms",
        args.input.display(),
        output.display(),
        human_size(bytes.len() as u64),
        human_size(out.len() as u64),
    );
    Ok(())
}

fn plain_tag(f: PlainFormat) -> FormatTag {
    match f {
        PlainFormat::Tck => FormatTag::Tck,
        PlainFormat::Trk => FormatTag::Trk,
        PlainFormat::Vtk => FormatTag::VtkLegacyBinary,
        PlainFormat::VtkAscii => FormatTag::VtkLegacyAscii,
    }
}

fn default_extension(tag: FormatTag) -> &'static str {
    match tag {
        FormatTag::Tck => "tck",
        FormatTag::Trk => "trk",
        FormatTag::VtkLegacyAscii | FormatTag::VtkLegacyBinary => "vtk",
        FormatTag::TkoJson => "tko",
        FormatTag::TkoBinary => "glb",
    }
}

pub fn untrakofy(args: UntrakofyArgs) -> Result<()> {
    let bytes = read_file(&args.input)?;
    let t = container::decode_tko(&bytes).map_err(|e| corrupt(&args.input, e))?;
    let tag = match (args.format, &args.output) {
        (Some(f), _) => plain_tag(f),
        (None, Some(out)) => match io::format_for_extension(&hint(out)) {
            Some(tag) if !tag.is_tko() => tag,
            _ => FormatTag::Tck,
        },
        (None, None) => FormatTag::Tck,
    };
    let output: PathBuf = args
        .output
        .unwrap_or_else(|| args.input.with_extension(default_extension(tag)));
    let dropped = io::dropped_fields(&t, tag);
    if args.strict && !dropped.is_empty() {
        let what = if tag == FormatTag::Tck { "drop" } else { "round to float32" };
        return Err(Failure::new(
            EXIT_LOSSY,
            format!("refusing lossy conversion: {tag} would {what} {}", dropped.join(", ")),
        ));
    }
    write_file(&output, &io::write_tractogram(&t, tag))?;
    println!(
        "{} -> {} ({tag}): {} streamlines, {} vertices",
        args.input.display(),
        output.display(),
        t.streamline_count(),
        t.vertex_count()
    );
    Ok(())
}

/// Drop attributes present on only one side so both can be compared.
fn common_fields(a: &mut Tractogram, b: &mut Tractogram) {
    for (x, y, what) in [
        (&mut a.vertex_scalars, &mut b.vertex_scalars, "scalar"),
        (&mut a.fiber_properties, &mut b.fiber_properties, "property"),
    ] {
        let only_x: Vec<String> = x.keys().filter(|k| !y.contains_key(*k)).cloned().collect();
        let only_y: Vec<String> = y.keys().filter(|k| !x.contains_key(*k)).cloned().collect();
        for k in &only_x {
            warn!("{what} {k:?} missing from the restored file; not compared");
            x.shift_remove(k);
        }
        for k in &only_y {
            warn!("{what} {k:?} missing from the original file; not compared");
            y.shift_remove(k);
        }
    }
}

/// Config that reproduces a document's encoding, read back from its
/// POSITION accessor.
fn config_of(doc: &container::TrakoDocument) -> Option<CodecConfig> {
    let (_, ext) = doc
        .compressed_attributes()
        .into_iter()
        .find(|(n, _)| n == "POSITION")?;
    Some(CodecConfig {
        bits: ext.bits,
        compression_level: if ext.stages.contains(&Stage::Deflate) { 10 } else { 0 },
        ..Default::default()
    })
}

pub fn tkompare(args: TkompareArgs) -> Result<()> {
    let original = load(&args.original)?;
    let restored = load(&args.restored)?;
    let mut a = original.tractogram;
    let mut b = restored.tractogram;
    common_fields(&mut a, &mut b);

    let mut report = metrics::compare(&a, &b, original.size, restored.size, args.bins as usize)
        .map_err(|e| match e {
            MetricsError::TopologyMismatch(_) | MetricsError::StreamlineCountMismatch { .. } => Failure::new(
                EXIT_TOPOLOGY,
                format!(
                    "{} vs {}: {e}",
                    args.original.display(),
                    args.restored.display()
                ),
            ),
            e => Failure::new(EXIT_FAILURE, e.to_string()),
        })?;
    report.decode_ms = restored.decode_ms;
    if let Some(doc) = &restored.document {
        let cfg = config_of(doc);
        let binary = restored.format == FormatTag::TkoBinary;
        let start = Instant::now();
        if container::encode_tko(&a, cfg.as_ref(), binary).is_ok() {
            report.encode_ms = Some(ms(start));
        }
    }
    print_report(&args.original, original.format, &args.restored, restored.format, &report);
    if let Some(path) = &args.report {
        write_file(path, report.to_json().as_bytes())?;
    }
    Ok(())
}

fn print_report(a: &Path, fa: FormatTag, b: &Path, fb: FormatTag, r: &ComparisonReport) {
    println!("original  {} ({fa})", a.display());
    println!("restored  {} ({fb})", b.display());
    print!("{}", r.to_table());
}

pub fn gen(args: GenArgs) -> Result<()> {
    let tag = match args.format {
        Some(f) => match f {
            AnyFormat::Tck => FormatTag::Tck,
            AnyFormat::Trk => FormatTag::Trk,
            AnyFormat::Vtk => FormatTag::VtkLegacyBinary,
            AnyFormat::VtkAscii => FormatTag::VtkLegacyAscii,
            AnyFormat::Tko => FormatTag::TkoJson,
            AnyFormat::Glb => FormatTag::TkoBinary,
        },
        None => io::format_for_extension(&hint(&args.output)).ok_or_else(|| {
            Failure::new(
                EXIT_USAGE,
                format!(
                    "cannot infer a format from {}; pass --format",
                    args.output.display()
                ),
            )
        })?,
    };
    let cfg = GenConfig {
        streamlines: args.streamlines as usize,
        points: args.points as usize,
        box_mm: args.box_mm,
        scalars: args.scalars,
        properties: args.properties,
        seed: args.seed,
        step: args.step,
        curvature: args.curvature,
    };
    let t = generate(&cfg).map_err(|e| Failure::new(EXIT_USAGE, e.to_string()))?;
    let bytes = if tag.is_tko() {
        container::encode_tko(&t, None, tag == FormatTag::TkoBinary)
            .map_err(|e| Failure::new(EXIT_FAILURE, e.to_string()))?
    } else {
        io::write_tractogram(&t, tag)
    };
    write_file(&args.output, &bytes)?;
    let stats = t.stats();
    println!(
        "{} ({tag}): {} streamlines, {} vertices, {} scalars, {} properties",
        args.output.display(),
        stats.streamline_count,
        stats.vertex_count,
        t.vertex_scalars.len(),
        t.fiber_properties.len()
    );
    Ok(())
}
