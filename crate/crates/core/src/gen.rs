//! Seeded synthetic tractograms: smooth random walks inside a box.

use rand::distributions::Uniform;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, UnitSphere};
use rayon::prelude::*;
use thiserror::Error;

use crate::model::{DeclaredType, Field, Space, Tractogram};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenError {
    #[error("{0} must be at least 1")]
    ZeroCount(&'static str),
    #[error("box size must be positive, got {0}")]
    BadBox(f64),
    #[error("step must be in (0, 1] mm, got {0}")]
    BadStep(f64),
    #[error("curvature must be finite and non-negative, got {0}")]
    BadCurvature(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    pub streamlines: usize,
    pub points: usize,
    /// Edge length of the cube centred on the origin, in mm.
    pub box_mm: f64,
    pub scalars: usize,
    pub properties: usize,
    pub seed: u64,
    /// Distance between consecutive vertices, in mm.
    pub step: f64,
    /// Standard deviation of the per-step direction perturbation.
    pub curvature: f64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            streamlines: 1000,
            points: 100,
            box_mm: 200.0,
            scalars: 0,
            properties: 0,
            seed: 0,
            step: 0.2,
            curvature: 0.05,
        }
    }
}

impl GenConfig {
    pub fn check(&self) -> Result<(), GenError> {
        if self.streamlines == 0 {
            return Err(GenError::ZeroCount("streamlines"));
        }
        if self.points == 0 {
            return Err(GenError::ZeroCount("points"));
        }
        if !(self.box_mm > 0.0 && self.box_mm.is_finite()) {
            return Err(GenError::BadBox(self.box_mm));
        }
        if !(self.step > 0.0 && self.step <= 1.0) {
            return Err(GenError::BadStep(self.step));
        }
        if !(self.curvature >= 0.0 && self.curvature.is_finite()) {
            return Err(GenError::BadCurvature(self.curvature));
        }
        Ok(())
    }
}

const SCALAR_KINDS: [(&str, usize, DeclaredType); 3] = [
    ("fa", 1, DeclaredType::Float32),
    ("direction", 3, DeclaredType::Float32),
    ("label", 1, DeclaredType::UInt8),
];

const PROPERTY_KINDS: [(&str, usize, DeclaredType); 3] = [
    ("cluster_idx", 1, DeclaredType::Int32),
    ("weight", 1, DeclaredType::Float64),
    ("embedding", 2, DeclaredType::Float32),
];

fn field_name(base: &str, i: usize, kinds: usize) -> String {
    if i < kinds {
        base.to_string()
    } else {
        format!("{base}_{}", i / kinds)
    }
}

pub fn scalar_names(k: usize) -> Vec<String> {
    (0..k)
        .map(|i| field_name(SCALAR_KINDS[i % 3].0, i, 3))
        .collect()
}

pub fn property_names(j: usize) -> Vec<String> {
    (0..j)
        .map(|i| field_name(PROPERTY_KINDS[i % 3].0, i, 3))
        .collect()
}

struct Walk {
    points: Vec<[f32; 3]>,
    scalars: Vec<Vec<f64>>,
    properties: Vec<Vec<f64>>,
}

fn reflect(p: &mut [f64; 3], d: &mut [f64; 3], half: f64) {
    for a in 0..3 {
        if p[a] > half {
            p[a] = 2.0 * half - p[a];
            d[a] = -d[a];
        } else if p[a] < -half {
            p[a] = -2.0 * half - p[a];
            d[a] = -d[a];
        }
    }
}

fn dist(a: &[f32; 3], b: &[f32; 3]) -> f64 {
    (0..3)
        .map(|k| (a[k] as f64 - b[k] as f64).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn walk(cfg: &GenConfig, index: usize) -> Walk {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index as u64);
    let half = cfg.box_mm / 2.0;
    let start = Uniform::new_inclusive(-half * 0.9, half * 0.9);
    let mut p = [rng.sample(start), rng.sample(start), rng.sample(start)];
    let mut d: [f64; 3] = UnitSphere.sample(&mut rng);
    let mut points = Vec::with_capacity(cfg.points);
    points.push(p.map(|v| v as f32));
    let mut dirs = vec![d];
    for _ in 1..cfg.points {
        for x in d.iter_mut() {
            let n: f64 = StandardNormal.sample(&mut rng);
            *x += cfg.curvature * n;
        }
        let norm = d.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            d = d.map(|x| x / norm);
        }
        let prev = *points.last().unwrap();
        let mut len = cfg.step;
        loop {
            let mut q = [p[0] + len * d[0], p[1] + len * d[1], p[2] + len * d[2]];
            let mut qd = d;
            reflect(&mut q, &mut qd, half);
            let v = q.map(|x| x as f32);
            if dist(&prev, &v) <= cfg.step {
                p = q;
                d = qd;
                points.push(v);
                break;
            }
            len *= 1.0 - 1e-6;
        }
        dirs.push(d);
    }

    let mut scalars = Vec::with_capacity(cfg.scalars);
    for i in 0..cfg.scalars {
        let values: Vec<f64> = match i % 3 {
            0 => {
                let mut fa: f64 = rng.gen_range(0.2..0.8);
                (0..cfg.points)
                    .map(|_| {
                        let n: f64 = StandardNormal.sample(&mut rng);
                        fa = (fa + 0.01 * n).clamp(0.0, 1.0);
                        fa as f32 as f64
                    })
                    .collect()
            }
            1 => dirs
                .iter()
                .flat_map(|d| d.map(|x| x.abs() as f32 as f64))
                .collect(),
            _ => {
                let base = rng.gen_range(0..200u32);
                (0..cfg.points)
                    .map(|k| (base + (k * 4 / cfg.points) as u32) as f64)
                    .collect()
            }
        };
        scalars.push(values);
    }
    let mut properties = Vec::with_capacity(cfg.properties);
    for i in 0..cfg.properties {
        properties.push(match i % 3 {
            0 => vec![rng.gen_range(0..40) as f64],
            1 => vec![rng.gen::<f64>()],
            _ => vec![
                rng.gen_range(-1.0f32..1.0) as f64,
                rng.gen_range(-1.0f32..1.0) as f64,
            ],
        });
    }
    Walk {
        points,
        scalars,
        properties,
    }
}

/// Deterministic for a given configuration, independent of thread count.
pub fn generate(cfg: &GenConfig) -> Result<Tractogram, GenError> {
    cfg.check()?;
    let walks: Vec<Walk> = (0..cfg.streamlines)
        .into_par_iter()
        .map(|i| walk(cfg, i))
        .collect();
    let mut t = Tractogram::new();
    t.space = Space::Rasmm;
    t.vertices.reserve(cfg.streamlines * cfg.points);
    t.offsets.reserve(cfg.streamlines);
    for w in &walks {
        t.push_streamline(&w.points);
    }
    for (i, name) in scalar_names(cfg.scalars).into_iter().enumerate() {
        let (_, dims, ty) = SCALAR_KINDS[i % 3];
        let values = walks.iter().flat_map(|w| w.scalars[i].iter().copied()).collect();
        t.vertex_scalars.insert(name, Field::new(dims, values, ty));
    }
    for (i, name) in property_names(cfg.properties).into_iter().enumerate() {
        let (_, dims, ty) = PROPERTY_KINDS[i % 3];
        let values = walks.iter().flat_map(|w| w.properties[i].iter().copied()).collect();
        t.fiber_properties.insert(name, Field::new(dims, values, ty));
    }
    t.metadata.insert("generator".into(), "trako gen".into());
    t.metadata.insert("seed".into(), cfg.seed.to_string());
    Ok(t)
}
