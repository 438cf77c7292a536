//! Toy point-distribution sweeps: pairs of analytic densities mixed at
//! increasing weights, rendered as small point-cloud images.

use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::interp::{self, DistanceField, DistanceMetric, MixSpec};
use crate::pgrid::{dpf_from_pdf, AnalyticPdf, BinaryMask, ProbGrid, Rect};
use crate::raster::GrayRaster;
use crate::sampler::{sample_dpf_opts, SubCell};

pub const GRID: usize = 64;
const PDF_SAMPLES: usize = 60_000;
const DOTS_PER_FRAME: usize = 1_200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureId {
    UniformToNormal,
    NormalToAnnulus,
    MaskedField,
    BiasSweep,
}

impl FigureId {
    pub const ALL: [FigureId; 4] = [
        FigureId::UniformToNormal,
        FigureId::NormalToAnnulus,
        FigureId::MaskedField,
        FigureId::BiasSweep,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            FigureId::UniformToNormal => "uniform-to-normal",
            FigureId::NormalToAnnulus => "normal-to-annulus",
            FigureId::MaskedField => "masked-field",
            FigureId::BiasSweep => "bias-sweep",
        }
    }
}

impl FromStr for FigureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<FigureId> {
        FigureId::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown figure id: {s}")))
    }
}

/// One frame of a sweep: sampled points on the toy grid.
#[derive(Debug, Clone)]
pub struct FigureFrame {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

fn full_domain() -> Rect {
    Rect::new(0.0, 0.0, GRID as f64, GRID as f64)
}

fn toy_dpf(pdf: &AnalyticPdf, seed: u64) -> Result<ProbGrid> {
    dpf_from_pdf(pdf, PDF_SAMPLES, GRID, GRID, seed)
}

fn sample_frame(grid: &ProbGrid, label: String, seed: u64) -> Result<FigureFrame> {
    let n = DOTS_PER_FRAME.min(grid.black_count());
    let points = if n == 0 {
        Vec::new()
    } else {
        let run = sample_dpf_opts(grid, n, seed, SubCell::Jitter)?;
        run.points(grid.width())
    };
    Ok(FigureFrame { label, points })
}

/// Vertical-line, circle, and horizontal-line boundary masks used by the
/// masked-field sweep.
pub fn toy_masks() -> Vec<(String, BinaryMask)> {
    let mut vline = BinaryMask::new(GRID, GRID);
    for y in 0..GRID {
        vline.set(GRID / 2, y, true);
    }
    let mut hline = BinaryMask::new(GRID, GRID);
    for x in 0..GRID {
        hline.set(x, GRID / 2, true);
    }
    let mut circle = BinaryMask::new(GRID, GRID);
    let c = GRID as f64 / 2.0;
    let r = GRID as f64 * 0.3;
    for i in 0..512 {
        let t = i as f64 / 512.0 * std::f64::consts::TAU;
        let x = (c + r * t.cos()) as usize;
        let y = (c + r * t.sin()) as usize;
        circle.set(x.min(GRID - 1), y.min(GRID - 1), true);
    }
    vec![
        ("vline".into(), vline),
        ("circle".into(), circle),
        ("hline".into(), hline),
    ]
}

fn field_for(mask: &BinaryMask) -> Result<DistanceField> {
    interp::distance_field(mask, DistanceMetric::Euclidean)
}

/// Generates the frames of one sweep. Alpha sweeps advance in steps of
/// 1/7 (eight frames, both endpoints included).
pub fn figure_sweep(id: FigureId, seed: u64) -> Result<Vec<FigureFrame>> {
    let domain = full_domain();
    let center = (GRID as f64 / 2.0, GRID as f64 / 2.0);
    match id {
        FigureId::UniformToNormal => {
            let f = toy_dpf(&AnalyticPdf::Uniform2d { domain }, seed)?;
            let g = toy_dpf(
                &AnalyticPdf::Normal2d {
                    mean: center,
                    sigma: GRID as f64 / 10.0,
                    domain,
                },
                seed ^ 1,
            )?;
            alpha_sweep(&f, &g, seed)
        }
        FigureId::NormalToAnnulus => {
            let f = toy_dpf(
                &AnalyticPdf::Normal2d {
                    mean: center,
                    sigma: GRID as f64 / 10.0,
                    domain,
                },
                seed,
            )?;
            let g = toy_dpf(
                &AnalyticPdf::Annulus {
                    center,
                    r_inner: GRID as f64 * 0.28,
                    r_outer: GRID as f64 * 0.42,
                },
                seed ^ 1,
            )?;
            alpha_sweep(&f, &g, seed)
        }
        FigureId::MaskedField => {
            let f = toy_dpf(
                &AnalyticPdf::Normal2d {
                    mean: center,
                    sigma: GRID as f64 / 8.0,
                    domain,
                },
                seed,
            )?;
            let g = toy_dpf(&AnalyticPdf::Uniform2d { domain }, seed ^ 1)?;
            let mut frames = Vec::new();
            for (i, (name, mask)) in toy_masks().into_iter().enumerate() {
                let df = field_for(&mask)?;
                let mixed = interp::interp_with_field(&f, &g, &df, &MixSpec::default())?;
                frames.push(sample_frame(&mixed, name, seed ^ (10 + i as u64))?);
            }
            Ok(frames)
        }
        FigureId::BiasSweep => {
            let f = toy_dpf(
                &AnalyticPdf::Normal2d {
                    mean: center,
                    sigma: GRID as f64 / 10.0,
                    domain,
                },
                seed,
            )?;
            let g = toy_dpf(&AnalyticPdf::Uniform2d { domain }, seed ^ 1)?;
            let (name, mask) = toy_masks().remove(0);
            let _ = name;
            let df = field_for(&mask)?;
            let mut frames = Vec::new();
            for (i, b) in [-1.0, -0.5, 0.0, 0.5, 1.0].into_iter().enumerate() {
                let mix = MixSpec {
                    bias: b,
                    ..MixSpec::default()
                };
                let mixed = interp::interp_with_field(&f, &g, &df, &mix)?;
                frames.push(sample_frame(&mixed, format!("b{b:+.1}"), seed ^ (20 + i as u64))?);
            }
            Ok(frames)
        }
    }
}

fn alpha_sweep(f: &ProbGrid, g: &ProbGrid, seed: u64) -> Result<Vec<FigureFrame>> {
    let mut frames = Vec::new();
    for k in 0..8 {
        let alpha = k as f64 / 7.0;
        let mixed = interp::interp_global(f, g, alpha)?;
        frames.push(sample_frame(
            &mixed,
            format!("alpha{k}of7"),
            seed ^ (30 + k as u64),
        )?);
    }
    Ok(frames)
}

/// Mean distance of the points from a center, a simple concentration
/// statistic: tight clusters score low, spread-out clouds score high.
pub fn radial_spread(points: &[(f64, f64)], center: (f64, f64)) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    points
        .iter()
        .map(|&(x, y)| ((x - center.0).powi(2) + (y - center.1).powi(2)).sqrt())
        .sum::<f64>()
        / points.len() as f64
}

/// Renders each frame as an upsampled point-cloud PNG named
/// `{figure}_{index}_{label}.png`.
pub fn write_figure(id: FigureId, dir: &Path, seed: u64) -> Result<Vec<std::path::PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let scale = 4usize;
    let mut written = Vec::new();
    for (i, frame) in figure_sweep(id, seed)?.iter().enumerate() {
        let size = GRID * scale;
        let mut img = GrayRaster::new(size, size, 1.0);
        for &(x, y) in &frame.points {
            let px = ((x * scale as f64) as usize).min(size - 1);
            let py = ((y * scale as f64) as usize).min(size - 1);
            for dy in 0..2usize {
                for dx in 0..2usize {
                    img.set((px + dx).min(size - 1), (py + dy).min(size - 1), 0.0);
                }
            }
        }
        let path = dir.join(format!("{}_{}_{}.png", id.name(), i, frame.label));
        img.save_png(&path)?;
        written.push(path);
    }
    Ok(written)
}
