//! Rendering of sampled, classified dots: SVG circles or raster output
//! with coverage antialiasing and optional texture stamps.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::area::DotClass;
use crate::error::{Error, Result};
use crate::interp::{FieldSource, GammaSpec, MixSpec};
use crate::pgrid::BinaryMask;
use crate::raster::GrayRaster;

const MM_PER_INCH: f64 = 25.4;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct PageSpec {
    pub width_mm: f64,
    pub height_mm: f64,
    pub ppi: f64,
}

impl Default for PageSpec {
    fn default() -> Self {
        // A5 at 300 ppi
        PageSpec {
            width_mm: 148.5,
            height_mm: 210.0,
            ppi: 300.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case", tag = "policy")]
pub enum SizePolicy {
    /// Fixed radius r (diameter size = r px... size is the dot diameter
    /// in output pixels).
    Constant { size: f64 },
    /// Size from tone: darker pixels give bigger dots.
    Modulated { min: f64, max: f64 },
    /// Uniform choice from a discrete size list (technical pen tips).
    RandomDiscrete { sizes: Vec<f64> },
}

impl Default for SizePolicy {
    fn default() -> Self {
        SizePolicy::Modulated { min: 2.0, max: 4.0 }
    }
}

impl SizePolicy {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        match self {
            SizePolicy::Constant { size } => {
                if *size <= 0.0 {
                    return bad(format!("constant size must be > 0, got {size}"));
                }
            }
            SizePolicy::Modulated { min, max } => {
                if *min <= 0.0 || *max < *min {
                    return bad(format!("modulated sizes need 0 < min <= max, got {min}..{max}"));
                }
            }
            SizePolicy::RandomDiscrete { sizes } => {
                if sizes.is_empty() || sizes.iter().any(|s| *s <= 0.0) {
                    return bad("discrete size list must be nonempty and positive".into());
                }
            }
        }
        Ok(())
    }

    /// Mean of the policy's size range, used for edge dots.
    pub fn mean_size(&self) -> f64 {
        match self {
            SizePolicy::Constant { size } => *size,
            SizePolicy::Modulated { min, max } => (min + max) / 2.0,
            SizePolicy::RandomDiscrete { sizes } => {
                sizes.iter().sum::<f64>() / sizes.len() as f64
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case", tag = "policy")]
pub enum EdgeSizePolicy {
    /// Mean of the area size range with a random +/- 25% scaling.
    MeanOfAreaRangePm25,
    Constant { size: f64 },
    SameAsArea,
}

impl Default for EdgeSizePolicy {
    fn default() -> Self {
        EdgeSizePolicy::MeanOfAreaRangePm25
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    Svg,
    Raster,
}

impl Default for OutputKind {
    fn default() -> Self {
        OutputKind::Svg
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct RenderConfig {
    pub page: PageSpec,
    pub size_policy: SizePolicy,
    pub edge_size_policy: EdgeSizePolicy,
    /// Use the bundled procedural texture atlas for raster output.
    pub textured: bool,
    /// Directory with stamp PNGs + manifest.json; overrides the bundled
    /// atlas when set.
    pub texture_dir: Option<std::path::PathBuf>,
    pub output: OutputKind,
    /// Embed the dot class as an attribute on SVG circles.
    pub embed_class: bool,
}

impl Default for RenderConfig {
    fn default() -> Self {
        RenderConfig {
            page: PageSpec::default(),
            size_policy: SizePolicy::default(),
            edge_size_policy: EdgeSizePolicy::default(),
            textured: false,
            texture_dir: None,
            output: OutputKind::Svg,
            embed_class: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dot {
    /// Continuous canvas coordinates in DPF grid units.
    pub x: f64,
    pub y: f64,
    /// Dot diameter in output pixels.
    pub size: f64,
    pub class: DotClass,
    pub texture: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DotSet {
    pub dots: Vec<Dot>,
    /// DPF grid dimensions the coordinates live in.
    pub canvas: (usize, usize),
}

/// One grayscale dot stamp with its scan metadata.
#[derive(Debug, Clone)]
pub struct Stamp {
    pub name: String,
    pub native_ppi: f64,
    pub nominal_diameter_px: f64,
    pub image: GrayRaster,
}

#[derive(Debug, Clone)]
pub struct TextureAtlas {
    pub stamps: Vec<Stamp>,
}

#[derive(serde::Deserialize)]
struct ManifestEntry {
    file: String,
    name: String,
    native_ppi: f64,
    nominal_diameter_px: f64,
}

impl TextureAtlas {
    /// Loads a directory of PNG stamps described by a manifest.json list
    /// of { file, name, native_ppi, nominal_diameter_px }.
    pub fn load_dir(dir: &Path) -> Result<TextureAtlas> {
        let manifest = dir.join("manifest.json");
        if !manifest.exists() {
            return Err(Error::FileNotFound(manifest));
        }
        let entries: Vec<ManifestEntry> =
            serde_json::from_str(&std::fs::read_to_string(manifest)?)?;
        let mut stamps = Vec::with_capacity(entries.len());
        for e in entries {
            let image = GrayRaster::load_png(&dir.join(&e.file))?;
            stamps.push(Stamp {
                name: e.name,
                native_ppi: e.native_ppi,
                nominal_diameter_px: e.nominal_diameter_px,
                image,
            });
        }
        if stamps.is_empty() {
            return Err(Error::Config("texture atlas has no stamps".into()));
        }
        Ok(TextureAtlas { stamps })
    }

    /// Eight procedurally generated irregular dot stamps at 1200 ppi,
    /// standing in for scanned pen dots. Real scans drop in via
    /// [`TextureAtlas::load_dir`] with the same manifest format.
    pub fn bundled() -> TextureAtlas {
        let stamps = (0..8)
            .map(|i| {
                let size = 48usize;
                let mut rng = ChaCha8Rng::seed_from_u64(0xd07_a71a5 + i);
                // low-frequency radial wobble makes the blob irregular
                let amps: Vec<f64> = (0..4).map(|_| rng.random_range(0.03..0.12)).collect();
                let phases: Vec<f64> =
                    (0..4).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
                let mut img = GrayRaster::new(size, size, 1.0);
                let c = size as f64 / 2.0;
                let base_r = size as f64 * 0.36;
                for y in 0..size {
                    for x in 0..size {
                        let dx = x as f64 + 0.5 - c;
                        let dy = y as f64 + 0.5 - c;
                        let theta = dy.atan2(dx);
                        let mut wobble = 1.0;
                        for k in 0..4 {
                            wobble += amps[k] * ((k as f64 + 2.0) * theta + phases[k]).sin();
                        }
                        let r_edge = base_r * wobble;
                        let r = (dx * dx + dy * dy).sqrt();
                        // soft ink falloff near the rim
                        let v = ((r - r_edge + 1.5) / 3.0).clamp(0.0, 1.0);
                        img.set(x, y, v as f32);
                    }
                }
                Stamp {
                    name: format!("blob{i}"),
                    native_ppi: 1200.0,
                    nominal_diameter_px: base_r * 2.0,
                    image: img,
                }
            })
            .collect();
        TextureAtlas { stamps }
    }
}

/// Assigns a size (and optional texture index) to every dot. Area dots
/// follow the size policy; edge dots follow the edge policy, by default
/// the mean of the area range scaled by a uniform +/- 25%.
pub fn assign_sizes(
    points: &[(f64, f64)],
    classes: &[DotClass],
    canvas: (usize, usize),
    tone: Option<&GrayRaster>,
    config: &RenderConfig,
    seed: u64,
) -> Result<DotSet> {
    assert_eq!(points.len(), classes.len());
    config.size_policy.validate()?;
    if matches!(config.size_policy, SizePolicy::Modulated { .. }) && tone.is_none() {
        return Err(Error::MissingToneImage);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_textures = if config.textured {
        TextureAtlas::bundled().stamps.len()
    } else {
        0
    };
    let tone_at = |x: f64, y: f64| -> f64 {
        match tone {
            Some(t) => {
                let tx = ((x / canvas.0 as f64) * t.width() as f64) as usize;
                let ty = ((y / canvas.1 as f64) * t.height() as f64) as usize;
                t.get(tx.min(t.width() - 1), ty.min(t.height() - 1)) as f64
            }
            None => 1.0,
        }
    };
    let mut dots = Vec::with_capacity(points.len());
    for (&(x, y), &class) in points.iter().zip(classes) {
        let size = match class {
            DotClass::Area => match &config.size_policy {
                SizePolicy::Constant { size } => *size,
                SizePolicy::Modulated { min, max } => {
                    min + (1.0 - tone_at(x, y)) * (max - min)
                }
                SizePolicy::RandomDiscrete { sizes } => {
                    sizes[rng.random_range(0..sizes.len())]
                }
            },
            DotClass::Edge => match &config.edge_size_policy {
                EdgeSizePolicy::MeanOfAreaRangePm25 => {
                    config.size_policy.mean_size() * rng.random_range(0.75..1.25)
                }
                EdgeSizePolicy::Constant { size } => *size,
                EdgeSizePolicy::SameAsArea => match &config.size_policy {
                    SizePolicy::Constant { size } => *size,
                    SizePolicy::Modulated { min, max } => {
                        min + (1.0 - tone_at(x, y)) * (max - min)
                    }
                    SizePolicy::RandomDiscrete { sizes } => {
                        sizes[rng.random_range(0..sizes.len())]
                    }
                },
            },
        };
        let texture = if n_textures > 0 {
            Some(rng.random_range(0..n_textures))
        } else {
            None
        };
        dots.push(Dot {
            x,
            y,
            size,
            class,
            texture,
        });
    }
    Ok(DotSet {
        dots,
        canvas,
    })
}

/// SVG 1.1 output, one filled circle per dot, page dimensions in mm.
/// Byte-deterministic for identical inputs.
pub fn render_svg(dots: &DotSet, config: &RenderConfig) -> String {
    let page = &config.page;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" \
         width=\"{w}mm\" height=\"{h}mm\" viewBox=\"0 0 {w} {h}\">",
        w = fmt_mm(page.width_mm),
        h = fmt_mm(page.height_mm),
    );
    let mm_per_dot_px = MM_PER_INCH / page.ppi;
    for dot in &dots.dots {
        let cx = dot.x / dots.canvas.0 as f64 * page.width_mm;
        let cy = dot.y / dots.canvas.1 as f64 * page.height_mm;
        let r = dot.size / 2.0 * mm_per_dot_px;
        if config.embed_class {
            let class = match dot.class {
                DotClass::Area => "area",
                DotClass::Edge => "edge",
            };
            let _ = writeln!(
                svg,
                "  <circle cx=\"{}\" cy=\"{}\" r=\"{}\" class=\"{class}\"/>",
                fmt_mm(cx),
                fmt_mm(cy),
                fmt_mm(r)
            );
        } else {
            let _ = writeln!(
                svg,
                "  <circle cx=\"{}\" cy=\"{}\" r=\"{}\"/>",
                fmt_mm(cx),
                fmt_mm(cy),
                fmt_mm(r)
            );
        }
    }
    svg.push_str("</svg>\n");
    svg
}

fn fmt_mm(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-" {
        "0".into()
    } else {
        s.to_string()
    }
}

/// Rasterizes the dot set onto a white canvas at page size x ppi.
/// Plain dots are circles with coverage antialiasing; textured dots are
/// stamps resized (integer texel count) to twice the nominal dot
/// diameter. Overlaps multiply transmittances, accumulating ink.
pub fn render_raster(dots: &DotSet, config: &RenderConfig) -> Result<GrayRaster> {
    let page = &config.page;
    let w = (page.width_mm * page.ppi / MM_PER_INCH).round() as usize;
    let h = (page.height_mm * page.ppi / MM_PER_INCH).round() as usize;
    let mut trans = vec![1.0f64; w * h];
    let sx = w as f64 / dots.canvas.0 as f64;
    let sy = h as f64 / dots.canvas.1 as f64;
    let atlas = if config.textured {
        Some(match &config.texture_dir {
            Some(dir) => TextureAtlas::load_dir(dir)?,
            None => TextureAtlas::bundled(),
        })
    } else {
        None
    };
    for dot in &dots.dots {
        let cx = dot.x * sx;
        let cy = dot.y * sy;
        match (&atlas, dot.texture) {
            (Some(atlas), Some(ti)) => {
                let stamp = &atlas.stamps[ti % atlas.stamps.len()];
                // 2x the nominal diameter, rounded to whole texels
                let target = (2.0 * dot.size).round().max(1.0) as usize;
                stamp_texture(&mut trans, w, h, cx, cy, stamp, target);
            }
            _ => {
                let r = dot.size / 2.0;
                splat_circle(&mut trans, w, h, cx, cy, r);
            }
        }
    }
    let data = trans.iter().map(|&t| t as f32).collect();
    Ok(GrayRaster::from_vec(w, h, data))
}

fn splat_circle(trans: &mut [f64], w: usize, h: usize, cx: f64, cy: f64, r: f64) {
    let x0 = ((cx - r - 1.0).floor().max(0.0)) as usize;
    let y0 = ((cy - r - 1.0).floor().max(0.0)) as usize;
    let x1 = ((cx + r + 1.0).ceil() as usize).min(w);
    let y1 = ((cy + r + 1.0).ceil() as usize).min(h);
    for y in y0..y1 {
        for x in x0..x1 {
            let dx = x as f64 + 0.5 - cx;
            let dy = y as f64 + 0.5 - cy;
            let d = (dx * dx + dy * dy).sqrt();
            let coverage = (r - d + 0.5).clamp(0.0, 1.0);
            if coverage > 0.0 {
                trans[y * w + x] *= 1.0 - coverage;
            }
        }
    }
}

fn stamp_texture(
    trans: &mut [f64],
    w: usize,
    h: usize,
    cx: f64,
    cy: f64,
    stamp: &Stamp,
    target: usize,
) {
    let half = target as f64 / 2.0;
    let x0 = ((cx - half).floor().max(0.0)) as usize;
    let y0 = ((cy - half).floor().max(0.0)) as usize;
    let x1 = (((cx + half).ceil()) as usize).min(w);
    let y1 = (((cy + half).ceil()) as usize).min(h);
    let sw = stamp.image.width() as f64;
    let sh = stamp.image.height() as f64;
    for y in y0..y1 {
        for x in x0..x1 {
            // nearest-texel lookup in the resized stamp
            let u = ((x as f64 + 0.5 - (cx - half)) / target as f64 * sw) as usize;
            let v = ((y as f64 + 0.5 - (cy - half)) / target as f64 * sh) as usize;
            if u >= stamp.image.width() || v >= stamp.image.height() {
                continue;
            }
            let t = stamp.image.get(u, v) as f64;
            trans[y * w + x] *= t;
        }
    }
}

/// Preconfigured mask-driven effects: each returns the mix spec plus the
/// mask to feed the distance field.
#[derive(Debug, Clone)]
pub enum Effect {
    /// Suppress area dots within l1 of edges, ramping back by l2.
    WhiteBorder { l1: f64, l2: f64 },
    /// Flip which distribution dominates near the mask.
    Inverted,
    /// Force delta = 0 inside the white region of an emphasis mask and
    /// override the bias so edge stipples always draw.
    Emphasis {
        region: BinaryMask,
        b_override: f64,
    },
}

pub fn build_mask_effects(edge_mask: &BinaryMask, effect: &Effect) -> Result<(MixSpec, BinaryMask)> {
    match effect {
        Effect::WhiteBorder { l1, l2 } => {
            let spec = MixSpec {
                bias: 0.0,
                gamma: GammaSpec::Band { l1: *l1, l2: *l2 },
                field_source: FieldSource::EdgeMask,
            };
            spec.validate()?;
            Ok((spec, edge_mask.clone()))
        }
        Effect::Inverted => {
            let spec = MixSpec {
                bias: 0.0,
                gamma: GammaSpec::Table {
                    values: vec![1.0, 0.0],
                },
                field_source: FieldSource::EdgeMask,
            };
            Ok((spec, edge_mask.clone()))
        }
        Effect::Emphasis { region, b_override } => {
            if region.width() != edge_mask.width() || region.height() != edge_mask.height() {
                return Err(Error::DimensionMismatch(
                    edge_mask.width(),
                    edge_mask.height(),
                    region.width(),
                    region.height(),
                ));
            }
            // white region cells join the boundary set, pinning delta to 0
            let mask = edge_mask.union(&region.inverted())?;
            let spec = MixSpec {
                bias: *b_override,
                gamma: GammaSpec::Linear,
                field_source: FieldSource::EdgeMask,
            };
            spec.validate()?;
            Ok((spec, mask))
        }
    }
}
