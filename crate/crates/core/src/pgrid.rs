//! Discrete probability functions over a raster grid.
//!
//! A [`ProbGrid`] stores one placement probability per cell. Cells with
//! probability zero are "white", cells with nonzero probability are
//! "black"; a nonempty grid always sums to 1.

use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::raster::GrayRaster;

/// Tolerance below which a renormalization pass is skipped, so that an
/// already-normalized grid passes through bit for bit.
const NORM_SKIP_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ProbGrid {
    width: usize,
    height: usize,
    prob: Vec<f64>,
}

impl ProbGrid {
    pub fn new_white(width: usize, height: usize) -> Self {
        assert!(width > 0 && height > 0, "grid dimensions must be > 0");
        ProbGrid {
            width,
            height,
            prob: vec![0.0; width * height],
        }
    }

    /// Builds a grid from raw weights and renormalizes. Negative weights
    /// are rejected.
    pub fn from_weights(width: usize, height: usize, weights: Vec<f64>) -> Result<Self> {
        assert_eq!(weights.len(), width * height);
        if let Some(&w) = weights.iter().find(|w| **w < 0.0 || !w.is_finite()) {
            return Err(Error::OutOfRange {
                name: "cell weight",
                value: w,
                min: 0.0,
                max: f64::INFINITY,
            });
        }
        let mut grid = ProbGrid {
            width,
            height,
            prob: weights,
        };
        grid.renormalize();
        Ok(grid)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn probs(&self) -> &[f64] {
        &self.prob
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.prob[self.index(x, y)]
    }

    #[inline]
    pub fn is_black(&self, idx: usize) -> bool {
        self.prob[idx] > 0.0
    }

    pub fn black_count(&self) -> usize {
        self.prob.iter().filter(|&&p| p > 0.0).count()
    }

    pub fn sum(&self) -> f64 {
        self.prob.iter().sum()
    }

    /// Rescales so the probabilities sum to 1. An all-white grid stays
    /// all white; a grid already summing to 1 (within 1e-12) is left
    /// untouched so renormalization is idempotent.
    pub fn renormalize(&mut self) {
        let sum = self.sum();
        if sum == 0.0 || (sum - 1.0).abs() <= NORM_SKIP_EPS {
            return;
        }
        for p in &mut self.prob {
            *p /= sum;
        }
    }

    /// Debug dump as 16-bit grayscale PNG, max probability mapped to 65535.
    pub fn save_png(&self, path: &Path) -> Result<()> {
        let max = self.prob.iter().cloned().fold(0.0f64, f64::max);
        let mut img = image::ImageBuffer::<image::Luma<u16>, Vec<u16>>::new(
            self.width as u32,
            self.height as u32,
        );
        for (i, p) in img.pixels_mut().enumerate() {
            let v = if max > 0.0 { self.prob[i] / max } else { 0.0 };
            p.0[0] = (v * 65535.0).round() as u16;
        }
        img.save(path)?;
        Ok(())
    }
}

/// Binary cell grid; `true` marks a black (on) cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize) -> Self {
        assert!(width > 0 && height > 0, "mask dimensions must be > 0");
        BinaryMask {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Self {
        assert_eq!(bits.len(), width * height);
        BinaryMask {
            width,
            height,
            bits,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.bits[y * self.width + x] = v;
    }

    pub fn count_black(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn union(&self, other: &BinaryMask) -> Result<BinaryMask> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::DimensionMismatch(
                self.width,
                self.height,
                other.width,
                other.height,
            ));
        }
        let bits = self
            .bits
            .iter()
            .zip(&other.bits)
            .map(|(&a, &b)| a || b)
            .collect();
        Ok(BinaryMask::from_bits(self.width, self.height, bits))
    }

    pub fn inverted(&self) -> BinaryMask {
        let bits = self.bits.iter().map(|&b| !b).collect();
        BinaryMask::from_bits(self.width, self.height, bits)
    }

    /// Loads an 8-bit grayscale PNG; pixels below 128 are black (on).
    pub fn load_png(path: &Path) -> Result<Self> {
        let img = image::open(path)?.into_luma8();
        let (w, h) = (img.width() as usize, img.height() as usize);
        let bits = img.pixels().map(|p| p.0[0] < 128).collect();
        Ok(BinaryMask::from_bits(w, h, bits))
    }

    /// Saves as 8-bit grayscale PNG; black (on) = 0, white (off) = 255.
    pub fn save_png(&self, path: &Path) -> Result<()> {
        let mut img = image::GrayImage::new(self.width as u32, self.height as u32);
        for (i, p) in img.pixels_mut().enumerate() {
            p.0[0] = if self.bits[i] { 0 } else { 255 };
        }
        img.save(path)?;
        Ok(())
    }
}

/// Initial probability assignment for cells built from point sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitPolicy {
    /// Every black cell gets 1/M.
    Uniform,
    /// Probability proportional to the number of points per cell.
    CountWeighted,
}

impl Default for InitPolicy {
    fn default() -> Self {
        InitPolicy::Uniform
    }
}

/// Analytic densities used for the toy distributions. The domain is a
/// rectangle in continuous cell coordinates.
#[derive(Debug, Clone)]
pub enum AnalyticPdf {
    Uniform2d {
        domain: Rect,
    },
    Normal2d {
        mean: (f64, f64),
        sigma: f64,
        domain: Rect,
    },
    Annulus {
        center: (f64, f64),
        r_inner: f64,
        r_outer: f64,
    },
    ImageWeighted {
        /// Density proportional to darkness (1 - tone).
        source: GrayRaster,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        assert!(x1 > x0 && y1 > y0, "rectangle must have positive area");
        Rect { x0, y0, x1, y1 }
    }
}

impl AnalyticPdf {
    /// Unnormalized density at a continuous point.
    pub fn density(&self, x: f64, y: f64) -> f64 {
        match self {
            AnalyticPdf::Uniform2d { domain } => {
                if x >= domain.x0 && x < domain.x1 && y >= domain.y0 && y < domain.y1 {
                    1.0
                } else {
                    0.0
                }
            }
            AnalyticPdf::Normal2d { mean, sigma, domain } => {
                if x >= domain.x0 && x < domain.x1 && y >= domain.y0 && y < domain.y1 {
                    let dx = x - mean.0;
                    let dy = y - mean.1;
                    (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp()
                } else {
                    0.0
                }
            }
            AnalyticPdf::Annulus {
                center,
                r_inner,
                r_outer,
            } => {
                let r = ((x - center.0).powi(2) + (y - center.1).powi(2)).sqrt();
                if r >= *r_inner && r <= *r_outer {
                    1.0
                } else {
                    0.0
                }
            }
            AnalyticPdf::ImageWeighted { source } => {
                if x < 0.0 || y < 0.0 {
                    return 0.0;
                }
                let (xi, yi) = (x as usize, y as usize);
                if xi >= source.width() || yi >= source.height() {
                    return 0.0;
                }
                (1.0 - source.get(xi, yi)) as f64
            }
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        match self {
            AnalyticPdf::Annulus {
                r_inner, r_outer, ..
            } => {
                if *r_inner < 0.0 || *r_outer < *r_inner || *r_outer <= 0.0 {
                    return Err(Error::DegeneratePdf);
                }
            }
            AnalyticPdf::Normal2d { sigma, .. } => {
                if *sigma <= 0.0 {
                    return Err(Error::DegeneratePdf);
                }
            }
            AnalyticPdf::ImageWeighted { source } => {
                if source.data().iter().all(|&v| v >= 1.0) {
                    return Err(Error::DegeneratePdf);
                }
            }
            AnalyticPdf::Uniform2d { .. } => {}
        }
        Ok(())
    }

    /// Bounding rectangle of the support, used as the rejection-sampling
    /// proposal region.
    fn support_rect(&self) -> Rect {
        match self {
            AnalyticPdf::Uniform2d { domain } | AnalyticPdf::Normal2d { domain, .. } => *domain,
            AnalyticPdf::Annulus {
                center, r_outer, ..
            } => Rect::new(
                center.0 - r_outer,
                center.1 - r_outer,
                center.0 + r_outer,
                center.1 + r_outer,
            ),
            AnalyticPdf::ImageWeighted { source } => Rect::new(
                0.0,
                0.0,
                source.width() as f64,
                source.height() as f64,
            ),
        }
    }

    /// Draws one point by rejection sampling against the density's upper
    /// bound (1.0 for every kind here; the normal peak is 1 at the mean).
    /// The zero-width annulus has a measure-zero support that rejection
    /// cannot hit, so it is sampled directly on the circle.
    pub fn sample_one(&self, rng: &mut ChaCha8Rng) -> (f64, f64) {
        match self {
            AnalyticPdf::Uniform2d { domain } => (
                rng.random_range(domain.x0..domain.x1),
                rng.random_range(domain.y0..domain.y1),
            ),
            AnalyticPdf::Normal2d {
                mean,
                sigma,
                domain,
            } => loop {
                // Box-Muller, truncated to the domain by rejection
                let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
                let u2: f64 = rng.random();
                let m = (-2.0 * u1.ln()).sqrt();
                let x = mean.0 + sigma * m * (std::f64::consts::TAU * u2).cos();
                let y = mean.1 + sigma * m * (std::f64::consts::TAU * u2).sin();
                if x >= domain.x0 && x < domain.x1 && y >= domain.y0 && y < domain.y1 {
                    return (x, y);
                }
            },
            AnalyticPdf::Annulus {
                center,
                r_inner,
                r_outer,
            } => {
                // Polar inverse-CDF sampling; exact, and well defined for
                // the degenerate ring r_inner == r_outer.
                let u: f64 = rng.random();
                let r2 = r_inner * r_inner + u * (r_outer * r_outer - r_inner * r_inner);
                let r = r2.sqrt();
                let theta: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                (center.0 + r * theta.cos(), center.1 + r * theta.sin())
            }
            AnalyticPdf::ImageWeighted { source } => {
                // darkness is a valid [0, 1] rejection envelope
                let rect = self.support_rect();
                loop {
                    let x = rng.random_range(rect.x0..rect.x1);
                    let y = rng.random_range(rect.y0..rect.y1);
                    let u: f64 = rng.random();
                    let px = (x.floor() as usize).min(source.width() - 1);
                    let py = (y.floor() as usize).min(source.height() - 1);
                    if u < 1.0 - source.get(px, py) as f64 {
                        return (x, y);
                    }
                }
            }
        }
    }
}

/// Builds a DPF from explicit stipple point locations: cells containing
/// at least one point are black, all others white.
pub fn dpf_from_points(
    points: &[(usize, usize)],
    width: usize,
    height: usize,
    init: InitPolicy,
) -> Result<ProbGrid> {
    let mut counts = vec![0usize; width * height];
    for (i, &(x, y)) in points.iter().enumerate() {
        if x >= width || y >= height {
            return Err(Error::PointOutOfBounds {
                index: i,
                x,
                y,
                width,
                height,
            });
        }
        counts[y * width + x] += 1;
    }
    if points.is_empty() {
        return Ok(ProbGrid::new_white(width, height));
    }
    let weights: Vec<f64> = match init {
        InitPolicy::Uniform => counts
            .iter()
            .map(|&c| if c > 0 { 1.0 } else { 0.0 })
            .collect(),
        InitPolicy::CountWeighted => counts.iter().map(|&c| c as f64).collect(),
    };
    ProbGrid::from_weights(width, height, weights)
}

/// Black pixels of the mask become equal-probability black cells.
pub fn dpf_from_binary_image(mask: &BinaryMask) -> ProbGrid {
    let weights: Vec<f64> = mask.bits().iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    ProbGrid::from_weights(mask.width(), mask.height(), weights)
        .expect("binary weights are non-negative")
}

/// Monte Carlo discretization of an analytic density: draws `n_samples`
/// points and builds a count-weighted DPF from them. Deterministic for a
/// given seed (ChaCha8 keyed by the seed).
pub fn dpf_from_pdf(
    pdf: &AnalyticPdf,
    n_samples: usize,
    width: usize,
    height: usize,
    seed: u64,
) -> Result<ProbGrid> {
    assert!(n_samples >= 1, "n_samples must be >= 1");
    pdf.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let (x, y) = pdf.sample_one(&mut rng);
        // Samples may land marginally outside the grid when the domain
        // exceeds it; clamp to the border cell.
        let cx = (x.floor().max(0.0) as usize).min(width - 1);
        let cy = (y.floor().max(0.0) as usize).min(height - 1);
        points.push((cx, cy));
    }
    dpf_from_points(&points, width, height, InitPolicy::CountWeighted)
}
