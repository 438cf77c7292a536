//! Area (shading) distribution: error-diffusion halftoning of the tone
//! image, plus class-specific positional jitter for sampled dots.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::pgrid::{dpf_from_binary_image, BinaryMask, ProbGrid};
use crate::raster::GrayRaster;
use crate::sampler::SampleRun;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HalftoneKind {
    ErrorDiffusionFs,
    ErrorDiffusionOstromoukhov,
}

impl Default for HalftoneKind {
    fn default() -> Self {
        HalftoneKind::ErrorDiffusionFs
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct AreaParams {
    pub halftone: HalftoneKind,
    /// Cell pitch in pixels; the tone image is box-downsampled by this
    /// factor before halftoning.
    pub packing: usize,
    /// Max positional noise for area-class dots, in pixels.
    pub jitter_area: f64,
    /// Max positional noise for edge-class dots (normally 0).
    pub jitter_edge: f64,
}

impl Default for AreaParams {
    fn default() -> Self {
        AreaParams {
            halftone: HalftoneKind::ErrorDiffusionFs,
            packing: 1,
            jitter_area: 0.0,
            jitter_edge: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DotClass {
    Area,
    Edge,
}

/// Error-diffusion halftone of the tone image; black output pixels
/// become an equal-probability DPF.
pub fn halftone_distribution(image: &GrayRaster, params: &AreaParams) -> ProbGrid {
    let mask = halftone_mask(image, params);
    dpf_from_binary_image(&mask)
}

/// The halftoned binary image itself (black = dot location).
pub fn halftone_mask(image: &GrayRaster, params: &AreaParams) -> BinaryMask {
    let tone = image.downsample(params.packing.max(1));
    match params.halftone {
        HalftoneKind::ErrorDiffusionFs => floyd_steinberg(&tone),
        HalftoneKind::ErrorDiffusionOstromoukhov => ostromoukhov(&tone),
    }
}

/// Floyd-Steinberg error diffusion with serpentine scan order.
fn floyd_steinberg(tone: &GrayRaster) -> BinaryMask {
    let w = tone.width();
    let h = tone.height();
    let mut buf: Vec<f32> = tone.data().to_vec();
    let mut out = BinaryMask::new(w, h);
    for y in 0..h {
        let ltr = y % 2 == 0;
        let xs: Box<dyn Iterator<Item = usize>> = if ltr {
            Box::new(0..w)
        } else {
            Box::new((0..w).rev())
        };
        for x in xs {
            let i = y * w + x;
            let old = buf[i];
            let new = if old < 0.5 { 0.0 } else { 1.0 };
            if new == 0.0 {
                out.set(x, y, true);
            }
            let err = old - new;
            let fwd: isize = if ltr { 1 } else { -1 };
            let mut diffuse = |dx: isize, dy: isize, k: f32| {
                let nx = x as isize + dx * fwd;
                let ny = y as isize + dy;
                if nx >= 0 && ny >= 0 && nx < w as isize && ny < h as isize {
                    buf[ny as usize * w + nx as usize] += err * k;
                }
            };
            diffuse(1, 0, 7.0 / 16.0);
            diffuse(-1, 1, 3.0 / 16.0);
            diffuse(0, 1, 5.0 / 16.0);
            diffuse(1, 1, 1.0 / 16.0);
        }
    }
    out
}

/// Variable-coefficient error diffusion (Ostromoukhov). Coefficients are
/// looked up by the input pixel's 0..255 level; levels above 127 mirror
/// the table. Error goes to the right, down-left and down neighbors,
/// serpentine scan.
fn ostromoukhov(tone: &GrayRaster) -> BinaryMask {
    let w = tone.width();
    let h = tone.height();
    let mut buf: Vec<f32> = tone.data().to_vec();
    let mut out = BinaryMask::new(w, h);
    for y in 0..h {
        let ltr = y % 2 == 0;
        let xs: Box<dyn Iterator<Item = usize>> = if ltr {
            Box::new(0..w)
        } else {
            Box::new((0..w).rev())
        };
        for x in xs {
            let i = y * w + x;
            let old = buf[i];
            let new = if old < 0.5 { 0.0 } else { 1.0 };
            if new == 0.0 {
                out.set(x, y, true);
            }
            let err = old - new;
            let level = (tone.data()[i].clamp(0.0, 1.0) * 255.0).round() as usize;
            let level = if level > 127 { 255 - level } else { level };
            let [c_right, c_downleft, c_down] = OSTROMOUKHOV_COEFS[level];
            let sum = (c_right + c_downleft + c_down) as f32;
            let fwd: isize = if ltr { 1 } else { -1 };
            let mut diffuse = |dx: isize, dy: isize, c: i32| {
                if c == 0 {
                    return;
                }
                let nx = x as isize + dx * fwd;
                let ny = y as isize + dy;
                if nx >= 0 && ny >= 0 && nx < w as isize && ny < h as isize {
                    buf[ny as usize * w + nx as usize] += err * c as f32 / sum;
                }
            };
            diffuse(1, 0, c_right);
            diffuse(-1, 1, c_downleft);
            diffuse(0, 1, c_down);
        }
    }
    out
}

/// Published variable-coefficient table for intensity levels 0..=127
/// (right, down-left, down); levels 128..=255 mirror it.
const OSTROMOUKHOV_COEFS: [[i32; 3]; 128] = [
    [13, 0, 5],
    [13, 0, 5],
    [21, 0, 10],
    [7, 0, 4],
    [8, 0, 5],
    [47, 3, 28],
    [23, 3, 13],
    [15, 3, 8],
    [22, 6, 11],
    [43, 15, 20],
    [7, 3, 3],
    [501, 224, 211],
    [249, 116, 103],
    [165, 80, 67],
    [123, 62, 49],
    [489, 256, 191],
    [81, 44, 31],
    [483, 272, 181],
    [60, 35, 22],
    [53, 32, 19],
    [237, 148, 83],
    [471, 304, 161],
    [3, 2, 1],
    [459, 304, 161],
    [38, 25, 14],
    [453, 296, 175],
    [225, 146, 91],
    [149, 96, 63],
    [111, 71, 49],
    [63, 40, 29],
    [73, 46, 35],
    [435, 272, 217],
    [108, 67, 56],
    [13, 8, 7],
    [213, 130, 143],
    [213, 130, 143],
    [36, 22, 25],
    [176, 106, 125],
    [85, 51, 62],
    [189, 113, 141],
    [129, 77, 98],
    [7, 4, 5],
    [497, 284, 235],
    [123, 70, 59],
    [281, 160, 137],
    [177, 101, 88],
    [15, 8, 7],
    [590, 313, 289],
    [595, 314, 296],
    [600, 315, 305],
    [203, 106, 105],
    [30, 15, 16],
    [80, 40, 43],
    [635, 315, 351],
    [17, 8, 9],
    [415, 192, 229],
    [83, 38, 47],
    [3, 1, 2],
    [31, 9, 21],
    [396, 130, 308],
    [63, 18, 55],
    [745, 149, 761],
    [1000, 197, 1100],
    [49, 13, 63],
    [11, 4, 16],
    [71, 31, 112],
    [25, 14, 42],
    [4, 3, 7],
    [11, 12, 19],
    [101, 141, 175],
    [337, 557, 593],
    [110, 227, 205],
    [200, 511, 393],
    [3, 9, 6],
    [605, 2100, 1195],
    [64, 235, 121],
    [59, 236, 107],
    [17, 73, 29],
    [203, 937, 326],
    [67, 326, 99],
    [103, 529, 142],
    [55, 297, 70],
    [205, 1161, 242],
    [83, 481, 92],
    [89, 527, 90],
    [19, 116, 18],
    [577, 3588, 509],
    [38, 240, 31],
    [499, 3211, 383],
    [32, 210, 23],
    [53, 353, 36],
    [56, 379, 36],
    [58, 398, 35],
    [60, 417, 34],
    [62, 437, 33],
    [64, 457, 32],
    [66, 477, 31],
    [69, 499, 30],
    [57, 415, 23],
    [72, 532, 27],
    [375, 2801, 132],
    [77, 581, 25],
    [355, 2701, 105],
    [81, 622, 22],
    [83, 642, 21],
    [85, 661, 20],
    [86, 673, 19],
    [88, 686, 18],
    [90, 699, 17],
    [91, 710, 16],
    [93, 723, 15],
    [95, 736, 14],
    [96, 747, 13],
    [98, 760, 12],
    [100, 773, 11],
    [101, 784, 10],
    [103, 797, 9],
    [105, 810, 8],
    [106, 821, 7],
    [108, 834, 6],
    [110, 847, 5],
    [111, 858, 4],
    [113, 871, 3],
    [115, 884, 2],
    [116, 895, 1],
    [117, 900, 1],
    [118, 905, 1],
    [119, 910, 1],
];

/// Offsets each dot by class-specific uniform noise, clamped to the
/// canvas. Edge jitter is normally zero so linear features stay crisp.
pub fn jitter_dots(
    run: &SampleRun,
    classes: &[DotClass],
    grid_width: usize,
    grid_height: usize,
    params: &AreaParams,
    seed: u64,
) -> Vec<(f64, f64)> {
    assert_eq!(run.placements.len(), classes.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    run.points(grid_width)
        .into_iter()
        .zip(classes)
        .map(|((x, y), class)| {
            let j = match class {
                DotClass::Area => params.jitter_area,
                DotClass::Edge => params.jitter_edge,
            };
            let (dx, dy) = if j > 0.0 {
                (rng.random_range(-j..=j), rng.random_range(-j..=j))
            } else {
                (0.0, 0.0)
            };
            (
                (x + dx).clamp(0.0, (grid_width as f64).next_down()),
                (y + dy).clamp(0.0, (grid_height as f64).next_down()),
            )
        })
        .collect()
}
