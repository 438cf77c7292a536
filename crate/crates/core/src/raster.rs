//! Grayscale raster images with the filtering primitives the edge and
//! area stages need. Pixel values are f32 in [0, 1], 0 = black.

use std::path::Path;

use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct GrayRaster {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl GrayRaster {
    pub fn new(width: usize, height: usize, fill: f32) -> Self {
        assert!(width > 0 && height > 0, "raster dimensions must be > 0");
        GrayRaster {
            width,
            height,
            data: vec![fill; width * height],
        }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<f32>) -> Self {
        assert_eq!(data.len(), width * height);
        GrayRaster {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f32) {
        self.data[y * self.width + x] = v;
    }

    /// Clamped lookup, used by convolutions at the borders.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> f32 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.get(x, y)
    }

    pub fn load_png(path: &Path) -> Result<Self> {
        let img = image::open(path)?.into_luma8();
        let (w, h) = (img.width() as usize, img.height() as usize);
        let data = img.pixels().map(|p| p.0[0] as f32 / 255.0).collect();
        Ok(GrayRaster::from_vec(w, h, data))
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        let mut img = image::GrayImage::new(self.width as u32, self.height as u32);
        for (i, p) in img.pixels_mut().enumerate() {
            p.0[0] = (self.data[i].clamp(0.0, 1.0) * 255.0).round() as u8;
        }
        img.save(path)?;
        Ok(())
    }

    pub fn brightness_contrast(&self, brightness: f32, contrast: f32) -> GrayRaster {
        let data = self
            .data
            .iter()
            .map(|&v| (((v - 0.5) * contrast) + 0.5 + brightness).clamp(0.0, 1.0))
            .collect();
        GrayRaster::from_vec(self.width, self.height, data)
    }

    /// Separable Gaussian blur; a non-positive sigma is a no-op.
    pub fn gaussian_blur(&self, sigma: f32) -> GrayRaster {
        if sigma <= 0.0 {
            return self.clone();
        }
        let kernel = gaussian_kernel(sigma);
        let r = (kernel.len() / 2) as isize;
        let mut horiz = GrayRaster::new(self.width, self.height, 0.0);
        for y in 0..self.height {
            for x in 0..self.width {
                let mut acc = 0.0;
                for (k, &w) in kernel.iter().enumerate() {
                    acc += w * self.get_clamped(x as isize + k as isize - r, y as isize);
                }
                horiz.set(x, y, acc);
            }
        }
        let mut out = GrayRaster::new(self.width, self.height, 0.0);
        for y in 0..self.height {
            for x in 0..self.width {
                let mut acc = 0.0;
                for (k, &w) in kernel.iter().enumerate() {
                    acc += w * horiz.get_clamped(x as isize, y as isize + k as isize - r);
                }
                out.set(x, y, acc);
            }
        }
        out
    }

    /// Box downsample by an integer pitch (average pooling). Partial
    /// border blocks average over the covered pixels.
    pub fn downsample(&self, pitch: usize) -> GrayRaster {
        assert!(pitch >= 1);
        if pitch == 1 {
            return self.clone();
        }
        let w = self.width.div_ceil(pitch);
        let h = self.height.div_ceil(pitch);
        let mut out = GrayRaster::new(w, h, 0.0);
        for by in 0..h {
            for bx in 0..w {
                let mut sum = 0.0;
                let mut n = 0;
                for y in by * pitch..((by + 1) * pitch).min(self.height) {
                    for x in bx * pitch..((bx + 1) * pitch).min(self.width) {
                        sum += self.get(x, y);
                        n += 1;
                    }
                }
                out.set(bx, by, sum / n as f32);
            }
        }
        out
    }
}

fn gaussian_kernel(sigma: f32) -> Vec<f32> {
    let r = (3.0 * sigma).ceil() as isize;
    let mut k: Vec<f32> = (-r..=r)
        .map(|i| (-(i as f32).powi(2) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f32 = k.iter().sum();
    for v in &mut k {
        *v /= sum;
    }
    k
}
