//! Deterministic synthetic test images.

use crate::raster::GrayRaster;

/// A horizontal tone gradient with a dark disk on the right half; the
/// bundled end-to-end test image. Fully deterministic arithmetic.
pub fn disk_and_gradient(size: usize) -> GrayRaster {
    assert!(size >= 8);
    let mut img = GrayRaster::new(size, size, 1.0);
    let cx = size as f64 * 0.68;
    let cy = size as f64 * 0.5;
    let r = size as f64 * 0.18;
    for y in 0..size {
        for x in 0..size {
            // gradient dark on the left, light on the right
            let mut v = 0.15 + 0.85 * (x as f64 / (size - 1) as f64);
            let dx = x as f64 + 0.5 - cx;
            let dy = y as f64 + 0.5 - cy;
            if (dx * dx + dy * dy).sqrt() < r {
                v = 0.08;
            }
            img.set(x, y, v as f32);
        }
    }
    img
}
