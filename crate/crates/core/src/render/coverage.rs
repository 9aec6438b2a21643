//! Texture-space coverage: how strongly each texel is observed by the
//! catalog views. A texel that is never sampled by any visible pixel keeps
//! weight 0 and is later treated as a hole.

use super::textured::rasterize;
use super::{Camera, Image};
use crate::geometry::{rasterize_uv_domain, TemplateMesh};
use crate::{Result, Vec3};

/// Per-texel observation weight (sum of bilinear footprints of all visible
/// pixels, front and back). Zero outside the UV domain.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageMap {
    pub resolution: usize,
    pub weight: Vec<f64>,
}

impl CoverageMap {
    pub fn mean_nonzero(&self) -> f64 {
        let mut sum = 0.0;
        let mut n = 0usize;
        for &w in &self.weight {
            if w > 0.0 {
                sum += w;
                n += 1;
            }
        }
        if n == 0 {
            0.0
        } else {
            sum / n as f64
        }
    }

    /// Stores the weights in a grayscale image, scaled by `scale`.
    pub fn to_image(&self, scale: f64) -> Image {
        Image::from_data_clamped(
            self.resolution,
            self.resolution,
            1,
            self.weight.iter().map(|w| w * scale).collect(),
        )
    }

    pub fn from_image(img: &Image, scale: f64) -> CoverageMap {
        assert_eq!(img.channels, 1);
        CoverageMap {
            resolution: img.width,
            weight: img.data.iter().map(|v| v / scale).collect(),
        }
    }
}

/// Fixed scale used when coverage maps are stored as 16-bit PNGs.
pub const COVERAGE_PNG_SCALE: f64 = 1.0 / 16.0;

pub fn texel_coverage(
    mesh: &TemplateMesh,
    vertices: &[Vec3],
    cameras: &[Camera],
    resolution: usize,
) -> Result<CoverageMap> {
    let domain = rasterize_uv_domain(mesh, resolution)?;
    let mut weight = vec![0.0; resolution * resolution];
    for cam in cameras {
        let render = rasterize(mesh, vertices, cam, resolution);
        for sample in render.samples.iter().flatten() {
            for (ti, w) in sample.taps {
                let ti = ti as usize;
                if domain.inside[ti] {
                    weight[ti] += w as f64;
                }
            }
        }
    }
    Ok(CoverageMap { resolution, weight })
}
