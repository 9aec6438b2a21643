//! Orthographic cameras and the two renderers the pipeline needs: a soft
//! (differentiable) silhouette rasterizer for shape fitting, and a hard
//! z-buffer renderer with bilinear texture sampling for texture recovery.

mod coverage;
mod image;
mod silhouette;
mod textured;

pub use self::image::{Image, TextureMap};
pub use coverage::{texel_coverage, CoverageMap, COVERAGE_PNG_SCALE};
pub use silhouette::{render_hard_silhouette, render_silhouette, SilhouetteRender};
pub use textured::{render_textured, TexturedRender};
pub(crate) use textured::rasterize;

use crate::Vec3;

/// The two catalog viewpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum View {
    /// Camera on +z looking along -z.
    Front,
    /// Camera on -z looking along +z; x appears mirrored.
    Back,
}

/// Orthographic camera: world x in [-world_extent, world_extent] spans the
/// image width, y likewise (pixel y grows downward).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Camera {
    pub view: View,
    pub world_extent: f64,
    pub image_size: usize,
}

impl Camera {
    pub fn new(view: View, world_extent: f64, image_size: usize) -> Self {
        assert!(world_extent > 0.0 && image_size > 0);
        Camera { view, world_extent, image_size }
    }

    /// Projects to pixel coordinates: x_pix = (±x/extent + 1)/2 * size with
    /// the sign chosen by the view, y_pix = (-y/extent + 1)/2 * size.
    #[inline]
    pub fn project(&self, p: Vec3) -> [f64; 2] {
        let n = self.project_normalized(p);
        [n[0] * self.image_size as f64, n[1] * self.image_size as f64]
    }

    /// Projection into [0,1]^2 normalized image coordinates.
    #[inline]
    pub fn project_normalized(&self, p: Vec3) -> [f64; 2] {
        let sx = match self.view {
            View::Front => 1.0,
            View::Back => -1.0,
        };
        [
            (sx * p.x / self.world_extent + 1.0) * 0.5,
            (-p.y / self.world_extent + 1.0) * 0.5,
        ]
    }

    /// d(normalized x)/dx (sign by view); the y derivative is the fixed
    /// -1/(2*extent).
    #[inline]
    pub(crate) fn dnorm_dx(&self) -> f64 {
        match self.view {
            View::Front => 0.5 / self.world_extent,
            View::Back => -0.5 / self.world_extent,
        }
    }

    #[inline]
    pub(crate) fn dnorm_dy(&self) -> f64 {
        -0.5 / self.world_extent
    }

    /// Larger means closer to this camera.
    #[inline]
    pub(crate) fn depth_toward_camera(&self, z: f64) -> f64 {
        match self.view {
            View::Front => z,
            View::Back => -z,
        }
    }
}
