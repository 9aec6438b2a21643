//! Hard textured rendering: nearest surface at each pixel center via
//! z-buffer, bilinear texture sampling, emission only (no shading).
//! The image is linear in the texels, so the adjoint (backprojection of an
//! image gradient onto the texels) is the exact transpose of sampling.

use super::{Camera, Image, TextureMap};
use crate::geometry::{cross2, TemplateMesh};
use crate::{Vec2, Vec3};

/// One shaded pixel: the four bilinear texture taps that produced it.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PixelSample {
    pub taps: [(u32, f32); 4],
}

/// Forward render plus the sampling structure, reusable while geometry is
/// frozen (texture optimization re-applies it every step).
pub struct TexturedRender {
    pub image: Image,
    pub(crate) samples: Vec<Option<PixelSample>>,
    image_size: usize,
    texture_resolution: usize,
}

pub fn render_textured(
    mesh: &TemplateMesh,
    vertices: &[Vec3],
    texture: &TextureMap,
    camera: &Camera,
) -> TexturedRender {
    let mut render = rasterize(mesh, vertices, camera, texture.resolution);
    render.apply_texture_into_image(texture);
    render
}

/// Rasterizes only (no texture yet): computes per-pixel visibility and the
/// bilinear taps.
pub(crate) fn rasterize(
    mesh: &TemplateMesh,
    vertices: &[Vec3],
    camera: &Camera,
    texture_resolution: usize,
) -> TexturedRender {
    let size = camera.image_size;
    let proj: Vec<Vec2> = vertices
        .iter()
        .map(|&v| {
            let p = camera.project(v);
            Vec2::new(p[0], p[1])
        })
        .collect();

    let mut depth = vec![f64::NEG_INFINITY; size * size];
    let mut samples: Vec<Option<PixelSample>> = vec![None; size * size];

    for (f, fuv) in mesh.faces.iter().zip(&mesh.face_uvs) {
        let (a, b, c) = (proj[f[0]], proj[f[1]], proj[f[2]]);
        let area = cross2(b - a, c - a);
        if area.abs() < 1e-18 {
            continue;
        }
        let inv_area = 1.0 / area;
        let px0 = ((a.x.min(b.x).min(c.x) - 0.5).floor().max(0.0)) as usize;
        let px1 = ((a.x.max(b.x).max(c.x) - 0.5).ceil().min((size - 1) as f64).max(0.0)) as usize;
        let py0 = ((a.y.min(b.y).min(c.y) - 0.5).floor().max(0.0)) as usize;
        let py1 = ((a.y.max(b.y).max(c.y) - 0.5).ceil().min((size - 1) as f64).max(0.0)) as usize;
        let (za, zb, zc) = (vertices[f[0]].z, vertices[f[1]].z, vertices[f[2]].z);
        let (uva, uvb, uvc) = (mesh.uvs[fuv[0]], mesh.uvs[fuv[1]], mesh.uvs[fuv[2]]);

        for py in py0..=py1 {
            for px in px0..=px1 {
                let q = Vec2::new(px as f64 + 0.5, py as f64 + 0.5);
                let w0 = cross2(b - q, c - q) * inv_area;
                let w1 = cross2(c - q, a - q) * inv_area;
                let w2 = cross2(a - q, b - q) * inv_area;
                if w0 < -1e-12 || w1 < -1e-12 || w2 < -1e-12 {
                    continue;
                }
                // Orthographic projection: affine interpolation is exact.
                let z = w0 * za + w1 * zb + w2 * zc;
                let d = camera.depth_toward_camera(z);
                let idx = py * size + px;
                if d <= depth[idx] {
                    continue;
                }
                depth[idx] = d;
                let uv = w0 * uva + w1 * uvb + w2 * uvc;
                let taps = crate::render::image::bilinear_taps(uv.x, uv.y, texture_resolution);
                samples[idx] = Some(PixelSample {
                    taps: taps.map(|(i, w)| (i as u32, w as f32)),
                });
            }
        }
    }

    TexturedRender {
        image: Image::zeros(size, size, 3),
        samples,
        image_size: size,
        texture_resolution,
    }
}

impl TexturedRender {
    /// Re-shades with a (possibly updated) texture; background stays 0.
    pub fn apply_texture_into_image(&mut self, texture: &TextureMap) {
        assert_eq!(texture.resolution, self.texture_resolution);
        let mut data = vec![0.0; self.image_size * self.image_size * 3];
        for (i, s) in self.samples.iter().enumerate() {
            if let Some(s) = s {
                for (ti, w) in s.taps {
                    let t = ti as usize * 3;
                    let w = w as f64;
                    data[i * 3] += w * texture.data[t];
                    data[i * 3 + 1] += w * texture.data[t + 1];
                    data[i * 3 + 2] += w * texture.data[t + 2];
                }
            }
        }
        self.image = Image::from_raw(self.image_size, self.image_size, 3, data);
    }

    /// Shades into a fresh buffer without touching `self.image`.
    pub fn apply_texture(&self, texture: &TextureMap) -> Image {
        let mut clone = TexturedRender {
            image: Image::zeros(self.image_size, self.image_size, 3),
            samples: self.samples.clone(),
            image_size: self.image_size,
            texture_resolution: self.texture_resolution,
        };
        clone.apply_texture_into_image(texture);
        clone.image
    }

    /// Exact adjoint of `apply_texture`: scatters an image-space gradient
    /// back onto the texels.
    pub fn backproject(&self, grad_image: &[f64]) -> Vec<f64> {
        assert_eq!(grad_image.len(), self.image_size * self.image_size * 3);
        let mut grad_tex = vec![0.0; self.texture_resolution * self.texture_resolution * 3];
        for (i, s) in self.samples.iter().enumerate() {
            if let Some(s) = s {
                for (ti, w) in s.taps {
                    let t = ti as usize * 3;
                    let w = w as f64;
                    grad_tex[t] += w * grad_image[i * 3];
                    grad_tex[t + 1] += w * grad_image[i * 3 + 1];
                    grad_tex[t + 2] += w * grad_image[i * 3 + 2];
                }
            }
        }
        grad_tex
    }

    /// Pixels covered by any face.
    pub fn covered(&self) -> Vec<bool> {
        self.samples.iter().map(|s| s.is_some()).collect()
    }
}
