//! Rasterization of the UV chart layout onto a square texel grid.
//!
//! Grid convention used across the crate: texture grids are row-major with
//! row 0 at the top, while UVs follow the OBJ convention (origin bottom
//! left, v up). Texel (r, c) therefore has the UV center
//! ((c + 0.5)/res, 1 - (r + 0.5)/res).

use super::TemplateMesh;
use crate::{Error, Result, Vec2};

/// Boolean texel mask of the UV charts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomainMask {
    pub resolution: usize,
    /// Row-major, true where the texel center lies inside a UV triangle.
    pub inside: Vec<bool>,
}

impl DomainMask {
    pub fn inside_count(&self) -> usize {
        self.inside.iter().filter(|&&b| b).count()
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> bool {
        self.inside[r * self.resolution + c]
    }
}

/// Per-texel face index of the UV chart covering it (first face wins).
#[derive(Debug, Clone)]
pub struct UvFaceMap {
    pub resolution: usize,
    pub face: Vec<Option<u32>>,
}

impl UvFaceMap {
    pub fn domain(&self) -> DomainMask {
        DomainMask {
            resolution: self.resolution,
            inside: self.face.iter().map(|f| f.is_some()).collect(),
        }
    }
}

/// UV center of texel (r, c).
#[inline]
pub(crate) fn texel_center_uv(r: usize, c: usize, resolution: usize) -> Vec2 {
    let res = resolution as f64;
    Vec2::new((c as f64 + 0.5) / res, 1.0 - (r as f64 + 0.5) / res)
}

/// Continuous grid coordinates (gx right, gy down) of a UV point, such that
/// integer coordinates are texel centers.
#[inline]
pub(crate) fn uv_to_grid(uv: Vec2, resolution: usize) -> (f64, f64) {
    let res = resolution as f64;
    (uv.x * res - 0.5, (1.0 - uv.y) * res - 0.5)
}

pub fn rasterize_uv_domain(mesh: &TemplateMesh, resolution: usize) -> Result<DomainMask> {
    let map = uv_face_map(mesh, resolution)?;
    Ok(map.domain())
}

pub fn uv_face_map(mesh: &TemplateMesh, resolution: usize) -> Result<UvFaceMap> {
    let mut face = vec![None; resolution * resolution];
    let res = resolution as f64;
    for (fi, fuv) in mesh.face_uvs.iter().enumerate() {
        let (a, b, c) = (mesh.uvs[fuv[0]], mesh.uvs[fuv[1]], mesh.uvs[fuv[2]]);
        // Texel-space bounding box of the UV triangle.
        let umin = a.x.min(b.x).min(c.x);
        let umax = a.x.max(b.x).max(c.x);
        let vmin = a.y.min(b.y).min(c.y);
        let vmax = a.y.max(b.y).max(c.y);
        let c0 = ((umin * res - 0.5).floor().max(0.0)) as usize;
        let c1 = ((umax * res - 0.5).ceil() as usize).min(resolution.saturating_sub(1));
        let r0 = (((1.0 - vmax) * res - 0.5).floor().max(0.0)) as usize;
        let r1 = (((1.0 - vmin) * res - 0.5).ceil() as usize).min(resolution.saturating_sub(1));
        for r in r0..=r1 {
            for col in c0..=c1 {
                let idx = r * resolution + col;
                if face[idx].is_some() {
                    continue;
                }
                if point_in_triangle(texel_center_uv(r, col, resolution), a, b, c) {
                    face[idx] = Some(fi as u32);
                }
            }
        }
    }
    let map = UvFaceMap { resolution, face };
    if map.face.iter().all(|f| f.is_none()) {
        return Err(Error::EmptyDomain);
    }
    Ok(map)
}

/// Inclusive point-in-triangle test that tolerates either winding.
pub(crate) fn point_in_triangle(p: Vec2, a: Vec2, b: Vec2, c: Vec2) -> bool {
    let area = cross2(b - a, c - a);
    if area.abs() < 1e-18 {
        return false;
    }
    let s = area.signum();
    let w0 = cross2(b - a, p - a) * s;
    let w1 = cross2(c - b, p - b) * s;
    let w2 = cross2(a - c, p - c) * s;
    let tol = -1e-12 * area.abs();
    w0 >= tol && w1 >= tol && w2 >= tol
}

#[inline]
pub(crate) fn cross2(a: Vec2, b: Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}
