//! Thin-plate-spline warping baseline: a minimum-bending 2D interpolant
//! solved from landmark correspondences, used to pull catalog-image pixels
//! directly into UV texture space. Because the warp only sees 2D landmark
//! positions, self-occluded garment regions either sample the wrong pixels
//! or land outside the silhouette and are marked missing.

use crate::fit::{Observation, ViewObservation, TEXTURE_INIT};
use crate::geometry::{face_normals, uv_face_map, TemplateMesh};
use crate::refine::ResidualMask;
use crate::render::TextureMap;
use crate::{Error, Result, Vec2};
use nalgebra::{DMatrix, DVector};

/// Default kernel regularization for texture baking, for numerical
/// conditioning only.
pub const TPS_BAKE_LAMBDA: f64 = 1e-6;

/// A solved 2D thin-plate spline f(p) = affine . [p; 1] + sum_i w_i U(|p - src_i|).
#[derive(Debug, Clone)]
pub struct TpsWarp {
    pub control_src: Vec<Vec2>,
    pub control_dst: Vec<Vec2>,
    /// Rows are output x and y: [a_x, a_y, a_1].
    pub affine: [[f64; 3]; 2],
    /// Per-control kernel weight (x and y components).
    pub kernel_weights: Vec<Vec2>,
    pub lambda: f64,
}

/// U(r) = r^2 log r, expressed in r^2 to avoid the square root; U(0) = 0.
#[inline]
fn kernel_u(r2: f64) -> f64 {
    if r2 <= 0.0 {
        0.0
    } else {
        0.5 * r2 * r2.ln()
    }
}

/// Solves the standard TPS linear system
///   [K + lambda*I  P] [w]   [dst]
///   [P^T           0] [a] = [0]
/// with P rows [1, x_i, y_i]; the zero block enforces the side conditions
/// sum(w) = sum(w*x) = sum(w*y) = 0.
pub fn tps_solve(src: &[Vec2], dst: &[Vec2], lambda: f64) -> Result<TpsWarp> {
    let n = src.len();
    if n < 3 || dst.len() < 3 {
        return Err(Error::InsufficientControls { needed: 3, got: n.min(dst.len()) });
    }
    if dst.len() != n {
        return Err(Error::LengthMismatch { what: "tps controls", expected: n, got: dst.len() });
    }
    if !(lambda >= 0.0) {
        return Err(Error::Config { msg: format!("tps lambda must be >= 0, got {lambda}") });
    }
    let dim = n + 3;
    let mut m = DMatrix::<f64>::zeros(dim, dim);
    for i in 0..n {
        for j in 0..n {
            let r2 = (src[i] - src[j]).norm_squared();
            m[(i, j)] = kernel_u(r2) + if i == j { lambda } else { 0.0 };
        }
        m[(i, n)] = 1.0;
        m[(i, n + 1)] = src[i].x;
        m[(i, n + 2)] = src[i].y;
        m[(n, i)] = 1.0;
        m[(n + 1, i)] = src[i].x;
        m[(n + 2, i)] = src[i].y;
    }
    let mut rhs_x = DVector::<f64>::zeros(dim);
    let mut rhs_y = DVector::<f64>::zeros(dim);
    for i in 0..n {
        rhs_x[i] = dst[i].x;
        rhs_y[i] = dst[i].y;
    }
    let lu = m.clone().lu();
    let sol_x = lu.solve(&rhs_x).ok_or(Error::SingularSystem)?;
    let sol_y = lu.solve(&rhs_y).ok_or(Error::SingularSystem)?;
    if sol_x.iter().chain(sol_y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem);
    }
    // LU can factor a singular system into finite garbage when rounding keeps
    // the pivots nonzero (e.g. exactly duplicated control points make an
    // inconsistent system). A usable warp must reproduce the data, so demand
    // a residual small relative to the right-hand side itself.
    let scale = 1.0 + rhs_x.norm().max(rhs_y.norm());
    for (sol, rhs) in [(&sol_x, &rhs_x), (&sol_y, &rhs_y)] {
        let residual = (&m * sol - rhs).norm();
        if residual > 1e-6 * scale {
            return Err(Error::SingularSystem);
        }
    }
    let kernel_weights = (0..n).map(|i| Vec2::new(sol_x[i], sol_y[i])).collect();
    let affine = [
        [sol_x[n + 1], sol_x[n + 2], sol_x[n]],
        [sol_y[n + 1], sol_y[n + 2], sol_y[n]],
    ];
    Ok(TpsWarp {
        control_src: src.to_vec(),
        control_dst: dst.to_vec(),
        affine,
        kernel_weights,
        lambda,
    })
}

/// Evaluates the warp at one point.
pub fn tps_apply_one(warp: &TpsWarp, p: Vec2) -> Vec2 {
    let mut out = Vec2::new(
        warp.affine[0][0] * p.x + warp.affine[0][1] * p.y + warp.affine[0][2],
        warp.affine[1][0] * p.x + warp.affine[1][1] * p.y + warp.affine[1][2],
    );
    for (c, w) in warp.control_src.iter().zip(&warp.kernel_weights) {
        let u = kernel_u((p - c).norm_squared());
        out += w * u;
    }
    out
}

pub fn tps_apply(warp: &TpsWarp, points: &[Vec2]) -> Vec<Vec2> {
    points.iter().map(|&p| tps_apply_one(warp, p)).collect()
}

/// Bending energy w_x' K w_x + w_y' K w_y of a solved warp.
pub fn bending_energy(warp: &TpsWarp) -> f64 {
    let n = warp.control_src.len();
    let mut e = 0.0;
    for i in 0..n {
        for j in 0..n {
            let u = kernel_u((warp.control_src[i] - warp.control_src[j]).norm_squared());
            e += u
                * (warp.kernel_weights[i].x * warp.kernel_weights[j].x
                    + warp.kernel_weights[i].y * warp.kernel_weights[j].y);
        }
    }
    e
}

fn view_warp(mesh: &TemplateMesh, view_obs: &ViewObservation) -> Result<TpsWarp> {
    let mut src = Vec::new();
    let mut dst = Vec::new();
    for (name, pix) in &view_obs.landmarks {
        let vid = *mesh
            .landmarks
            .get(name)
            .ok_or_else(|| Error::UnknownLandmark { name: name.clone() })?;
        // Every valid template vertex is referenced by a face with a UV.
        let uv = mesh
            .vertex_uv(vid)
            .ok_or_else(|| Error::UnknownLandmark { name: name.clone() })?;
        src.push(uv);
        dst.push(*pix);
    }
    if src.len() < 3 {
        return Err(Error::InsufficientControls { needed: 3, got: src.len() });
    }
    tps_solve(&src, &dst, TPS_BAKE_LAMBDA)
}

/// Bakes the two catalog images into UV space with one TPS per view,
/// mapping template-landmark UV positions to their observed pixels. Each
/// in-domain texel is assigned to the view its chart faces (by face-normal
/// sign), sampled bilinearly at its warped pixel; texels warped outside the
/// image or outside that view's silhouette mask are marked missing.
pub fn tps_bake_texture(
    mesh: &TemplateMesh,
    obs: &Observation,
    resolution: usize,
) -> Result<(TextureMap, ResidualMask)> {
    let fmap = uv_face_map(mesh, resolution)?;
    let domain = fmap.domain();
    let normals = face_normals(mesh, &mesh.vertices)?;
    let warp_front = view_warp(mesh, &obs.front)?;
    let warp_back = view_warp(mesh, &obs.back)?;

    let mut texture = TextureMap::filled(resolution, TEXTURE_INIT);
    let mut holes = vec![false; resolution * resolution];
    for r in 0..resolution {
        for c in 0..resolution {
            let i = r * resolution + c;
            let Some(face) = fmap.face[i] else {
                texture.set_texel(r, c, [0.0; 3]);
                continue;
            };
            let (view_obs, warp) = if normals[face as usize].z >= 0.0 {
                (&obs.front, &warp_front)
            } else {
                (&obs.back, &warp_back)
            };
            let uv = crate::geometry::texel_center_uv(r, c, resolution);
            let p = tps_apply_one(warp, uv);
            let (w, h) = (view_obs.image.width as f64, view_obs.image.height as f64);
            let visible = p.x >= 0.0
                && p.y >= 0.0
                && p.x <= w
                && p.y <= h
                && view_obs.mask.sample_bilinear(p.x, p.y, 0) >= 0.5;
            if !visible {
                holes[i] = true;
                continue;
            }
            let rgb = [
                view_obs.image.sample_bilinear(p.x, p.y, 0),
                view_obs.image.sample_bilinear(p.x, p.y, 1),
                view_obs.image.sample_bilinear(p.x, p.y, 2),
            ];
            texture.set_texel(r, c, rgb);
        }
    }
    let mask = ResidualMask::from_hole_grid(holes, &domain, 0)?;
    Ok((texture, mask))
}
