//! Soft silhouette rasterization.
//!
//! Every triangle j contributes an occupancy A_j(p) at pixel p: exactly 1
//! when the pixel center lies inside the projected triangle, and
//! exp(-d^2 / sigma) outside, where d is the 2D Euclidean distance from the
//! pixel center to the projected triangle boundary in normalized [0,1]
//! image coordinates. Occupancies aggregate as S(p) = 1 - prod_j (1 - A_j).
//!
//! Covered pixels saturate to exactly 1, so the interior of a
//! finely-triangulated sheet is flat and the gradient acts purely on the
//! exterior falloff band, pulling the projected boundary toward target
//! pixels. The falloff is continuous across the boundary (exp(0) = 1).

use super::{Camera, Image};
use crate::{Vec2, Vec3};

/// Triangle contributions smaller than this are dropped; they change S by
/// less than 1e-7 and keep the per-pixel lists short.
const CUTOFF: f64 = 1e-7;

#[derive(Debug, Clone, Copy)]
struct Contrib {
    /// Occupancy A_j of this triangle at the pixel.
    a: f64,
    /// Pixel center is inside the projected triangle (saturated, gradient
    /// free); outside contributions carry the falloff gradient.
    inside: bool,
    /// Vertex ids of the boundary segment closest to the pixel.
    seg: [u32; 2],
    /// Parameter of the closest point along that segment, clamped to [0,1].
    t: f64,
}

/// Forward soft rasterization result plus everything needed for the
/// vertex-gradient backward pass.
pub struct SilhouetteRender {
    pub image: Image,
    camera: Camera,
    sigma: f64,
    num_vertices: usize,
    proj: Vec<Vec2>,
    contribs: Vec<Vec<Contrib>>,
}

pub fn render_silhouette(
    vertices: &[Vec3],
    faces: &[[usize; 3]],
    camera: &Camera,
    sigma: f64,
) -> SilhouetteRender {
    assert!(sigma > 0.0);
    let size = camera.image_size;
    let proj: Vec<Vec2> = vertices
        .iter()
        .map(|&v| {
            let n = camera.project_normalized(v);
            Vec2::new(n[0], n[1])
        })
        .collect();

    let mut contribs: Vec<Vec<Contrib>> = vec![Vec::new(); size * size];
    // Beyond this distance an outside pixel's occupancy is below CUTOFF.
    let band = (sigma * (1.0 / CUTOFF).ln()).sqrt();
    let inv_size = 1.0 / size as f64;

    for f in faces {
        let (a, b, c) = (proj[f[0]], proj[f[1]], proj[f[2]]);
        let lo_x = a.x.min(b.x).min(c.x) - band;
        let hi_x = a.x.max(b.x).max(c.x) + band;
        let lo_y = a.y.min(b.y).min(c.y) - band;
        let hi_y = a.y.max(b.y).max(c.y) + band;
        if lo_x >= 1.0 || hi_x <= 0.0 || lo_y >= 1.0 || hi_y <= 0.0 {
            continue;
        }
        let px0 = ((lo_x * size as f64 - 0.5).floor().max(0.0)) as usize;
        let px1 = ((hi_x * size as f64 - 0.5).ceil().min((size - 1) as f64).max(0.0)) as usize;
        let py0 = ((lo_y * size as f64 - 0.5).floor().max(0.0)) as usize;
        let py1 = ((hi_y * size as f64 - 0.5).ceil().min((size - 1) as f64).max(0.0)) as usize;
        for py in py0..=py1 {
            let qy = (py as f64 + 0.5) * inv_size;
            for px in px0..=px1 {
                let q = Vec2::new((px as f64 + 0.5) * inv_size, qy);
                let inside = crate::geometry::point_in_triangle(q, a, b, c);
                if inside {
                    contribs[py * size + px].push(Contrib {
                        a: 1.0,
                        inside: true,
                        seg: [f[0] as u32, f[1] as u32],
                        t: 0.0,
                    });
                    continue;
                }
                let (d2, seg, t) = boundary_distance2(q, a, b, c, f);
                let occ = (-d2 / sigma).exp();
                if occ < CUTOFF {
                    continue;
                }
                contribs[py * size + px].push(Contrib { a: occ, inside: false, seg, t });
            }
        }
    }

    let mut data = vec![0.0; size * size];
    for (i, list) in contribs.iter().enumerate() {
        let mut prod = 1.0;
        for con in list {
            prod *= 1.0 - con.a;
        }
        data[i] = 1.0 - prod;
    }

    SilhouetteRender {
        image: Image::from_raw(size, size, 1, data),
        camera: *camera,
        sigma,
        num_vertices: vertices.len(),
        proj,
        contribs,
    }
}

impl SilhouetteRender {
    /// Pulls a loss gradient over the silhouette image back to the vertices.
    pub fn backward(&self, grad_image: &[f64]) -> Vec<Vec3> {
        assert_eq!(grad_image.len(), self.image.data.len());
        let size = self.camera.image_size;
        let inv_size = 1.0 / size as f64;
        let dndx = self.camera.dnorm_dx();
        let dndy = self.camera.dnorm_dy();
        let mut grad = vec![Vec3::zeros(); self.num_vertices];
        let mut partials: Vec<f64> = Vec::new();

        for (i, list) in self.contribs.iter().enumerate() {
            if list.is_empty() {
                continue;
            }
            let gs = grad_image[i];
            if gs == 0.0 {
                continue;
            }
            let q = Vec2::new(
                ((i % size) as f64 + 0.5) * inv_size,
                ((i / size) as f64 + 0.5) * inv_size,
            );
            // Leave-one-out products of (1 - A_k) via prefix/suffix scans;
            // no division, so saturated contributions (A = 1) stay exact.
            partials.clear();
            partials.resize(list.len() + 1, 1.0);
            for (j, con) in list.iter().enumerate() {
                partials[j + 1] = partials[j] * (1.0 - con.a);
            }
            let mut suffix = 1.0;
            for (j, con) in list.iter().enumerate().rev() {
                let loo = partials[j] * suffix;
                suffix *= 1.0 - con.a;
                if con.inside {
                    continue;
                }
                // dS/dA_j = prod_{k != j}(1 - A_k); dA/d(d^2) = -A/sigma.
                let g_d2 = -gs * loo * con.a / self.sigma;
                if g_d2 == 0.0 {
                    continue;
                }
                let ia = con.seg[0] as usize;
                let ib = con.seg[1] as usize;
                let (pa, pb) = (self.proj[ia], self.proj[ib]);
                let closest = pa + con.t * (pb - pa);
                // d^2 = |q - closest|^2; t is a minimizer, so dt terms vanish.
                let two_cq = 2.0 * (closest - q);
                let ga = two_cq * (g_d2 * (1.0 - con.t));
                let gb = two_cq * (g_d2 * con.t);
                grad[ia].x += ga.x * dndx;
                grad[ia].y += ga.y * dndy;
                grad[ib].x += gb.x * dndx;
                grad[ib].y += gb.y * dndy;
            }
        }
        grad
    }
}

/// Squared distance from q to the triangle boundary, together with the
/// closest segment (as global vertex ids) and its parameter.
fn boundary_distance2(
    q: Vec2,
    a: Vec2,
    b: Vec2,
    c: Vec2,
    f: &[usize; 3],
) -> (f64, [u32; 2], f64) {
    let mut best = f64::INFINITY;
    let mut best_seg = [f[0] as u32, f[1] as u32];
    let mut best_t = 0.0;
    for (p0, p1, i0, i1) in [(a, b, f[0], f[1]), (b, c, f[1], f[2]), (c, a, f[2], f[0])] {
        let e = p1 - p0;
        let len2 = e.norm_squared();
        let t = if len2 > 0.0 { ((q - p0).dot(&e) / len2).clamp(0.0, 1.0) } else { 0.0 };
        let d2 = (q - (p0 + t * e)).norm_squared();
        if d2 < best {
            best = d2;
            best_seg = [i0 as u32, i1 as u32];
            best_t = t;
        }
    }
    (best, best_seg, best_t)
}

/// Binary coverage mask: 1 where the pixel center falls inside any projected
/// triangle. Used for scale search and for synthesizing target masks.
pub fn render_hard_silhouette(vertices: &[Vec3], faces: &[[usize; 3]], camera: &Camera) -> Image {
    let size = camera.image_size;
    let proj: Vec<Vec2> = vertices
        .iter()
        .map(|&v| {
            let n = camera.project_normalized(v);
            Vec2::new(n[0], n[1])
        })
        .collect();
    let mut data = vec![0.0; size * size];
    let inv_size = 1.0 / size as f64;
    for f in faces {
        let (a, b, c) = (proj[f[0]], proj[f[1]], proj[f[2]]);
        let px0 = ((a.x.min(b.x).min(c.x) * size as f64 - 0.5).floor().max(0.0)) as usize;
        let px1 = ((a.x.max(b.x).max(c.x) * size as f64 - 0.5).ceil().min((size - 1) as f64).max(0.0))
            as usize;
        let py0 = ((a.y.min(b.y).min(c.y) * size as f64 - 0.5).floor().max(0.0)) as usize;
        let py1 = ((a.y.max(b.y).max(c.y) * size as f64 - 0.5).ceil().min((size - 1) as f64).max(0.0))
            as usize;
        for py in py0..=py1 {
            for px in px0..=px1 {
                let idx = py * size + px;
                if data[idx] == 1.0 {
                    continue;
                }
                let q = Vec2::new((px as f64 + 0.5) * inv_size, (py as f64 + 0.5) * inv_size);
                if crate::geometry::point_in_triangle(q, a, b, c) {
                    data[idx] = 1.0;
                }
            }
        }
    }
    Image::from_raw(size, size, 1, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::render::View;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn two_tri_quad() -> (Vec<Vec3>, Vec<[usize; 3]>) {
        let vertices = vec![
            Vec3::new(-0.5, -0.5, 0.0),
            Vec3::new(0.5, -0.5, 0.0),
            Vec3::new(0.5, 0.5, 0.0),
            Vec3::new(-0.5, 0.5, 0.0),
        ];
        (vertices, vec![[0, 1, 2], [0, 2, 3]])
    }

    #[test]
    fn covered_pixels_saturate_and_exterior_decays() {
        let (v, f) = two_tri_quad();
        let cam = Camera::new(View::Front, 1.0, 64);
        let render = render_silhouette(&v, &f, &cam, 1e-4);
        let s = &render.image;
        let hard = render_hard_silhouette(&v, &f, &cam);
        // Every covered pixel is exactly opaque, including along the
        // interior seam between the two triangles.
        for i in 0..s.data.len() {
            if hard.data[i] == 1.0 {
                assert_eq!(s.data[i], 1.0);
            }
        }
        // Far outside (corner).
        assert!(s.get(1, 1, 0) < 1e-6);
    }

    #[test]
    fn exterior_falloff_follows_the_distance_law() {
        // A single triangle; probe pixels straight below its bottom edge,
        // where S = exp(-d^2 / sigma) with d the vertical gap.
        let size = 64usize;
        let vertices = vec![
            Vec3::new(-0.6, 0.0, 0.0),
            Vec3::new(0.6, 0.0, 0.0),
            Vec3::new(0.0, 0.7, 0.0),
        ];
        let cam = Camera::new(View::Front, 1.0, size);
        let sigma = 4e-4;
        let render = render_silhouette(&vertices, &[[0, 1, 2]], &cam, sigma);
        // y = 0 world is row 31.5; rows 33.. are below the edge.
        let edge_y = 0.5; // normalized
        for row in 33..37 {
            let qy = (row as f64 + 0.5) / size as f64;
            let d = qy - edge_y;
            let expect = (-d * d / sigma).exp();
            let got = render.image.get(row, 32, 0);
            assert!(
                (got - expect).abs() < 1e-9,
                "row {row}: got {got}, expected {expect}"
            );
        }
    }

    #[test]
    fn wider_sigma_widens_the_band_monotonically() {
        let (v, f) = two_tri_quad();
        let cam = Camera::new(View::Front, 1.0, 64);
        let narrow = render_silhouette(&v, &f, &cam, 1e-4).image;
        let wide = render_silhouette(&v, &f, &cam, 4e-4).image;
        let hard = render_hard_silhouette(&v, &f, &cam);
        let mut strictly_wider = 0;
        for i in 0..narrow.data.len() {
            if hard.data[i] == 0.0 {
                assert!(wide.data[i] >= narrow.data[i] - 1e-12);
                if wide.data[i] > narrow.data[i] + 1e-9 {
                    strictly_wider += 1;
                }
            }
        }
        assert!(strictly_wider > 0);
    }

    #[test]
    fn vertex_gradients_match_finite_differences() {
        // Random weighted sum of the silhouette as a scalar loss; compare
        // directional derivatives on 10 random vertex directions. The quad
        // is deliberately irregular: an axis-aligned square centers pixel
        // columns exactly on corner bisectors, where the min over boundary
        // segments has a genuine kink that finite differences straddle.
        let v = vec![
            Vec3::new(-0.52, -0.41, 0.0),
            Vec3::new(0.47, -0.55, 0.0),
            Vec3::new(0.55, 0.43, 0.0),
            Vec3::new(-0.46, 0.52, 0.0),
        ];
        let f = vec![[0, 1, 2], [0, 2, 3]];
        let cam = Camera::new(View::Front, 1.0, 32);
        let sigma = 1e-3;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let weights: Vec<f64> = (0..32 * 32).map(|_| rng.gen_range(-1.0..1.0)).collect();

        let loss = |verts: &[Vec3]| -> f64 {
            let r = render_silhouette(verts, &f, &cam, sigma);
            r.image.data.iter().zip(&weights).map(|(s, w)| s * w).sum()
        };

        let render = render_silhouette(&v, &f, &cam, sigma);
        let grad = render.backward(&weights);

        for _ in 0..10 {
            let dir: Vec<Vec3> = (0..v.len())
                .map(|_| {
                    Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), 0.0)
                })
                .collect();
            let analytic: f64 = grad.iter().zip(&dir).map(|(g, d)| g.dot(d)).sum();
            let step = 1e-4;
            let perturb = |s: f64| -> Vec<Vec3> {
                v.iter().zip(&dir).map(|(p, d)| p + s * d).collect()
            };
            let fd = (loss(&perturb(step)) - loss(&perturb(-step))) / (2.0 * step);
            let denom = analytic.abs().max(fd.abs()).max(1e-8);
            assert!(
                (analytic - fd).abs() / denom < 1e-3,
                "analytic {analytic} vs fd {fd}"
            );
        }
    }

    #[test]
    fn hard_silhouette_area_matches_quad() {
        let (v, f) = two_tri_quad();
        let cam = Camera::new(View::Front, 1.0, 64);
        let hard = render_hard_silhouette(&v, &f, &cam);
        let count: f64 = hard.data.iter().sum();
        // Quad covers a quarter of the image.
        assert!((count - 1024.0).abs() <= 64.0, "count = {count}");
    }
}
