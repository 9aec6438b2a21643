//! Loss terms for shape registration and texture recovery.
//!
//! Every function returns the scalar loss together with its gradient so the
//! optimizer can assemble weighted sums without recomputation.

use crate::render::{Camera, Image};
use crate::{Vec2, Vec3};

/// Soft intersection-over-union mismatch between a soft silhouette `pred`
/// and a binary target: 1 - sum(p*t) / sum(p + t - p*t). Returns the loss
/// and its gradient with respect to `pred`. An empty union yields zero loss.
pub fn soft_iou_loss(pred: &[f64], target: &[f64]) -> (f64, Vec<f64>) {
    assert_eq!(pred.len(), target.len());
    let mut inter = 0.0;
    let mut union = 0.0;
    for (&p, &t) in pred.iter().zip(target) {
        inter += p * t;
        union += p + t - p * t;
    }
    if union <= 0.0 {
        return (0.0, vec![0.0; pred.len()]);
    }
    let loss = 1.0 - inter / union;
    let grad = pred
        .iter()
        .zip(target)
        .map(|(&p, &t)| {
            let _ = p;
            -(t * union - inter * (1.0 - t)) / (union * union)
        })
        .collect();
    (loss, grad)
}

/// Mean Euclidean distance between projected landmark vertices and their
/// observed positions, in normalized image coordinates. Returns the loss and
/// per-landmark gradients with respect to the 3D vertex positions.
pub fn landmark_loss(
    vertices: &[Vec3],
    landmark_vertices: &[usize],
    targets_norm: &[Vec2],
    camera: &Camera,
) -> (f64, Vec<(usize, Vec3)>) {
    assert_eq!(landmark_vertices.len(), targets_norm.len());
    let n = landmark_vertices.len();
    if n == 0 {
        return (0.0, Vec::new());
    }
    let mut loss = 0.0;
    let mut grads = Vec::with_capacity(n);
    let dndx = camera.dnorm_dx();
    let dndy = camera.dnorm_dy();
    for (&vi, t) in landmark_vertices.iter().zip(targets_norm) {
        let p = camera.project_normalized(vertices[vi]);
        let diff = Vec2::new(p[0] - t.x, p[1] - t.y);
        let d = diff.norm();
        loss += d / n as f64;
        if d > 1e-15 {
            let g = diff / (d * n as f64);
            grads.push((vi, Vec3::new(g.x * dndx, g.y * dndy, 0.0)));
        }
    }
    (loss, grads)
}

/// Mean (1 - cos angle) between unit normals of adjacent face pairs.
/// Penalizes creasing; zero for a flat sheet.
pub fn normal_consistency_loss(
    vertices: &[Vec3],
    faces: &[[usize; 3]],
    pairs: &[(usize, usize)],
) -> (f64, Vec<Vec3>) {
    let mut grad = vec![Vec3::zeros(); vertices.len()];
    if pairs.is_empty() {
        return (0.0, grad);
    }
    let normals: Vec<Vec3> = faces
        .iter()
        .map(|f| (vertices[f[1]] - vertices[f[0]]).cross(&(vertices[f[2]] - vertices[f[0]])))
        .collect();
    let inv_n = 1.0 / pairs.len() as f64;
    let mut loss = 0.0;
    for &(fa, fb) in pairs {
        let (na, nb) = (normals[fa], normals[fb]);
        let (la, lb) = (na.norm(), nb.norm());
        if la < 1e-15 || lb < 1e-15 {
            continue;
        }
        let (ua, ub) = (na / la, nb / lb);
        let cos = ua.dot(&ub);
        loss += (1.0 - cos) * inv_n;
        // d(-cos)/d n_a = -(u_b - cos * u_a) / |n_a|, and symmetrically.
        let gna = -(ub - cos * ua) * (inv_n / la);
        let gnb = -(ua - cos * ub) * (inv_n / lb);
        accumulate_normal_grad(&mut grad, vertices, faces[fa], gna);
        accumulate_normal_grad(&mut grad, vertices, faces[fb], gnb);
    }
    (loss, grad)
}

/// Pulls a gradient with respect to an unnormalized face normal
/// n = (b - a) x (c - a) back to the three corners.
fn accumulate_normal_grad(grad: &mut [Vec3], vertices: &[Vec3], f: [usize; 3], gn: Vec3) {
    let u = vertices[f[1]] - vertices[f[0]];
    let v = vertices[f[2]] - vertices[f[0]];
    // d(u x v) . gn: grad_u = v x gn, grad_v = gn x u.
    let gu = v.cross(&gn);
    let gv = gn.cross(&u);
    grad[f[1]] += gu;
    grad[f[2]] += gv;
    grad[f[0]] -= gu + gv;
}

/// Isotropic total variation of an image: the mean L2 norm (across channels)
/// of horizontal differences plus the same for vertical differences.
pub fn tv_loss(image: &Image) -> (f64, Vec<f64>) {
    let (w, h, ch) = (image.width, image.height, image.channels);
    let mut grad = vec![0.0; image.data.len()];
    let mut loss = 0.0;
    let nx = ((w - 1) * h) as f64;
    let ny = (w * (h - 1)) as f64;
    for r in 0..h {
        for c in 0..w {
            if c + 1 < w {
                let mut norm2 = 0.0;
                for k in 0..ch {
                    let d = image.get(r, c + 1, k) - image.get(r, c, k);
                    norm2 += d * d;
                }
                let norm = norm2.sqrt();
                loss += norm / nx;
                if norm > 1e-15 {
                    for k in 0..ch {
                        let d = image.get(r, c + 1, k) - image.get(r, c, k);
                        let g = d / (norm * nx);
                        grad[image.idx(r, c + 1, k)] += g;
                        grad[image.idx(r, c, k)] -= g;
                    }
                }
            }
            if r + 1 < h {
                let mut norm2 = 0.0;
                for k in 0..ch {
                    let d = image.get(r + 1, c, k) - image.get(r, c, k);
                    norm2 += d * d;
                }
                let norm = norm2.sqrt();
                loss += norm / ny;
                if norm > 1e-15 {
                    for k in 0..ch {
                        let d = image.get(r + 1, c, k) - image.get(r, c, k);
                        let g = d / (norm * ny);
                        grad[image.idx(r + 1, c, k)] += g;
                        grad[image.idx(r, c, k)] -= g;
                    }
                }
            }
        }
    }
    (loss, grad)
}

/// Total variation restricted to a pixel mask: only differences whose two
/// pixels are both selected count, each directional term normalized by its
/// own active-pair count. With a full mask this equals [`tv_loss`].
pub fn masked_tv_loss(image: &Image, mask: &[f64]) -> (f64, Vec<f64>) {
    let (w, h, ch) = (image.width, image.height, image.channels);
    assert_eq!(mask.len(), w * h);
    let mut grad = vec![0.0; image.data.len()];
    let mut nx = 0usize;
    let mut ny = 0usize;
    for r in 0..h {
        for c in 0..w {
            if mask[r * w + c] == 0.0 {
                continue;
            }
            nx += (c + 1 < w && mask[r * w + c + 1] != 0.0) as usize;
            ny += (r + 1 < h && mask[(r + 1) * w + c] != 0.0) as usize;
        }
    }
    if nx == 0 && ny == 0 {
        return (0.0, grad);
    }
    let mut loss = 0.0;
    let mut accum = |ra: usize, ca: usize, rb: usize, cb: usize, n: f64, grad: &mut Vec<f64>| {
        let mut norm2 = 0.0;
        for k in 0..ch {
            let d = image.get(rb, cb, k) - image.get(ra, ca, k);
            norm2 += d * d;
        }
        let norm = norm2.sqrt();
        loss += norm / n;
        if norm > 1e-15 {
            for k in 0..ch {
                let d = image.get(rb, cb, k) - image.get(ra, ca, k);
                let g = d / (norm * n);
                grad[image.idx(rb, cb, k)] += g;
                grad[image.idx(ra, ca, k)] -= g;
            }
        }
    };
    for r in 0..h {
        for c in 0..w {
            if mask[r * w + c] == 0.0 {
                continue;
            }
            if nx > 0 && c + 1 < w && mask[r * w + c + 1] != 0.0 {
                accum(r, c, r, c + 1, nx as f64, &mut grad);
            }
            if ny > 0 && r + 1 < h && mask[(r + 1) * w + c] != 0.0 {
                accum(r, c, r + 1, c, ny as f64, &mut grad);
            }
        }
    }
    (loss, grad)
}

/// Mean squared error over pixels selected by a binary mask (all channels of
/// a selected pixel count). `denom` lets callers pool several views into one
/// mean; pass the total selected element count across views.
pub fn masked_mse_loss(pred: &Image, target: &Image, mask: &[f64], denom: f64) -> (f64, Vec<f64>) {
    assert_eq!(pred.data.len(), target.data.len());
    assert_eq!(mask.len(), pred.width * pred.height);
    let mut grad = vec![0.0; pred.data.len()];
    let mut loss = 0.0;
    if denom <= 0.0 {
        return (0.0, grad);
    }
    let ch = pred.channels;
    for (pix, &m) in mask.iter().enumerate() {
        if m == 0.0 {
            continue;
        }
        for k in 0..ch {
            let i = pix * ch + k;
            let d = pred.data[i] - target.data[i];
            loss += d * d / denom;
            grad[i] = 2.0 * d / denom;
        }
    }
    (loss, grad)
}

/// Number of mask-selected elements an image contributes to a pooled MSE.
pub fn masked_element_count(mask: &[f64], channels: usize) -> f64 {
    mask.iter().filter(|&&m| m != 0.0).count() as f64 * channels as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::adjacent_face_pairs;
    use crate::render::View;
    use crate::templates;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn iou_loss_is_zero_on_exact_match() {
        let t = vec![0.0, 1.0, 1.0, 0.0];
        let (loss, _) = soft_iou_loss(&t, &t);
        assert!(loss.abs() < 1e-12);
    }

    #[test]
    fn iou_loss_on_disjoint_masks_is_one() {
        let a = vec![1.0, 0.0];
        let b = vec![0.0, 1.0];
        let (loss, _) = soft_iou_loss(&a, &b);
        assert!((loss - 1.0).abs() < 1e-12);
    }

    #[test]
    fn iou_loss_of_empty_union_is_zero() {
        let z = vec![0.0; 8];
        let (loss, grad) = soft_iou_loss(&z, &z);
        assert_eq!(loss, 0.0);
        assert!(grad.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn iou_half_overlap_oracle() {
        // pred covers {0,1}, target {1,2}: I = 1, U = 3.
        let a = vec![1.0, 1.0, 0.0];
        let b = vec![0.0, 1.0, 1.0];
        let (loss, _) = soft_iou_loss(&a, &b);
        assert!((loss - (1.0 - 1.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn iou_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pred: Vec<f64> = (0..40).map(|_| rng.gen_range(0.05..0.95)).collect();
        let target: Vec<f64> = (0..40).map(|_| if rng.gen_bool(0.5) { 1.0 } else { 0.0 }).collect();
        let (_, grad) = soft_iou_loss(&pred, &target);
        let step = 1e-6;
        for i in (0..pred.len()).step_by(7) {
            let mut p = pred.clone();
            p[i] += step;
            let (lp, _) = soft_iou_loss(&p, &target);
            p[i] -= 2.0 * step;
            let (lm, _) = soft_iou_loss(&p, &target);
            let fd = (lp - lm) / (2.0 * step);
            assert!((grad[i] - fd).abs() < 1e-6, "i={i}: {} vs {fd}", grad[i]);
        }
    }

    #[test]
    fn landmark_loss_zero_when_projections_match() {
        let verts = vec![Vec3::new(0.3, -0.2, 0.1)];
        let cam = Camera::new(View::Front, 1.5, 64);
        let p = cam.project_normalized(verts[0]);
        let (loss, grads) = landmark_loss(&verts, &[0], &[Vec2::new(p[0], p[1])], &cam);
        assert!(loss < 1e-12);
        assert!(grads.is_empty());
    }

    #[test]
    fn landmark_loss_matches_hand_computation() {
        // Front view, extent 1: vertex at origin projects to (0.5, 0.5).
        let verts = vec![Vec3::zeros()];
        let cam = Camera::new(View::Front, 1.0, 64);
        let (loss, _) = landmark_loss(&verts, &[0], &[Vec2::new(0.8, 0.9)], &cam);
        assert!((loss - (0.3f64.powi(2) + 0.4f64.powi(2)).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn landmark_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let verts: Vec<Vec3> = (0..5)
            .map(|_| Vec3::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5), 0.0))
            .collect();
        let ids = vec![0, 2, 4];
        let targets: Vec<Vec2> =
            (0..3).map(|_| Vec2::new(rng.gen_range(0.2..0.8), rng.gen_range(0.2..0.8))).collect();
        for view in [View::Front, View::Back] {
            let cam = Camera::new(view, 1.5, 64);
            let (_, grads) = landmark_loss(&verts, &ids, &targets, &cam);
            let mut dense = vec![Vec3::zeros(); verts.len()];
            for (vi, g) in grads {
                dense[vi] += g;
            }
            let step = 1e-6;
            for vi in [0usize, 2, 4] {
                for axis in 0..2 {
                    let mut vp = verts.clone();
                    vp[vi][axis] += step;
                    let (lp, _) = landmark_loss(&vp, &ids, &targets, &cam);
                    vp[vi][axis] -= 2.0 * step;
                    let (lm, _) = landmark_loss(&vp, &ids, &targets, &cam);
                    let fd = (lp - lm) / (2.0 * step);
                    assert!((dense[vi][axis] - fd).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn flat_sheet_has_zero_normal_loss() {
        let t = templates::builtin("quad").unwrap();
        let pairs = adjacent_face_pairs(&t.mesh);
        let (loss, grad) = normal_consistency_loss(&t.mesh.vertices, &t.mesh.faces, &pairs);
        assert!(loss < 1e-12);
        assert!(grad.iter().all(|g| g.norm() < 1e-9));
    }

    #[test]
    fn right_angle_fold_costs_one() {
        // Two triangles sharing an edge, folded 90 degrees.
        let verts = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
        ];
        let faces = vec![[0, 1, 2], [1, 0, 3]];
        let (loss, _) = normal_consistency_loss(&verts, &faces, &[(0, 1)]);
        assert!((loss - 1.0).abs() < 1e-12, "loss = {loss}");
    }

    #[test]
    fn normal_gradient_matches_finite_differences() {
        let t = templates::builtin("mini").unwrap();
        let pairs = adjacent_face_pairs(&t.mesh);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let verts: Vec<Vec3> = t
            .mesh
            .vertices
            .iter()
            .map(|v| {
                v + Vec3::new(
                    rng.gen_range(-0.01..0.01),
                    rng.gen_range(-0.01..0.01),
                    rng.gen_range(-0.01..0.01),
                )
            })
            .collect();
        let (_, grad) = normal_consistency_loss(&verts, &t.mesh.faces, &pairs);
        let loss_of = |vs: &[Vec3]| normal_consistency_loss(vs, &t.mesh.faces, &pairs).0;
        let step = 1e-6;
        for _ in 0..8 {
            let dir: Vec<Vec3> = (0..verts.len())
                .map(|_| {
                    Vec3::new(
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                    )
                })
                .collect();
            let analytic: f64 = grad.iter().zip(&dir).map(|(g, d)| g.dot(d)).sum();
            let plus: Vec<Vec3> = verts.iter().zip(&dir).map(|(v, d)| v + step * d).collect();
            let minus: Vec<Vec3> = verts.iter().zip(&dir).map(|(v, d)| v - step * d).collect();
            let fd = (loss_of(&plus) - loss_of(&minus)) / (2.0 * step);
            let denom = analytic.abs().max(fd.abs()).max(1e-10);
            assert!((analytic - fd).abs() / denom < 1e-5, "{analytic} vs {fd}");
        }
    }

    #[test]
    fn tv_of_constant_image_is_zero() {
        let img = Image::from_raw(8, 8, 3, vec![0.42; 8 * 8 * 3]);
        let (loss, grad) = tv_loss(&img);
        assert_eq!(loss, 0.0);
        assert!(grad.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn tv_of_vertical_step_is_inverse_width() {
        // Left half 0, right half 1: one x-difference column fires, so the
        // mean over (w-1) columns is 1/(w-1).
        let (w, h) = (16usize, 8usize);
        let mut data = vec![0.0; w * h];
        for r in 0..h {
            for c in w / 2..w {
                data[r * w + c] = 1.0;
            }
        }
        let img = Image::from_raw(w, h, 1, data);
        let (loss, _) = tv_loss(&img);
        assert!((loss - 1.0 / (w as f64 - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn tv_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let data: Vec<f64> = (0..6 * 5 * 3).map(|_| rng.gen_range(0.0..1.0)).collect();
        let img = Image::from_raw(6, 5, 3, data.clone());
        let (_, grad) = tv_loss(&img);
        let step = 1e-6;
        for i in (0..data.len()).step_by(11) {
            let mut d = data.clone();
            d[i] += step;
            let (lp, _) = tv_loss(&Image::from_raw(6, 5, 3, d.clone()));
            d[i] -= 2.0 * step;
            let (lm, _) = tv_loss(&Image::from_raw(6, 5, 3, d));
            let fd = (lp - lm) / (2.0 * step);
            assert!((grad[i] - fd).abs() < 1e-5, "{} vs {fd}", grad[i]);
        }
    }

    #[test]
    fn masked_tv_with_full_mask_equals_plain_tv() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let data: Vec<f64> = (0..7 * 4 * 3).map(|_| rng.gen_range(0.0..1.0)).collect();
        let img = Image::from_raw(7, 4, 3, data);
        let (plain, gp) = tv_loss(&img);
        let (masked, gm) = masked_tv_loss(&img, &vec![1.0; 7 * 4]);
        assert!((plain - masked).abs() < 1e-12);
        for (a, b) in gp.iter().zip(&gm) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn masked_tv_ignores_differences_crossing_the_mask() {
        // Mask selects the left 2 columns; a huge step in column 2 is
        // invisible because its pair spans the mask boundary.
        let (w, h) = (4usize, 3usize);
        let mut data = vec![0.0; w * h];
        for r in 0..h {
            data[r * w + 3] = 100.0;
            data[r * w + 2] = 100.0;
        }
        let mask: Vec<f64> =
            (0..w * h).map(|i| if i % w < 2 { 1.0 } else { 0.0 }).collect();
        let (loss, _) = masked_tv_loss(&Image::from_raw(w, h, 1, data), &mask);
        assert_eq!(loss, 0.0);
    }

    #[test]
    fn masked_tv_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let (w, h, ch) = (6usize, 5usize, 3usize);
        let data: Vec<f64> = (0..w * h * ch).map(|_| rng.gen_range(0.0..1.0)).collect();
        let mask: Vec<f64> = (0..w * h).map(|_| if rng.gen_bool(0.7) { 1.0 } else { 0.0 }).collect();
        let (_, grad) = masked_tv_loss(&Image::from_raw(w, h, ch, data.clone()), &mask);
        let step = 1e-6;
        for i in (0..data.len()).step_by(7) {
            let mut d = data.clone();
            d[i] += step;
            let (lp, _) = masked_tv_loss(&Image::from_raw(w, h, ch, d.clone()), &mask);
            d[i] -= 2.0 * step;
            let (lm, _) = masked_tv_loss(&Image::from_raw(w, h, ch, d), &mask);
            let fd = (lp - lm) / (2.0 * step);
            assert!((grad[i] - fd).abs() < 1e-5, "{} vs {fd}", grad[i]);
        }
    }

    #[test]
    fn masked_mse_ignores_unmasked_pixels() {
        let pred = Image::from_raw(2, 2, 1, vec![0.0, 0.5, 1.0, 0.25]);
        let target = Image::from_raw(2, 2, 1, vec![1.0, 0.5, 0.0, 0.75]);
        let mask = vec![0.0, 1.0, 0.0, 1.0];
        let denom = masked_element_count(&mask, 1);
        let (loss, grad) = masked_mse_loss(&pred, &target, &mask, denom);
        assert!((loss - 0.5 * 0.5 / 2.0).abs() < 1e-12);
        assert_eq!(grad[0], 0.0);
        assert_eq!(grad[2], 0.0);
        assert!((grad[3] - 2.0 * (-0.5) / 2.0).abs() < 1e-12);
    }
}
