//! Global scale search that aligns the template to the target silhouette
//! before any deformation runs.

use crate::render::{render_hard_silhouette, Camera, Image};
use crate::{Error, Result, Vec3};

/// Finds the uniform scale in [min, max] (stepped) whose hard-rendered
/// silhouette best overlaps the binarized target, by intersection over
/// union. Ties keep the smaller scale.
pub fn auto_scale(
    vertices: &[Vec3],
    faces: &[[usize; 3]],
    target: &Image,
    camera: &Camera,
    range: (f64, f64),
    step: f64,
) -> Result<f64> {
    assert!(step > 0.0 && range.1 >= range.0);
    let target_bits: Vec<bool> = target.data.iter().map(|&v| v >= 0.5).collect();
    if !target_bits.iter().any(|&b| b) {
        return Err(Error::EmptyTargetSilhouette);
    }

    let mut best_scale = range.0;
    let mut best_iou = -1.0;
    let steps = ((range.1 - range.0) / step).round() as usize;
    for i in 0..=steps {
        let s = range.0 + i as f64 * step;
        let scaled: Vec<Vec3> = vertices.iter().map(|v| v * s).collect();
        let rendered = render_hard_silhouette(&scaled, faces, camera);
        let mut inter = 0usize;
        let mut union = 0usize;
        for (&r, &t) in rendered.data.iter().zip(&target_bits) {
            let r = r >= 0.5;
            inter += (r && t) as usize;
            union += (r || t) as usize;
        }
        let iou = if union == 0 { 0.0 } else { inter as f64 / union as f64 };
        if iou > best_iou {
            best_iou = iou;
            best_scale = s;
        }
    }
    Ok(best_scale)
}

/// Hard-mask intersection over union of two images binarized at one half.
pub fn hard_iou(a: &Image, b: &Image) -> f64 {
    assert_eq!(a.data.len(), b.data.len());
    let mut inter = 0usize;
    let mut union = 0usize;
    for (&x, &y) in a.data.iter().zip(&b.data) {
        let (x, y) = (x >= 0.5, y >= 0.5);
        inter += (x && y) as usize;
        union += (x || y) as usize;
    }
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}
