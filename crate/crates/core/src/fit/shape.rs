//! Stage one: silhouette- and landmark-driven shape registration through
//! the deformation graph.

use super::config::FitConfig;
use super::energy::{landmark_loss, normal_consistency_loss, soft_iou_loss};
use super::Observation;
use crate::defgraph::{deform, deform_backward, e_arap, DeformationGraph, GraphParams};
use crate::geometry::{adjacent_face_pairs, TemplateMesh};
use crate::optim::{cosine_decay, Adam};
use crate::render::{render_silhouette, Camera, View};
use crate::{Error, Result, Vec2, Vec3};

/// Per-step loss breakdown recorded during shape fitting.
#[derive(Debug, Clone, Copy)]
pub struct ShapeTraceRow {
    pub step: usize,
    pub total: f64,
    pub silhouette: f64,
    pub landmark: f64,
    pub rigidity: f64,
    pub normal: f64,
}

pub struct ShapeFitResult {
    pub params: GraphParams,
    pub vertices: Vec<Vec3>,
    pub trace: Vec<ShapeTraceRow>,
}

/// Landmark observations of one view resolved to template vertex ids and
/// normalized image coordinates.
struct ViewLandmarks {
    camera: Camera,
    ids: Vec<usize>,
    targets: Vec<Vec2>,
    mask: Vec<f64>,
}

pub fn fit_shape(
    mesh: &TemplateMesh,
    base_vertices: &[Vec3],
    graph: &DeformationGraph,
    obs: &Observation,
    cfg: &FitConfig,
) -> Result<ShapeFitResult> {
    let size = cfg.image_size;
    let mut views = Vec::with_capacity(2);
    for (view, vo) in [(View::Front, &obs.front), (View::Back, &obs.back)] {
        let mut ids = Vec::new();
        let mut targets = Vec::new();
        for (name, pos) in &vo.landmarks {
            let &vi = mesh
                .landmarks
                .get(name)
                .ok_or_else(|| Error::UnknownLandmark { name: name.clone() })?;
            ids.push(vi);
            targets.push(Vec2::new(pos.x / size as f64, pos.y / size as f64));
        }
        views.push(ViewLandmarks {
            camera: Camera::new(view, cfg.world_extent, size),
            ids,
            targets,
            mask: vo.mask.data.clone(),
        });
    }
    let total_landmarks: usize = views.iter().map(|v| v.ids.len()).sum();
    if total_landmarks == 0 {
        return Err(Error::EmptyLandmarks);
    }
    let pairs = adjacent_face_pairs(mesh);

    let mut params = GraphParams::identity(graph.node_count());
    let mut flat = params.to_flat();
    let mut adam = Adam::new(flat.len(), cfg.lr_shape);
    let mut trace = Vec::with_capacity(cfg.steps_shape);

    let sigma_ratio = cfg.sigma_end / cfg.sigma;
    for step in 0..cfg.steps_shape {
        let w_arap = cosine_decay(cfg.w_arap_start, cfg.w_arap_end, step, cfg.steps_shape);
        let w_norm = cosine_decay(cfg.w_norm_start, cfg.w_norm_end, step, cfg.steps_shape);
        let frac = step as f64 / (cfg.steps_shape - 1).max(1) as f64;
        let sigma = cfg.sigma * sigma_ratio.powf(frac);

        let vertices = deform(graph, base_vertices, &params);
        let mut grad_vertices = vec![Vec3::zeros(); vertices.len()];

        let mut e_sil = 0.0;
        let mut e_lmk = 0.0;
        for vl in &views {
            let render = render_silhouette(&vertices, &mesh.faces, &vl.camera, sigma);
            let (loss, mut grad) = soft_iou_loss(&render.image.data, &vl.mask);
            e_sil += loss / views.len() as f64;
            let scale = cfg.w_sil / views.len() as f64;
            for g in &mut grad {
                *g *= scale;
            }
            for (gv, g) in grad_vertices.iter_mut().zip(render.backward(&grad)) {
                *gv += g;
            }

            if !vl.ids.is_empty() {
                let (loss, grads) = landmark_loss(&vertices, &vl.ids, &vl.targets, &vl.camera);
                let share = vl.ids.len() as f64 / total_landmarks as f64;
                e_lmk += loss * share;
                for (vi, g) in grads {
                    grad_vertices[vi] += g * (cfg.w_lmk * share);
                }
            }
        }

        let (e_norm, grad_norm) = normal_consistency_loss(&vertices, &mesh.faces, &pairs);
        for (gv, g) in grad_vertices.iter_mut().zip(&grad_norm) {
            *gv += g * w_norm;
        }

        let mut grad_params = deform_backward(graph, base_vertices, &params, &grad_vertices);
        let (rigidity, grad_arap) = e_arap(graph, &params);
        for i in 0..grad_params.node_count() {
            grad_params.axis_angle[i] += grad_arap.axis_angle[i] * w_arap;
            grad_params.translation[i] += grad_arap.translation[i] * w_arap;
        }

        let total = cfg.w_sil * e_sil + cfg.w_lmk * e_lmk + w_arap * rigidity + w_norm * e_norm;
        if !total.is_finite() {
            return Err(Error::Divergence { step });
        }
        trace.push(ShapeTraceRow {
            step,
            total,
            silhouette: e_sil,
            landmark: e_lmk,
            rigidity,
            normal: e_norm,
        });

        adam.step(&mut flat, &grad_params.to_flat(), 1.0);
        params = GraphParams::from_flat(&flat);
    }

    let vertices = deform(graph, base_vertices, &params);
    Ok(ShapeFitResult { params, vertices, trace })
}
