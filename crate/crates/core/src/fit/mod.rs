//! Two-stage garment fitting: silhouette/landmark shape registration on a
//! deformation graph, then texture recovery on the frozen geometry.

mod config;
mod energy;
mod scale;
mod shape;
mod texture;

pub use config::FitConfig;
pub use energy::{
    landmark_loss, masked_element_count, masked_mse_loss, masked_tv_loss,
    normal_consistency_loss, soft_iou_loss, tv_loss,
};
pub use scale::{auto_scale, hard_iou};
pub use shape::{fit_shape, ShapeFitResult, ShapeTraceRow};
pub use texture::{recover_texture, TextureResult, TextureTraceRow, TEXTURE_INIT};

use std::collections::BTreeMap;

use crate::defgraph::{build_graph, GraphParams};
use crate::geometry::TemplateMesh;
use crate::render::{Camera, CoverageMap, Image, TextureMap, View};
use crate::{Error, Result, Vec2, Vec3};

/// One catalog view: the photo, its binary garment mask, and named 2D
/// landmarks in pixel coordinates.
#[derive(Debug, Clone)]
pub struct ViewObservation {
    pub image: Image,
    pub mask: Image,
    pub landmarks: BTreeMap<String, Vec2>,
}

/// Front and back observations of one garment.
#[derive(Debug, Clone)]
pub struct Observation {
    pub front: ViewObservation,
    pub back: ViewObservation,
}

impl Observation {
    /// Checks that both views are square, sized like the config, and carry
    /// an RGB image with a single-channel mask.
    pub fn validate(&self, cfg: &FitConfig) -> Result<()> {
        for (name, vo) in [("front", &self.front), ("back", &self.back)] {
            let want = format!("{0}x{0}x3 image with {0}x{0}x1 mask", cfg.image_size);
            let img = &vo.image;
            let mask = &vo.mask;
            if img.width != cfg.image_size
                || img.height != cfg.image_size
                || img.channels != 3
                || mask.width != cfg.image_size
                || mask.height != cfg.image_size
                || mask.channels != 1
            {
                return Err(Error::SizeMismatch {
                    what: "observation",
                    expected: want,
                    got: format!(
                        "{name}: {}x{}x{} image with {}x{}x{} mask",
                        img.width, img.height, img.channels, mask.width, mask.height, mask.channels
                    ),
                });
            }
        }
        Ok(())
    }
}

/// Everything the fit produces.
pub struct FitResult {
    /// Global template scale chosen before deformation.
    pub scale: f64,
    /// Final deformation-graph parameters.
    pub params: GraphParams,
    /// Registered vertex positions (scale applied, graph deformation on top).
    pub vertices: Vec<Vec3>,
    /// Recovered texture; uncovered texels hold the neutral init.
    pub texture: TextureMap,
    /// Per-texel accumulated sampling weight from both views.
    pub coverage: CoverageMap,
    pub shape_trace: Vec<ShapeTraceRow>,
    pub texture_trace: Vec<TextureTraceRow>,
}

/// Runs the full fit against a pair of catalog views.
pub fn fit_garment(
    mesh: &TemplateMesh,
    obs: &Observation,
    cfg: &FitConfig,
) -> Result<FitResult> {
    cfg.validate()?;
    obs.validate(cfg)?;

    let front_cam = Camera::new(View::Front, cfg.world_extent, cfg.image_size);
    let scale = auto_scale(
        &mesh.vertices,
        &mesh.faces,
        &obs.front.mask,
        &front_cam,
        (cfg.scale_min, cfg.scale_max),
        cfg.scale_step,
    )?;
    let base: Vec<Vec3> = mesh.vertices.iter().map(|v| v * scale).collect();

    let graph = build_graph(&base, cfg.downsample_factor, cfg.node_neighbors, cfg.skin_nodes)?;
    let shape = fit_shape(mesh, &base, &graph, obs, cfg)?;
    let tex = recover_texture(mesh, &shape.vertices, obs, cfg)?;

    Ok(FitResult {
        scale,
        params: shape.params,
        vertices: shape.vertices,
        texture: tex.texture,
        coverage: tex.coverage,
        shape_trace: shape.trace,
        texture_trace: tex.trace,
    })
}
