//! Stage two: texture recovery on frozen geometry.
//!
//! With the registered vertices fixed, rendering becomes linear in the
//! texture, so texel values follow from gradient descent on a masked photo
//! loss plus total variation, pulled back through the exact adjoint of the
//! texture-sampling rasterizer.

use super::config::FitConfig;
use super::energy::{masked_element_count, masked_mse_loss, masked_tv_loss};
use super::Observation;
use crate::geometry::{rasterize_uv_domain, TemplateMesh};
use crate::optim::Adam;
use crate::render::{rasterize, texel_coverage, Camera, CoverageMap, Image, TextureMap, View};
use crate::{Error, Result, Vec3};

#[derive(Debug, Clone, Copy)]
pub struct TextureTraceRow {
    pub step: usize,
    pub total: f64,
    pub photo: f64,
    pub smoothness: f64,
}

pub struct TextureResult {
    pub texture: TextureMap,
    pub coverage: CoverageMap,
    pub trace: Vec<TextureTraceRow>,
}

/// Neutral gray used to initialize texels; uncovered texels keep it.
pub const TEXTURE_INIT: f64 = 0.5;

pub fn recover_texture(
    mesh: &TemplateMesh,
    vertices: &[Vec3],
    obs: &Observation,
    cfg: &FitConfig,
) -> Result<TextureResult> {
    let res = cfg.texture_resolution;
    let cameras = [
        Camera::new(View::Front, cfg.world_extent, cfg.image_size),
        Camera::new(View::Back, cfg.world_extent, cfg.image_size),
    ];
    let views = [&obs.front, &obs.back];
    let rasters: Vec<_> = cameras.iter().map(|cam| rasterize(mesh, vertices, cam, res)).collect();

    let denom: f64 = views
        .iter()
        .map(|v| masked_element_count(&v.mask.data, v.image.channels))
        .sum();

    // The optional texel-space smoothness term needs the UV occupancy so it
    // never couples texels across chart gaps.
    let uv_tv_mask: Option<Vec<f64>> = if cfg.w_tv_uv > 0.0 {
        let domain = rasterize_uv_domain(mesh, res)?;
        Some(domain.inside.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect())
    } else {
        None
    };

    let mut texture = TextureMap::filled(res, TEXTURE_INIT);
    let mut adam = Adam::new(texture.data.len(), cfg.lr_texture);
    let mut trace = Vec::with_capacity(cfg.steps_texture);

    for step in 0..cfg.steps_texture {
        let mut grad_tex = vec![0.0; texture.data.len()];
        let mut photo = 0.0;
        let mut smooth = 0.0;
        for (raster, vo) in rasters.iter().zip(views) {
            let rendered = raster.apply_texture(&texture);
            let (mse, g_mse) = masked_mse_loss(&rendered, &vo.image, &vo.mask.data, denom);
            let (tv, g_tv) = masked_tv_loss(&rendered, &vo.mask.data);
            photo += mse;
            smooth += tv / views.len() as f64;
            let grad_image: Vec<f64> = g_mse
                .iter()
                .zip(&g_tv)
                .map(|(a, b)| cfg.w_img * a + cfg.w_tv * b / views.len() as f64)
                .collect();
            for (acc, g) in grad_tex.iter_mut().zip(raster.backproject(&grad_image)) {
                *acc += g;
            }
        }
        let mut total = cfg.w_img * photo + cfg.w_tv * smooth;
        if let Some(mask) = &uv_tv_mask {
            let as_image = Image::from_raw(res, res, 3, std::mem::take(&mut texture.data));
            let (tv_uv, g_uv) = masked_tv_loss(&as_image, mask);
            texture.data = as_image.data;
            total += cfg.w_tv_uv * tv_uv;
            smooth += tv_uv;
            for (acc, g) in grad_tex.iter_mut().zip(&g_uv) {
                *acc += cfg.w_tv_uv * g;
            }
        }
        if !total.is_finite() {
            return Err(Error::Divergence { step });
        }
        trace.push(TextureTraceRow { step, total, photo, smoothness: smooth });
        adam.step(&mut texture.data, &grad_tex, 1.0);
    }

    texture.clamp_in_place();
    let coverage = texel_coverage(mesh, vertices, &cameras, res)?;
    Ok(TextureResult { texture, coverage, trace })
}
