//! Table-style evaluation: scores each recovery method (optimization
//! pipeline vs. the TPS warping baseline), with and without the classical
//! refinement stage, against the known ground-truth texture over the UV
//! domain.

use super::metrics::{psnr_masked, ssim_masked};
use super::simulate::SimSample;
use crate::geometry::rasterize_uv_domain;
use crate::refine::{
    inpaint_ns, refine_texture, residual_mask, RefineParams, ResidualMask,
};
use crate::render::TextureMap;
use crate::templates;
use crate::tps::tps_bake_texture;
use crate::{Error, Result};
use serde::Serialize;

/// A texture recovery method under evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Shape registration + texture optimization (the main pipeline).
    Phase1,
    /// Thin-plate-spline landmark warp baseline.
    Tps,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Phase1 => "phase1",
            Method::Tps => "tps",
        }
    }

    pub fn parse(name: &str) -> Result<Method> {
        match name {
            "phase1" => Ok(Method::Phase1),
            "tps" => Ok(Method::Tps),
            _ => Err(Error::Config { msg: format!("unknown method \"{name}\"") }),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalRow {
    pub sample: usize,
    pub template: String,
    pub method: String,
    pub stage: String,
    pub ssim: f64,
    pub psnr: f64,
    pub hole_fraction: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalSummary {
    pub method: String,
    pub stage: String,
    pub mean_ssim: f64,
    pub mean_psnr: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
    pub summary: Vec<EvalSummary>,
}

impl EvalReport {
    pub fn mean(&self, method: &str, stage: &str) -> Option<&EvalSummary> {
        self.summary.iter().find(|s| s.method == method && s.stage == stage)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("sample,template,method,stage,ssim,psnr,hole_fraction\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{:.6},{},{:.6}\n",
                r.sample,
                r.template,
                r.method,
                r.stage,
                r.ssim,
                fmt_psnr(r.psnr),
                r.hole_fraction
            ));
        }
        out.push('\n');
        out.push_str("method,stage,mean_ssim,mean_psnr,count\n");
        for s in &self.summary {
            out.push_str(&format!(
                "{},{},{:.6},{},{}\n",
                s.method,
                s.stage,
                s.mean_ssim,
                fmt_psnr(s.mean_psnr),
                s.count
            ));
        }
        out
    }

    /// JSON with non-finite PSNR encoded as the string sentinel "inf".
    pub fn to_json(&self) -> Result<String> {
        let mut value =
            serde_json::to_value(self).map_err(|e| Error::Config { msg: e.to_string() })?;
        sanitize(&mut value);
        serde_json::to_string_pretty(&value).map_err(|e| Error::Config { msg: e.to_string() })
    }
}

/// PSNR of identical images is +inf; serialize it as a sentinel.
fn fmt_psnr(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.4}")
    } else {
        "inf".into()
    }
}

fn sanitize(value: &mut serde_json::Value) {
    match value {
        serde_json::Value::Object(map) => map.values_mut().for_each(sanitize),
        serde_json::Value::Array(items) => items.iter_mut().for_each(sanitize),
        serde_json::Value::Null => *value = serde_json::Value::String("inf".into()),
        _ => {}
    }
}

struct Scored {
    ssim: f64,
    psnr: f64,
}

fn score(a: &TextureMap, b: &TextureMap, mask: &[bool]) -> Result<Scored> {
    Ok(Scored {
        ssim: ssim_masked(&a.to_image(), &b.to_image(), mask)?,
        psnr: psnr_masked(&a.to_image(), &b.to_image(), mask)?,
    })
}

/// Scores every requested method on every sample, in both the raw ("none")
/// and inpainted-and-blended ("refined") stages.
pub fn evaluate(
    samples: &[SimSample],
    methods: &[Method],
    params: &RefineParams,
) -> Result<EvalReport> {
    if samples.is_empty() {
        return Err(Error::BadDataset { path: "(in memory)".into(), msg: "no samples".into() });
    }
    if methods.is_empty() {
        return Err(Error::Config { msg: "no methods requested".into() });
    }
    params.validate()?;
    let mut rows = Vec::new();
    for s in samples {
        let template = templates::builtin(&s.meta.template)?;
        let res = s.meta.texture_resolution;
        let domain = rasterize_uv_domain(&template.mesh, res)?;
        for &method in methods {
            let (texture, mask): (TextureMap, ResidualMask) = match method {
                Method::Phase1 => {
                    let mask = residual_mask(&s.coverage, &domain, params)?;
                    (s.coarse.clone(), mask)
                }
                Method::Tps => {
                    let (tex, mask) = tps_bake_texture(&template.mesh, &s.observation, res)?;
                    (tex, mask)
                }
            };
            let hole_fraction = mask.hole_fraction(&domain);
            let raw = score(&texture, &s.gt, &domain.inside)?;
            rows.push(EvalRow {
                sample: s.meta.index,
                template: s.meta.template.clone(),
                method: method.name().into(),
                stage: "none".into(),
                ssim: raw.ssim,
                psnr: raw.psnr,
                hole_fraction,
            });

            let inpainted = inpaint_ns(&texture, &mask, &domain, params)?;
            let fine = refine_texture(&texture, &inpainted, &mask, &domain, params)?;
            let refined = score(&fine, &s.gt, &domain.inside)?;
            rows.push(EvalRow {
                sample: s.meta.index,
                template: s.meta.template.clone(),
                method: method.name().into(),
                stage: "refined".into(),
                ssim: refined.ssim,
                psnr: refined.psnr,
                hole_fraction,
            });
        }
    }

    let mut summary = Vec::new();
    for &method in methods {
        for stage in ["none", "refined"] {
            let group: Vec<&EvalRow> = rows
                .iter()
                .filter(|r| r.method == method.name() && r.stage == stage)
                .collect();
            let count = group.len();
            summary.push(EvalSummary {
                method: method.name().into(),
                stage: stage.into(),
                mean_ssim: group.iter().map(|r| r.ssim).sum::<f64>() / count as f64,
                mean_psnr: group.iter().map(|r| r.psnr).sum::<f64>() / count as f64,
                count,
            });
        }
    }
    Ok(EvalReport { rows, summary })
}
