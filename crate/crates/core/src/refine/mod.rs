//! Classical texture refinement: detect unobserved texel holes, fill them
//! with a UV-constrained fluid-style inpainting pass, and blend the fill
//! back into the coarse texture under a bilateral filter.

mod bilateral;
mod inpaint;
mod mask;

pub use bilateral::bilateral;
pub use inpaint::inpaint_ns;
pub use mask::{residual_mask, ResidualMask};

use crate::geometry::DomainMask;
use crate::render::{CoverageMap, TextureMap};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Parameters of the refinement stage.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RefineParams {
    /// Hole threshold as a fraction of the mean nonzero coverage weight.
    pub coverage_threshold: f64,
    /// Morphological dilation radius (texels) applied to detected holes.
    pub dilation_radius: usize,
    /// Inpainting iteration count.
    pub ns_iterations: usize,
    /// Inpainting step size.
    pub ns_step: f64,
    /// Mix between isotropic diffusion (0) and isophote transport (1).
    pub ns_isophote_weight: f64,
    /// Bilateral window size (odd).
    pub bilateral_window: usize,
    /// Bilateral spatial standard deviation, in texels.
    pub bilateral_sigma_spatial: f64,
    /// Bilateral range standard deviation, in normalized color units.
    pub bilateral_sigma_range: f64,
}

impl Default for RefineParams {
    fn default() -> Self {
        RefineParams {
            coverage_threshold: 0.01,
            dilation_radius: 2,
            ns_iterations: 300,
            ns_step: 0.1,
            ns_isophote_weight: 0.5,
            bilateral_window: 7,
            bilateral_sigma_spatial: 3.0,
            bilateral_sigma_range: 0.1,
        }
    }
}

impl RefineParams {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let params: RefineParams =
            toml::from_str(text).map_err(|e| Error::Config { msg: e.to_string() })?;
        params.validate()?;
        Ok(params)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("params serialize")
    }

    /// Applies one `key=value` override on top of the current values.
    pub fn apply_override(&mut self, pair: &str) -> Result<()> {
        let (key, value) = pair.split_once('=').ok_or_else(|| Error::Config {
            msg: format!("override '{pair}' is not of the form key=value"),
        })?;
        let mut table: toml::Table =
            toml::from_str(&self.to_toml_string()).expect("params round-trip");
        if !table.contains_key(key) {
            return Err(Error::Config { msg: format!("unknown refine key '{key}'") });
        }
        let parsed: toml::Value = toml::from_str::<toml::Table>(&format!("v = {value}"))
            .map_err(|e| Error::Config { msg: format!("bad value for '{key}': {e}") })?
            .remove("v")
            .expect("just inserted");
        table.insert(key.to_string(), parsed);
        let updated: RefineParams = table
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config { msg: e.to_string() })?;
        updated.validate()?;
        *self = updated;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let pos = [
            ("coverage_threshold", self.coverage_threshold),
            ("ns_step", self.ns_step),
            ("bilateral_sigma_spatial", self.bilateral_sigma_spatial),
            ("bilateral_sigma_range", self.bilateral_sigma_range),
        ];
        for (name, v) in pos {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config { msg: format!("{name} must be positive, got {v}") });
            }
        }
        if self.ns_iterations == 0 {
            return Err(Error::Config { msg: "ns_iterations must be positive".into() });
        }
        if !(0.0..=1.0).contains(&self.ns_isophote_weight) {
            return Err(Error::Config {
                msg: format!("ns_isophote_weight must be in [0,1], got {}", self.ns_isophote_weight),
            });
        }
        if self.bilateral_window == 0 || self.bilateral_window % 2 == 0 {
            return Err(Error::Config {
                msg: format!("bilateral_window must be odd, got {}", self.bilateral_window),
            });
        }
        Ok(())
    }
}

/// Blends the inpainted texture into the coarse one over the feathered hole
/// band, smooths the composite with a bilateral filter, and restricts the
/// result to the UV domain.
pub fn refine_texture(
    coarse: &TextureMap,
    inpainted: &TextureMap,
    mask: &ResidualMask,
    domain: &DomainMask,
    params: &RefineParams,
) -> Result<TextureMap> {
    params.validate()?;
    if coarse.resolution != inpainted.resolution
        || coarse.resolution != mask.resolution
        || coarse.resolution != domain.resolution
    {
        return Err(Error::SizeMismatch {
            what: "refine inputs",
            expected: format!("{0}x{0}", coarse.resolution),
            got: format!(
                "inpainted {}, mask {}, domain {}",
                inpainted.resolution, mask.resolution, domain.resolution
            ),
        });
    }
    let res = coarse.resolution;
    let mut composite = TextureMap::filled(res, 0.0);
    for i in 0..res * res {
        let f = mask.feather[i];
        for ch in 0..3 {
            composite.data[3 * i + ch] =
                (1.0 - f) * coarse.data[3 * i + ch] + f * inpainted.data[3 * i + ch];
        }
    }
    let filtered = bilateral(&composite.to_image(), params);
    let mut fine = TextureMap::from_image(&filtered)?;
    fine.mask_to_domain(domain);
    fine.clamp_in_place();
    Ok(fine)
}

/// Full refinement pipeline from a coarse texture and its coverage map:
/// hole detection, inpainting, and feathered bilateral blending.
pub fn refine_from_coverage(
    coarse: &TextureMap,
    coverage: &CoverageMap,
    domain: &DomainMask,
    params: &RefineParams,
) -> Result<(TextureMap, ResidualMask)> {
    let mask = residual_mask(coverage, domain, params)?;
    let inpainted = inpaint_ns(coarse, &mask, domain, params)?;
    let fine = refine_texture(coarse, &inpainted, &mask, domain, params)?;
    Ok((fine, mask))
}
