//! Fitting configuration, loadable from TOML profiles.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// All knobs for the two-stage fit. The schedule weights with a
/// `_start`/`_end` pair decay along a half cosine over their stage.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct FitConfig {
    pub image_size: usize,
    pub texture_resolution: usize,
    pub world_extent: f64,
    pub sigma: f64,
    /// Silhouette softness decays exponentially from `sigma` to this value
    /// over the shape stage; a tight final band stops the optimizer from
    /// stuffing soft halos into the target instead of aligning boundaries.
    pub sigma_end: f64,
    pub downsample_factor: usize,
    pub node_neighbors: usize,
    pub skin_nodes: usize,
    pub steps_shape: usize,
    pub steps_texture: usize,
    pub lr_shape: f64,
    pub lr_texture: f64,
    pub w_sil: f64,
    pub w_lmk: f64,
    pub w_arap_start: f64,
    pub w_arap_end: f64,
    pub w_norm_start: f64,
    pub w_norm_end: f64,
    pub w_img: f64,
    pub w_tv: f64,
    /// Optional total variation applied directly to texels over the UV
    /// domain. Off by default; unlike the rendered-image term it reaches
    /// texels no pixel observes, diffusing them toward their neighbors.
    pub w_tv_uv: f64,
    pub scale_min: f64,
    pub scale_max: f64,
    pub scale_step: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            image_size: 512,
            texture_resolution: 512,
            world_extent: 1.5,
            sigma: 1e-4,
            sigma_end: 1e-6,
            downsample_factor: 20,
            node_neighbors: 6,
            skin_nodes: 4,
            steps_shape: 1000,
            steps_texture: 1000,
            lr_shape: 5e-3,
            lr_texture: 5e-2,
            w_sil: 50.0,
            w_lmk: 0.01,
            w_arap_start: 50.0,
            w_arap_end: 5.0,
            w_norm_start: 10.0,
            w_norm_end: 1.0,
            w_img: 100.0,
            w_tv: 1.0,
            w_tv_uv: 0.0,
            scale_min: 0.5,
            scale_max: 2.0,
            scale_step: 0.02,
        }
    }
}

impl FitConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: FitConfig = toml::from_str(text).map_err(|e| Error::Config { msg: e.to_string() })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Applies one `key=value` override on top of the current values.
    pub fn apply_override(&mut self, pair: &str) -> Result<()> {
        let (key, value) = pair.split_once('=').ok_or_else(|| Error::Config {
            msg: format!("override '{pair}' is not of the form key=value"),
        })?;
        let mut table: toml::Table =
            toml::from_str(&self.to_toml_string()).expect("config round-trips");
        if !table.contains_key(key) {
            return Err(Error::Config { msg: format!("unknown config key '{key}'") });
        }
        let parsed: toml::Value = toml::from_str::<toml::Table>(&format!("v = {value}"))
            .or_else(|_| toml::from_str::<toml::Table>(&format!("v = \"{value}\"")))
            .map_err(|e| Error::Config { msg: format!("bad value for '{key}': {e}") })?
            .remove("v")
            .expect("just inserted");
        table.insert(key.to_string(), parsed);
        let updated: FitConfig = table
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config { msg: e.to_string() })?;
        updated.validate()?;
        *self = updated;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("image_size", self.image_size as f64),
            ("texture_resolution", self.texture_resolution as f64),
            ("world_extent", self.world_extent),
            ("sigma", self.sigma),
            ("sigma_end", self.sigma_end),
            ("downsample_factor", self.downsample_factor as f64),
            ("skin_nodes", self.skin_nodes as f64),
            ("lr_shape", self.lr_shape),
            ("lr_texture", self.lr_texture),
            ("scale_min", self.scale_min),
            ("scale_step", self.scale_step),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(Error::Config { msg: format!("{name} must be positive, got {v}") });
            }
        }
        if self.scale_max < self.scale_min {
            return Err(Error::Config {
                msg: format!(
                    "scale_max {} must be at least scale_min {}",
                    self.scale_max, self.scale_min
                ),
            });
        }
        for (name, v) in [
            ("w_sil", self.w_sil),
            ("w_lmk", self.w_lmk),
            ("w_arap_start", self.w_arap_start),
            ("w_arap_end", self.w_arap_end),
            ("w_norm_start", self.w_norm_start),
            ("w_norm_end", self.w_norm_end),
            ("w_img", self.w_img),
            ("w_tv", self.w_tv),
            ("w_tv_uv", self.w_tv_uv),
        ] {
            if v < 0.0 {
                return Err(Error::Config { msg: format!("{name} must not be negative, got {v}") });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = FitConfig::default();
        let text = cfg.to_toml_string();
        let back = FitConfig::from_toml_str(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn partial_profile_keeps_other_defaults() {
        let cfg = FitConfig::from_toml_str("image_size = 128\nw_sil = 25.0\n").unwrap();
        assert_eq!(cfg.image_size, 128);
        assert_eq!(cfg.w_sil, 25.0);
        assert_eq!(cfg.texture_resolution, FitConfig::default().texture_resolution);
    }

    #[test]
    fn unknown_key_is_rejected() {
        assert!(matches!(
            FitConfig::from_toml_str("w_silhouette = 3.0\n"),
            Err(Error::Config { .. })
        ));
    }

    #[test]
    fn overrides_apply_and_validate() {
        let mut cfg = FitConfig::default();
        cfg.apply_override("steps_shape=12").unwrap();
        assert_eq!(cfg.steps_shape, 12);
        cfg.apply_override("lr_shape=0.01").unwrap();
        assert_eq!(cfg.lr_shape, 0.01);
        assert!(cfg.apply_override("nonsense=1").is_err());
        assert!(cfg.apply_override("lr_shape=-2").is_err());
        assert!(cfg.apply_override("lr_shape").is_err());
    }
}
