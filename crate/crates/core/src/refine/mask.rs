//! Hole detection on the coarse texture: in-domain texels whose coverage
//! weight is (near) zero were never observed by any catalog pixel and must
//! be inpainted.

use super::RefineParams;
use crate::geometry::DomainMask;
use crate::render::{CoverageMap, Image};
use crate::{Error, Result};

/// Texel set requiring inpainting, plus a feathered blend band around it.
#[derive(Debug, Clone)]
pub struct ResidualMask {
    pub resolution: usize,
    /// Row-major; true on hole texels (detected core plus dilation ring).
    pub hole: Vec<bool>,
    /// Blend weight toward the inpainted texture: 1 on the detected core,
    /// falling linearly across the dilation ring, 0 outside the hole set.
    pub feather: Vec<f64>,
}

impl ResidualMask {
    /// Builds a mask from a raw hole grid: dilates it by `dilation_radius`
    /// texels (8-neighborhood, never leaving the domain) and feathers the
    /// blend weight linearly across the added ring.
    pub fn from_hole_grid(
        core: Vec<bool>,
        domain: &DomainMask,
        dilation_radius: usize,
    ) -> Result<ResidualMask> {
        let res = domain.resolution;
        if core.len() != res * res {
            return Err(Error::SizeMismatch {
                what: "hole grid",
                expected: format!("{} texels", res * res),
                got: format!("{}", core.len()),
            });
        }
        if core.iter().zip(&domain.inside).any(|(&h, &d)| h && !d) {
            return Err(Error::HoleOutsideDomain);
        }
        // Chessboard distance from the core, swept one dilation round at a
        // time so the ring never crosses out-of-domain texels.
        let mut dist: Vec<Option<usize>> =
            core.iter().map(|&h| if h { Some(0) } else { None }).collect();
        let mut frontier: Vec<usize> =
            (0..res * res).filter(|&i| dist[i] == Some(0)).collect();
        for round in 1..=dilation_radius {
            let mut next = Vec::new();
            for &i in &frontier {
                let (r, c) = (i / res, i % res);
                for dr in -1i64..=1 {
                    for dc in -1i64..=1 {
                        let (nr, nc) = (r as i64 + dr, c as i64 + dc);
                        if nr < 0 || nc < 0 || nr >= res as i64 || nc >= res as i64 {
                            continue;
                        }
                        let j = nr as usize * res + nc as usize;
                        if dist[j].is_none() && domain.inside[j] {
                            dist[j] = Some(round);
                            next.push(j);
                        }
                    }
                }
            }
            frontier = next;
        }
        let hole: Vec<bool> = dist.iter().map(|d| d.is_some()).collect();
        let feather: Vec<f64> = dist
            .iter()
            .map(|d| match d {
                Some(k) => 1.0 - *k as f64 / (dilation_radius + 1) as f64,
                None => 0.0,
            })
            .collect();
        Ok(ResidualMask { resolution: res, hole, feather })
    }

    pub fn hole_count(&self) -> usize {
        self.hole.iter().filter(|&&h| h).count()
    }

    /// Hole texels as a fraction of the domain texels.
    pub fn hole_fraction(&self, domain: &DomainMask) -> f64 {
        let inside = domain.inside_count();
        if inside == 0 {
            0.0
        } else {
            self.hole_count() as f64 / inside as f64
        }
    }

    /// Stores only the hole grid; the feather band is not representable in
    /// an 8-bit mask and is rebuilt (radius 0) when loading.
    pub fn to_image(&self) -> Image {
        Image::from_data_clamped(
            self.resolution,
            self.resolution,
            1,
            self.hole.iter().map(|&h| if h { 1.0 } else { 0.0 }).collect(),
        )
    }

    pub fn from_image(img: &Image, domain: &DomainMask) -> Result<ResidualMask> {
        if img.channels != 1 || img.width != img.height {
            return Err(Error::SizeMismatch {
                what: "mask image",
                expected: "square single-channel".into(),
                got: format!("{}x{}x{}", img.width, img.height, img.channels),
            });
        }
        ResidualMask::from_hole_grid(img.binarize(), domain, 0)
    }
}

/// Detects hole texels as in-domain texels whose coverage weight falls
/// below `coverage_threshold` times the mean nonzero weight (or is exactly
/// zero), then dilates and feathers them.
pub fn residual_mask(
    coverage: &CoverageMap,
    domain: &DomainMask,
    params: &RefineParams,
) -> Result<ResidualMask> {
    params.validate()?;
    if coverage.resolution != domain.resolution {
        return Err(Error::SizeMismatch {
            what: "coverage map",
            expected: format!("{0}x{0}", domain.resolution),
            got: format!("{0}x{0}", coverage.resolution),
        });
    }
    let tau = params.coverage_threshold * coverage.mean_nonzero();
    let core: Vec<bool> = coverage
        .weight
        .iter()
        .zip(&domain.inside)
        .map(|(&w, &inside)| inside && (w <= 0.0 || w < tau))
        .collect();
    ResidualMask::from_hole_grid(core, domain, params.dilation_radius)
}
