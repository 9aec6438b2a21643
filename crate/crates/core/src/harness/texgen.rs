//! Procedural ground-truth texture generation for the synthetic corpus.
//! Every recipe is deterministic in its seed and guarantees a usable
//! dynamic range so downstream similarity scores are meaningful.

use crate::geometry::DomainMask;
use crate::render::TextureMap;
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A concrete texture recipe (all parameters resolved).
#[derive(Debug, Clone, PartialEq)]
pub enum Recipe {
    Stripes { period: usize },
    Checker { cells: usize },
    Gradient,
    Blobs { count: usize },
    Mixed,
}

impl Recipe {
    /// Resolves a recipe name, drawing free parameters from `rng`.
    pub fn named(name: &str, rng: &mut impl Rng) -> Result<Recipe> {
        Ok(match name {
            "stripes" => Recipe::Stripes { period: rng.gen_range(4..=16) },
            "checker" => Recipe::Checker { cells: rng.gen_range(4..=12) },
            "gradient" => Recipe::Gradient,
            "blobs" => Recipe::Blobs { count: rng.gen_range(8..=24) },
            "mixed" => Recipe::Mixed,
            _ => return Err(Error::UnknownRecipe { name: name.into() }),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Recipe::Stripes { .. } => "stripes",
            Recipe::Checker { .. } => "checker",
            Recipe::Gradient => "gradient",
            Recipe::Blobs { .. } => "blobs",
            Recipe::Mixed => "mixed",
        }
    }

    pub fn known_names() -> [&'static str; 5] {
        ["stripes", "checker", "gradient", "blobs", "mixed"]
    }
}

/// Two well-separated palette colors: every channel pair differs by at
/// least 0.4, guaranteeing the required dynamic range.
fn palette(rng: &mut impl Rng) -> ([f64; 3], [f64; 3]) {
    let dark = [rng.gen_range(0.0..0.3), rng.gen_range(0.0..0.3), rng.gen_range(0.0..0.3)];
    let bright = [rng.gen_range(0.7..1.0), rng.gen_range(0.7..1.0), rng.gen_range(0.7..1.0)];
    (dark, bright)
}

fn lerp3(a: [f64; 3], b: [f64; 3], t: f64) -> [f64; 3] {
    [a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t, a[2] + (b[2] - a[2]) * t]
}

/// Generates a texture map; if `domain` is given, texels outside the UV
/// charts are zeroed.
pub fn gen_texture(
    recipe: &Recipe,
    resolution: usize,
    seed: u64,
    domain: Option<&DomainMask>,
) -> TextureMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tex = TextureMap::filled(resolution, 0.0);
    paint(recipe, &mut tex, &mut rng);
    tex.clamp_in_place();
    if let Some(d) = domain {
        tex.mask_to_domain(d);
    }
    tex
}

fn paint(recipe: &Recipe, tex: &mut TextureMap, rng: &mut ChaCha8Rng) {
    let res = tex.resolution;
    match recipe {
        Recipe::Stripes { period } => {
            let (c0, c1) = palette(rng);
            let theta = rng.gen_range(0.0..std::f64::consts::PI);
            let (dx, dy) = (theta.cos(), theta.sin());
            for r in 0..res {
                for c in 0..res {
                    let s = (c as f64 * dx + r as f64 * dy) / *period as f64;
                    let band = s.floor().rem_euclid(2.0) as usize;
                    tex.set_texel(r, c, if band == 0 { c0 } else { c1 });
                }
            }
        }
        Recipe::Checker { cells } => {
            let (c0, c1) = palette(rng);
            let block = (res / cells).max(1);
            for r in 0..res {
                for c in 0..res {
                    let parity = (r / block + c / block) % 2;
                    tex.set_texel(r, c, if parity == 0 { c0 } else { c1 });
                }
            }
        }
        Recipe::Gradient => {
            let (c0, c1) = palette(rng);
            let theta = rng.gen_range(0.0..std::f64::consts::TAU);
            let (dx, dy) = (theta.cos(), theta.sin());
            let half = res as f64 / 2.0;
            // Projection range of the grid onto the axis is res*(|dx|+|dy|).
            let span = res as f64 * (dx.abs() + dy.abs());
            for r in 0..res {
                for c in 0..res {
                    let p = (c as f64 - half) * dx + (r as f64 - half) * dy;
                    let t = (p / span + 0.5).clamp(0.0, 1.0);
                    tex.set_texel(r, c, lerp3(c0, c1, t));
                }
            }
        }
        Recipe::Blobs { count } => {
            let (c0, c1) = palette(rng);
            for r in 0..res {
                for c in 0..res {
                    tex.set_texel(r, c, c0);
                }
            }
            for _ in 0..*count {
                let cy = rng.gen_range(0.0..res as f64);
                let cx = rng.gen_range(0.0..res as f64);
                let radius = rng.gen_range(res as f64 / 20.0..res as f64 / 6.0);
                let color = lerp3(c1, [rng.gen(), rng.gen(), rng.gen()], 0.3);
                for r in 0..res {
                    for c in 0..res {
                        let d2 = (r as f64 - cy).powi(2) + (c as f64 - cx).powi(2);
                        let w = (-d2 / (2.0 * radius * radius)).exp();
                        let cur = tex.texel(r, c);
                        tex.set_texel(r, c, lerp3(cur, color, w));
                    }
                }
            }
        }
        Recipe::Mixed => {
            paint(&Recipe::Gradient, tex, rng);
            // Stripe band across a random horizontal slab.
            let (s0, s1) = palette(rng);
            let period = rng.gen_range(5..=12);
            let y0 = rng.gen_range(0..res / 2);
            let y1 = y0 + res / 3;
            for r in y0..y1.min(res) {
                for c in 0..res {
                    let band = (c / period) % 2;
                    let col = if band == 0 { s0 } else { s1 };
                    let cur = tex.texel(r, c);
                    tex.set_texel(r, c, lerp3(cur, col, 0.85));
                }
            }
            let blobs = Recipe::Blobs { count: 6 };
            let mut overlay = TextureMap::filled(res, 0.0);
            paint(&blobs, &mut overlay, rng);
            for r in 0..res {
                for c in 0..res {
                    let cur = tex.texel(r, c);
                    let ov = overlay.texel(r, c);
                    tex.set_texel(r, c, lerp3(cur, ov, 0.35));
                }
            }
        }
    }
}
