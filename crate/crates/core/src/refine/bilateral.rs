//! Edge-preserving bilateral smoothing: each pixel becomes a normalized
//! average of its window, weighted by a spatial Gaussian and a Gaussian on
//! the color difference, so strong edges survive while rough flat regions
//! are evened out.

use super::RefineParams;
use crate::render::Image;

pub fn bilateral(image: &Image, params: &RefineParams) -> Image {
    let half = (params.bilateral_window / 2) as i64;
    let inv2ss = 1.0 / (2.0 * params.bilateral_sigma_spatial * params.bilateral_sigma_spatial);
    let inv2sr = 1.0 / (2.0 * params.bilateral_sigma_range * params.bilateral_sigma_range);
    let (w, h, nch) = (image.width, image.height, image.channels);
    let mut out = Image::zeros(w, h, nch);
    let mut acc = vec![0.0; nch];
    for y in 0..h {
        for x in 0..w {
            acc.iter_mut().for_each(|a| *a = 0.0);
            let mut norm = 0.0;
            for dy in -half..=half {
                let ny = y as i64 + dy;
                if ny < 0 || ny >= h as i64 {
                    continue;
                }
                for dx in -half..=half {
                    let nx = x as i64 + dx;
                    if nx < 0 || nx >= w as i64 {
                        continue;
                    }
                    let mut d2 = 0.0;
                    for c in 0..nch {
                        let d = image.get(ny as usize, nx as usize, c) - image.get(y, x, c);
                        d2 += d * d;
                    }
                    let wgt = (-((dy * dy + dx * dx) as f64) * inv2ss - d2 * inv2sr).exp();
                    norm += wgt;
                    for c in 0..nch {
                        acc[c] += wgt * image.get(ny as usize, nx as usize, c);
                    }
                }
            }
            for c in 0..nch {
                out.set(y, x, c, acc[c] / norm);
            }
        }
    }
    out
}
