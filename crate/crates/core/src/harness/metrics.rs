//! Image quality metrics used by the evaluation harness: SSIM with the
//! standard 11x11 Gaussian window, PSNR, and masked variants that score
//! only a chosen texel subset (e.g. the UV domain).

use crate::render::Image;
use crate::{Error, Result};

pub use crate::fit::hard_iou;

const WINDOW: usize = 11;
const SIGMA: f64 = 1.5;
const K1: f64 = 0.01;
const K2: f64 = 0.03;
const L: f64 = 1.0;

fn check_same_shape(a: &Image, b: &Image) -> Result<()> {
    if a.width != b.width || a.height != b.height || a.channels != b.channels {
        return Err(Error::SizeMismatch {
            what: "metric inputs",
            expected: format!("{}x{}x{}", a.width, a.height, a.channels),
            got: format!("{}x{}x{}", b.width, b.height, b.channels),
        });
    }
    Ok(())
}

fn gaussian_kernel() -> [f64; WINDOW] {
    let half = (WINDOW / 2) as i64;
    let mut k = [0.0; WINDOW];
    let mut sum = 0.0;
    for (i, v) in k.iter_mut().enumerate() {
        let d = i as i64 - half;
        *v = (-(d * d) as f64 / (2.0 * SIGMA * SIGMA)).exp();
        sum += *v;
    }
    for v in &mut k {
        *v /= sum;
    }
    k
}

fn ssim_term(ma: f64, mb: f64, maa: f64, mbb: f64, mab: f64) -> f64 {
    let c1 = (K1 * L) * (K1 * L);
    let c2 = (K2 * L) * (K2 * L);
    let va = maa - ma * ma;
    let vb = mbb - mb * mb;
    let cov = mab - ma * mb;
    ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2))
}

/// Separable Gaussian filter over one channel plane; only positions where
/// the full window fits are produced (valid region, no padding).
fn filter_valid(plane: &[f64], w: usize, h: usize, k: &[f64; WINDOW]) -> Vec<f64> {
    let half = WINDOW / 2;
    let vw = w - 2 * half;
    let vh = h - 2 * half;
    // Horizontal pass over all rows, valid columns.
    let mut tmp = vec![0.0; vw * h];
    for y in 0..h {
        for x in 0..vw {
            let mut acc = 0.0;
            for (i, &kv) in k.iter().enumerate() {
                acc += kv * plane[y * w + x + i];
            }
            tmp[y * vw + x] = acc;
        }
    }
    // Vertical pass over valid rows.
    let mut out = vec![0.0; vw * vh];
    for y in 0..vh {
        for x in 0..vw {
            let mut acc = 0.0;
            for (i, &kv) in k.iter().enumerate() {
                acc += kv * tmp[(y + i) * vw + x];
            }
            out[y * vw + x] = acc;
        }
    }
    out
}

/// Mean structural similarity over all full 11x11 windows and channels.
/// Inputs are expected in [0, 1].
pub fn ssim(a: &Image, b: &Image) -> Result<f64> {
    check_same_shape(a, b)?;
    if a.width < WINDOW || a.height < WINDOW {
        return Err(Error::SizeMismatch {
            what: "ssim image",
            expected: format!("at least {WINDOW}x{WINDOW}"),
            got: format!("{}x{}", a.width, a.height),
        });
    }
    let (w, h, nch) = (a.width, a.height, a.channels);
    let k = gaussian_kernel();
    let mut total = 0.0;
    let mut count = 0usize;
    for ch in 0..nch {
        let pa: Vec<f64> = (0..w * h).map(|i| a.data[i * nch + ch]).collect();
        let pb: Vec<f64> = (0..w * h).map(|i| b.data[i * nch + ch]).collect();
        let paa: Vec<f64> = pa.iter().map(|v| v * v).collect();
        let pbb: Vec<f64> = pb.iter().map(|v| v * v).collect();
        let pab: Vec<f64> = pa.iter().zip(&pb).map(|(x, y)| x * y).collect();
        let ma = filter_valid(&pa, w, h, &k);
        let mb = filter_valid(&pb, w, h, &k);
        let maa = filter_valid(&paa, w, h, &k);
        let mbb = filter_valid(&pbb, w, h, &k);
        let mab = filter_valid(&pab, w, h, &k);
        for i in 0..ma.len() {
            total += ssim_term(ma[i], mb[i], maa[i], mbb[i], mab[i]);
            count += 1;
        }
    }
    Ok(total / count as f64)
}

/// SSIM restricted to a pixel subset: windows are centered on masked pixels
/// in the valid region, and the Gaussian weights are renormalized over the
/// masked pixels inside each window, so unmasked pixels contribute nothing.
pub fn ssim_masked(a: &Image, b: &Image, mask: &[bool]) -> Result<f64> {
    check_same_shape(a, b)?;
    let (w, h, nch) = (a.width, a.height, a.channels);
    if mask.len() != w * h {
        return Err(Error::LengthMismatch {
            what: "ssim mask",
            expected: w * h,
            got: mask.len(),
        });
    }
    if w < WINDOW || h < WINDOW {
        return Err(Error::SizeMismatch {
            what: "ssim image",
            expected: format!("at least {WINDOW}x{WINDOW}"),
            got: format!("{w}x{h}"),
        });
    }
    let half = WINDOW / 2;
    let k = gaussian_kernel();
    let mut total = 0.0;
    let mut count = 0usize;
    for y in half..h - half {
        for x in half..w - half {
            if !mask[y * w + x] {
                continue;
            }
            for ch in 0..nch {
                let (mut wsum, mut ma, mut mb, mut maa, mut mbb, mut mab) =
                    (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
                for dy in 0..WINDOW {
                    for dx in 0..WINDOW {
                        let (sy, sx) = (y + dy - half, x + dx - half);
                        if !mask[sy * w + sx] {
                            continue;
                        }
                        let wgt = k[dy] * k[dx];
                        let va = a.data[(sy * w + sx) * nch + ch];
                        let vb = b.data[(sy * w + sx) * nch + ch];
                        wsum += wgt;
                        ma += wgt * va;
                        mb += wgt * vb;
                        maa += wgt * va * va;
                        mbb += wgt * vb * vb;
                        mab += wgt * va * vb;
                    }
                }
                total += ssim_term(ma / wsum, mb / wsum, maa / wsum, mbb / wsum, mab / wsum);
                count += 1;
            }
        }
    }
    if count == 0 {
        return Err(Error::EmptyDomain);
    }
    Ok(total / count as f64)
}

/// Peak signal-to-noise ratio in dB for images in [0, 1]; identical inputs
/// give +inf.
pub fn psnr(a: &Image, b: &Image) -> Result<f64> {
    check_same_shape(a, b)?;
    let mse = a
        .data
        .iter()
        .zip(&b.data)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / a.data.len() as f64;
    Ok(if mse == 0.0 { f64::INFINITY } else { 10.0 * (1.0 / mse).log10() })
}

/// PSNR over masked pixels only.
pub fn psnr_masked(a: &Image, b: &Image, mask: &[bool]) -> Result<f64> {
    check_same_shape(a, b)?;
    let (w, h, nch) = (a.width, a.height, a.channels);
    if mask.len() != w * h {
        return Err(Error::LengthMismatch {
            what: "psnr mask",
            expected: w * h,
            got: mask.len(),
        });
    }
    let mut sum = 0.0;
    let mut n = 0usize;
    for i in 0..w * h {
        if !mask[i] {
            continue;
        }
        for ch in 0..nch {
            let d = a.data[i * nch + ch] - b.data[i * nch + ch];
            sum += d * d;
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::EmptyDomain);
    }
    let mse = sum / n as f64;
    Ok(if mse == 0.0 { f64::INFINITY } else { 10.0 * (1.0 / mse).log10() })
}
