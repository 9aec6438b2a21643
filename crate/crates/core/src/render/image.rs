//! Dense f64 images and square RGB texture maps, with 8-bit (and 16-bit
//! grayscale) PNG round trips. Pixel values are linear; no gamma is applied
//! in either direction.

use std::path::Path;

use crate::geometry::DomainMask;
use crate::{Error, Result};

/// Row-major H x W x C image, C in {1, 3}.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl Image {
    /// Zero-filled image.
    pub fn zeros(width: usize, height: usize, channels: usize) -> Self {
        assert!(channels == 1 || channels == 3, "channels must be 1 or 3");
        Image { width, height, channels, data: vec![0.0; width * height * channels] }
    }

    /// Builds an image from data, clamping everything into [0,1].
    pub fn from_data_clamped(width: usize, height: usize, channels: usize, mut data: Vec<f64>) -> Self {
        assert_eq!(data.len(), width * height * channels);
        for v in &mut data {
            *v = v.clamp(0.0, 1.0);
        }
        Image { width, height, channels, data }
    }

    /// Internal constructor that keeps raw values; renderers rely on this to
    /// stay linear in the texture.
    pub(crate) fn from_raw(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), width * height * channels);
        Image { width, height, channels, data }
    }

    #[inline]
    pub fn idx(&self, y: usize, x: usize, c: usize) -> usize {
        (y * self.width + x) * self.channels + c
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize, c: usize) -> f64 {
        self.data[self.idx(y, x, c)]
    }

    #[inline]
    pub fn set(&mut self, y: usize, x: usize, c: usize, v: f64) {
        let i = self.idx(y, x, c);
        self.data[i] = v;
    }

    pub fn clamp_in_place(&mut self) {
        for v in &mut self.data {
            *v = v.clamp(0.0, 1.0);
        }
    }

    /// Bilinear sample at continuous pixel coordinates (pixel (r, c) has
    /// its center at (c + 0.5, r + 0.5)); samples clamp to the border.
    pub fn sample_bilinear(&self, x: f64, y: f64, ch: usize) -> f64 {
        let gx = (x - 0.5).clamp(0.0, (self.width - 1) as f64);
        let gy = (y - 0.5).clamp(0.0, (self.height - 1) as f64);
        let x0 = gx.floor() as usize;
        let y0 = gy.floor() as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let fx = gx - x0 as f64;
        let fy = gy - y0 as f64;
        let v00 = self.get(y0, x0, ch);
        let v01 = self.get(y0, x1, ch);
        let v10 = self.get(y1, x0, ch);
        let v11 = self.get(y1, x1, ch);
        (v00 * (1.0 - fx) + v01 * fx) * (1.0 - fy) + (v10 * (1.0 - fx) + v11 * fx) * fy
    }

    /// Binarizes at the conventional 0.5 threshold (>= 128 in 8-bit terms).
    pub fn binarize(&self) -> Vec<bool> {
        assert_eq!(self.channels, 1);
        self.data.iter().map(|&v| v >= 0.5).collect()
    }

    pub fn load_png(path: impl AsRef<Path>) -> Result<Image> {
        let path = path.as_ref();
        let img = image::open(path).map_err(|e| Error::BadImage {
            path: path.display().to_string(),
            msg: e.to_string(),
        })?;
        Ok(match img {
            image::DynamicImage::ImageLuma8(g) => {
                let (w, h) = (g.width() as usize, g.height() as usize);
                let data = g.into_raw().iter().map(|&b| b as f64 / 255.0).collect();
                Image { width: w, height: h, channels: 1, data }
            }
            image::DynamicImage::ImageLuma16(g) => {
                let (w, h) = (g.width() as usize, g.height() as usize);
                let data = g.into_raw().iter().map(|&b| b as f64 / 65535.0).collect();
                Image { width: w, height: h, channels: 1, data }
            }
            other => {
                let rgb = other.into_rgb8();
                let (w, h) = (rgb.width() as usize, rgb.height() as usize);
                let data = rgb.into_raw().iter().map(|&b| b as f64 / 255.0).collect();
                Image { width: w, height: h, channels: 3, data }
            }
        })
    }

    /// Writes 8-bit PNG (grayscale for 1 channel, RGB for 3), clamping and
    /// rounding each value.
    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let quant =
            |v: f64| -> u8 { (v.clamp(0.0, 1.0) * 255.0).round() as u8 };
        let bytes: Vec<u8> = self.data.iter().map(|&v| quant(v)).collect();
        let res = match self.channels {
            1 => image::save_buffer(
                path,
                &bytes,
                self.width as u32,
                self.height as u32,
                image::ColorType::L8,
            ),
            3 => image::save_buffer(
                path,
                &bytes,
                self.width as u32,
                self.height as u32,
                image::ColorType::Rgb8,
            ),
            _ => unreachable!(),
        };
        res.map_err(|e| Error::BadImage { path: path.display().to_string(), msg: e.to_string() })
    }

    /// 16-bit grayscale PNG, for data with more dynamic range than colors
    /// (coverage weights). Values are clamped to [0,1].
    pub fn save_png_gray16(&self, path: impl AsRef<Path>) -> Result<()> {
        assert_eq!(self.channels, 1);
        let path = path.as_ref();
        let buf: Vec<u16> =
            self.data.iter().map(|&v| (v.clamp(0.0, 1.0) * 65535.0).round() as u16).collect();
        let img = image::ImageBuffer::<image::Luma<u16>, _>::from_raw(
            self.width as u32,
            self.height as u32,
            buf,
        )
        .unwrap();
        img.save(path)
            .map_err(|e| Error::BadImage { path: path.display().to_string(), msg: e.to_string() })
    }
}

/// Square RGB texture over the UV atlas. Stored like an image: row 0 is
/// v = 1 (see `geometry::domain` for the texel/UV convention).
#[derive(Debug, Clone, PartialEq)]
pub struct TextureMap {
    pub resolution: usize,
    /// Row-major RGB data, length resolution*resolution*3.
    pub data: Vec<f64>,
}

impl TextureMap {
    pub fn filled(resolution: usize, value: f64) -> Self {
        TextureMap { resolution, data: vec![value; resolution * resolution * 3] }
    }

    pub fn from_data(resolution: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), resolution * resolution * 3);
        TextureMap { resolution, data }
    }

    #[inline]
    pub fn idx(&self, r: usize, c: usize, ch: usize) -> usize {
        (r * self.resolution + c) * 3 + ch
    }

    #[inline]
    pub fn texel(&self, r: usize, c: usize) -> [f64; 3] {
        let i = (r * self.resolution + c) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set_texel(&mut self, r: usize, c: usize, rgb: [f64; 3]) {
        let i = (r * self.resolution + c) * 3;
        self.data[i] = rgb[0];
        self.data[i + 1] = rgb[1];
        self.data[i + 2] = rgb[2];
    }

    /// Bilinear sample at a UV point; texels outside the grid clamp to the
    /// border.
    pub fn sample_bilinear(&self, u: f64, v: f64) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (idx, w) in self.bilinear_taps(u, v) {
            for ch in 0..3 {
                out[ch] += w * self.data[idx * 3 + ch];
            }
        }
        out
    }

    /// The four (texel, weight) taps of a bilinear sample, border-clamped.
    pub fn bilinear_taps(&self, u: f64, v: f64) -> [(usize, f64); 4] {
        bilinear_taps(u, v, self.resolution)
    }

    pub fn clamp_in_place(&mut self) {
        for v in &mut self.data {
            *v = v.clamp(0.0, 1.0);
        }
    }

    /// Zeroes every texel outside the domain.
    pub fn mask_to_domain(&mut self, domain: &DomainMask) {
        assert_eq!(domain.resolution, self.resolution);
        for (i, &inside) in domain.inside.iter().enumerate() {
            if !inside {
                self.data[i * 3] = 0.0;
                self.data[i * 3 + 1] = 0.0;
                self.data[i * 3 + 2] = 0.0;
            }
        }
    }

    pub fn to_image(&self) -> Image {
        Image::from_raw(self.resolution, self.resolution, 3, self.data.clone())
    }

    pub fn from_image(img: &Image) -> Result<TextureMap> {
        if img.width != img.height || img.channels != 3 {
            return Err(Error::SizeMismatch {
                what: "texture map",
                expected: "square RGB image".into(),
                got: format!("{}x{}x{}", img.width, img.height, img.channels),
            });
        }
        Ok(TextureMap { resolution: img.width, data: img.data.clone() })
    }

    pub fn load_png(path: impl AsRef<Path>) -> Result<TextureMap> {
        TextureMap::from_image(&Image::load_png(path)?)
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_image().save_png(path)
    }
}

/// Bilinear taps of the UV point on a square grid of the given resolution.
pub(crate) fn bilinear_taps(u: f64, v: f64, resolution: usize) -> [(usize, f64); 4] {
    let (gx, gy) = crate::geometry::domain_grid(crate::Vec2::new(u, v), resolution);
    let x0 = gx.floor();
    let y0 = gy.floor();
    let fx = gx - x0;
    let fy = gy - y0;
    let clampi = |i: f64| -> usize { (i.max(0.0) as usize).min(resolution - 1) };
    let (x0i, x1i) = (clampi(x0), clampi(x0 + 1.0));
    let (y0i, y1i) = (clampi(y0), clampi(y0 + 1.0));
    [
        (y0i * resolution + x0i, (1.0 - fx) * (1.0 - fy)),
        (y0i * resolution + x1i, fx * (1.0 - fy)),
        (y1i * resolution + x0i, (1.0 - fx) * fy),
        (y1i * resolution + x1i, fx * fy),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn png_round_trip_is_exact_at_8_bit() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.png");
        let mut tex = TextureMap::filled(16, 0.0);
        for i in 0..tex.data.len() {
            tex.data[i] = ((i * 7) % 256) as f64 / 255.0;
        }
        tex.save_png(&path).unwrap();
        let back = TextureMap::load_png(&path).unwrap();
        assert_eq!(tex.resolution, back.resolution);
        for (a, b) in tex.data.iter().zip(&back.data) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn gray16_round_trip_preserves_16_bits() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.png");
        let mut img = Image::zeros(8, 8, 1);
        for i in 0..img.data.len() {
            img.data[i] = (i * 901) as f64 / 65535.0;
        }
        img.save_png_gray16(&path).unwrap();
        let back = Image::load_png(&path).unwrap();
        assert_eq!(back.channels, 1);
        for (a, b) in img.data.iter().zip(&back.data) {
            assert!((a - b).abs() < 1.0 / 65535.0);
        }
    }

    #[test]
    fn bilinear_at_texel_centers_is_exact() {
        let mut tex = TextureMap::filled(4, 0.0);
        tex.set_texel(1, 2, [0.25, 0.5, 0.75]);
        // Texel (1,2) center: u = 2.5/4, v = 1 - 1.5/4.
        let got = tex.sample_bilinear(2.5 / 4.0, 1.0 - 1.5 / 4.0);
        assert_eq!(got, [0.25, 0.5, 0.75]);
    }

    #[test]
    fn bilinear_midpoint_averages_neighbors() {
        let mut tex = TextureMap::filled(2, 0.0);
        tex.set_texel(0, 0, [1.0, 1.0, 1.0]);
        // Halfway between the two top texels.
        let got = tex.sample_bilinear(0.5, 0.75);
        assert!((got[0] - 0.5).abs() < 1e-12);
    }
}
