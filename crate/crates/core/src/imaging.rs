//! Rendering feature vectors as 224×224 RGB images.
//!
//! A vector is min-max normalized, laid out row-major on the smallest square
//! grid that holds it, upscaled to 224×224 by nearest neighbour, and colored
//! through a fixed blue→green→red lookup table.

use std::io::{Read, Write};

use crate::{Error, Result};

pub const IMAGE_SIZE: usize = 224;
pub const CHANNELS: usize = 3;
const RAW_MAGIC: &[u8; 4] = b"TLIM";

pub type Rgb = [u8; 3];

/// 256-entry palette interpolated linearly between anchor colors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColormapLut {
    entries: [Rgb; 256],
}

/// Anchors as (position on a 0..=510 scale, color). Doubling the index scale
/// puts the middle anchor at an integer position so interpolation stays exact.
const ANCHORS: [(i64, Rgb); 3] = [(0, [0, 0, 255]), (255, [0, 255, 0]), (510, [255, 0, 0])];

impl ColormapLut {
    pub fn new() -> Self {
        let mut entries = [[0u8; 3]; 256];
        for (k, entry) in entries.iter_mut().enumerate() {
            let pos = 2 * k as i64;
            let seg = ANCHORS
                .windows(2)
                .find(|w| pos <= w[1].0)
                .expect("anchors cover the full range");
            let ((p0, c0), (p1, c1)) = (seg[0], seg[1]);
            let den = p1 - p0;
            for ch in 0..3 {
                let num = i64::from(c0[ch]) * den + (i64::from(c1[ch]) - i64::from(c0[ch])) * (pos - p0);
                // Round half up: floor(num/den + 1/2).
                entry[ch] = (2 * num + den).div_euclid(2 * den) as u8;
            }
        }
        Self { entries }
    }

    pub fn entry(&self, index: u8) -> Rgb {
        self.entries[usize::from(index)]
    }

    pub fn entries(&self) -> &[Rgb; 256] {
        &self.entries
    }

    /// LUT index for `t`, clamped to [0, 1].
    pub fn index_of(t: f64) -> u8 {
        let t = if t.is_nan() { 0.0 } else { t.clamp(0.0, 1.0) };
        (t * 255.0 + 0.5).floor() as u8
    }

    pub fn color(&self, t: f64) -> Rgb {
        self.entry(Self::index_of(t))
    }
}

impl Default for ColormapLut {
    fn default() -> Self {
        Self::new()
    }
}

/// Colors `t` through the default palette.
pub fn colormap(t: f64) -> Rgb {
    ColormapLut::new().color(t)
}

/// A 224×224×3 raster, row-major with interleaved channels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureImage {
    pixels: Vec<u8>,
}

impl FeatureImage {
    pub fn from_pixels(pixels: Vec<u8>) -> Result<Self> {
        if pixels.len() != IMAGE_SIZE * IMAGE_SIZE * CHANNELS {
            return Err(Error::Dimension(format!(
                "image buffer holds {} bytes, expected {}",
                pixels.len(),
                IMAGE_SIZE * IMAGE_SIZE * CHANNELS
            )));
        }
        Ok(Self { pixels })
    }

    pub fn width(&self) -> usize {
        IMAGE_SIZE
    }

    pub fn height(&self) -> usize {
        IMAGE_SIZE
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixel(&self, row: usize, col: usize) -> Rgb {
        let at = (row * IMAGE_SIZE + col) * CHANNELS;
        [self.pixels[at], self.pixels[at + 1], self.pixels[at + 2]]
    }

    /// Raw dump: `TLIM`, u16 width, u16 height, u16 channels, u16 reserved
    /// (all little-endian), then the pixel bytes.
    pub fn write_raw<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(RAW_MAGIC)?;
        for v in [IMAGE_SIZE as u16, IMAGE_SIZE as u16, CHANNELS as u16, 0u16] {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&self.pixels)?;
        Ok(())
    }

    pub fn read_raw<R: Read>(mut r: R) -> Result<Self> {
        let mut header = [0u8; 12];
        r.read_exact(&mut header)
            .map_err(|_| Error::Format("truncated image header".into()))?;
        if &header[..4] != RAW_MAGIC {
            return Err(Error::Format("bad image magic".into()));
        }
        let field = |i: usize| u16::from_le_bytes([header[4 + 2 * i], header[5 + 2 * i]]) as usize;
        if (field(0), field(1), field(2)) != (IMAGE_SIZE, IMAGE_SIZE, CHANNELS) {
            return Err(Error::Format(format!(
                "unsupported image shape {}x{}x{}",
                field(0),
                field(1),
                field(2)
            )));
        }
        let mut pixels = vec![0u8; IMAGE_SIZE * IMAGE_SIZE * CHANNELS];
        r.read_exact(&mut pixels)
            .map_err(|_| Error::Format("truncated image payload".into()))?;
        Self::from_pixels(pixels)
    }
}

/// Side of the smallest square grid holding `n` cells.
pub fn grid_side(n: usize) -> usize {
    let mut g = (n as f64).sqrt() as usize;
    while g * g < n {
        g += 1;
    }
    while g > 1 && (g - 1) * (g - 1) >= n {
        g -= 1;
    }
    g
}

/// Palette index for every grid cell of `v`, row-major, padded with index 0.
fn cell_indices(v: &[f64]) -> Result<(usize, Vec<u8>)> {
    if v.is_empty() {
        return Err(Error::Dimension("feature vector is empty".into()));
    }
    if let Some(pos) = v.iter().position(|x| !x.is_finite()) {
        return Err(Error::Dimension(format!("feature {pos} is not finite")));
    }
    let (lo, hi) = v
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let range = hi - lo;
    let g = grid_side(v.len());
    let mut cells = vec![ColormapLut::index_of(0.0); g * g];
    for (cell, &x) in cells.iter_mut().zip(v) {
        let t = if range > 0.0 { (x - lo) / range } else { 0.5 };
        *cell = ColormapLut::index_of(t);
    }
    Ok((g, cells))
}

pub fn vector_to_image_with(v: &[f64], lut: &ColormapLut) -> Result<FeatureImage> {
    let (g, cells) = cell_indices(v)?;
    let source: Vec<usize> = (0..IMAGE_SIZE).map(|i| i * g / IMAGE_SIZE).collect();
    let mut pixels = Vec::with_capacity(IMAGE_SIZE * IMAGE_SIZE * CHANNELS);
    for &r in &source {
        for &c in &source {
            pixels.extend_from_slice(&lut.entry(cells[r * g + c]));
        }
    }
    FeatureImage::from_pixels(pixels)
}

pub fn vector_to_image(v: &[f64]) -> Result<FeatureImage> {
    vector_to_image_with(v, &ColormapLut::new())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anchors() {
        assert_eq!(colormap(0.0), [0, 0, 255]);
        assert_eq!(colormap(1.0), [255, 0, 0]);
        assert_eq!(colormap(-3.0), [0, 0, 255]);
        assert_eq!(colormap(7.0), [255, 0, 0]);
    }

    #[test]
    fn quarter_point_interpolates() {
        // round(0.25*255) = 64 -> 2*64/255 of the way from blue to green.
        assert_eq!(colormap(0.25), [0, 128, 127]);
    }

    #[test]
    fn lut_is_monotone_between_anchors() {
        let lut = ColormapLut::new();
        let e = lut.entries();
        for k in 1..=127 {
            assert!(e[k][1] >= e[k - 1][1] && e[k][2] <= e[k - 1][2]);
        }
        for k in 129..256 {
            assert!(e[k][0] >= e[k - 1][0] && e[k][1] <= e[k - 1][1]);
        }
    }

    #[test]
    fn constant_vector_is_uniform_mid_color() {
        let img = vector_to_image(&[4.2; 17]).unwrap();
        let mid = ColormapLut::new().entry(128);
        // 17 features -> 5x5 grid, padding cells take index 0.
        assert_eq!(img.pixel(0, 0), mid);
        let g = grid_side(17);
        assert_eq!(g, 5);
        let img = vector_to_image(&[4.2; 16]).unwrap();
        assert!(img.pixels().chunks(3).all(|p| p == mid));
    }

    #[test]
    fn hundred_features_corner_pixels() {
        let v: Vec<f64> = (0..100).map(f64::from).collect();
        let img = vector_to_image(&v).unwrap();
        let lut = ColormapLut::new();
        assert_eq!(img.pixel(0, 0), lut.color(0.0));
        assert_eq!(img.pixel(223, 223), lut.color(1.0));
        // Cell boundaries: floor(i*10/224) changes from 0 to 1 at i = 23.
        assert_eq!(img.pixel(0, 22), lut.color(0.0));
        assert_eq!(img.pixel(0, 23), lut.color(1.0 / 99.0));
    }

    #[test]
    fn grid_sides() {
        assert_eq!(grid_side(1), 1);
        assert_eq!(grid_side(4), 2);
        assert_eq!(grid_side(5), 3);
        assert_eq!(grid_side(100), 10);
        assert_eq!(grid_side(101), 11);
        assert_eq!(grid_side(3328), 58);
    }

    #[test]
    fn rejects_non_finite() {
        assert!(vector_to_image(&[1.0, f64::NAN]).is_err());
        assert!(vector_to_image(&[]).is_err());
    }

    #[test]
    fn raw_dump_round_trip() {
        let img = vector_to_image(&[1.0, 2.0, 3.0]).unwrap();
        let mut buf = Vec::new();
        img.write_raw(&mut buf).unwrap();
        assert_eq!(buf.len(), 12 + 224 * 224 * 3);
        assert_eq!(&buf[..4], b"TLIM");
        assert_eq!(FeatureImage::read_raw(buf.as_slice()).unwrap(), img);
        buf[0] = b'X';
        assert!(FeatureImage::read_raw(buf.as_slice()).is_err());
    }
}
