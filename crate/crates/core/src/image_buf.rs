//! Dense float images and boolean masks, plus the PNG codecs used by the
//! wire protocol and session files.
//!
//! Rows are stored top to bottom, pixels left to right, channels interleaved.

use std::io::Cursor;

use image::{DynamicImage, GrayImage, ImageBuffer, ImageFormat, Luma, RgbImage};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("png codec: {0}")]
    Png(#[from] image::ImageError),
    #[error("expected {expected}, got {actual}")]
    Shape { expected: String, actual: String },
}

/// A row-major float image with `channels` interleaved values per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f32>,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize) -> Self {
        Self::filled(width, height, channels, 0.0)
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f32) -> Self {
        assert!(channels > 0, "an image needs at least one channel");
        Self { width, height, channels, data: vec![value; width * height * channels] }
    }

    /// Wraps an existing buffer. Returns `None` if the length does not match.
    pub fn from_vec(width: usize, height: usize, channels: usize, data: Vec<f32>) -> Option<Self> {
        (channels > 0 && data.len() == width * height * channels)
            .then_some(Self { width, height, channels, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        (y * self.width + x) * self.channels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f32 {
        self.data[self.index(x, y) + c]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, value: f32) {
        let i = self.index(x, y) + c;
        self.data[i] = value;
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> &[f32] {
        let i = self.index(x, y);
        &self.data[i..i + self.channels]
    }

    #[inline]
    pub fn pixel_mut(&mut self, x: usize, y: usize) -> &mut [f32] {
        let i = self.index(x, y);
        let c = self.channels;
        &mut self.data[i..i + c]
    }

    /// Pixel by flat index (`y * width + x`).
    #[inline]
    pub fn at(&self, p: usize) -> &[f32] {
        &self.data[p * self.channels..(p + 1) * self.channels]
    }

    #[inline]
    pub fn at_mut(&mut self, p: usize) -> &mut [f32] {
        let c = self.channels;
        &mut self.data[p * c..(p + 1) * c]
    }

    pub fn same_shape(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    pub fn shape_string(&self) -> String {
        format!("{}x{}x{}", self.width, self.height, self.channels)
    }

    /// Bilinear resample with pixel-center alignment and edge clamping.
    pub fn resize_bilinear(&self, width: usize, height: usize) -> Image {
        if width == self.width && height == self.height {
            return self.clone();
        }
        let mut out = Image::new(width, height, self.channels);
        let sx = self.width as f64 / width as f64;
        let sy = self.height as f64 / height as f64;
        for y in 0..height {
            let fy = ((y as f64 + 0.5) * sy - 0.5).clamp(0.0, (self.height - 1) as f64);
            for x in 0..width {
                let fx = ((x as f64 + 0.5) * sx - 0.5).clamp(0.0, (self.width - 1) as f64);
                let dst = out.index(x, y);
                for c in 0..self.channels {
                    out.data[dst + c] = self.sample_bilinear_texel(fx, fy, c);
                }
            }
        }
        out
    }

    /// Bilinear lookup at continuous texel coordinates, where integer
    /// coordinates land on texel centers. Coordinates are clamped to the edge.
    pub fn sample_bilinear_texel(&self, fx: f64, fy: f64, c: usize) -> f32 {
        let max_x = (self.width - 1) as f64;
        let max_y = (self.height - 1) as f64;
        let fx = fx.clamp(0.0, max_x);
        let fy = fy.clamp(0.0, max_y);
        let x0 = fx.floor() as usize;
        let y0 = fy.floor() as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let tx = (fx - x0 as f64) as f32;
        let ty = (fy - y0 as f64) as f32;
        let a = self.get(x0, y0, c) * (1.0 - tx) + self.get(x1, y0, c) * tx;
        let b = self.get(x0, y1, c) * (1.0 - tx) + self.get(x1, y1, c) * tx;
        a * (1.0 - ty) + b * ty
    }

    /// Rounds every value onto the 8-bit grid `k / 255`.
    pub fn quantize_u8(&mut self) {
        for v in &mut self.data {
            *v = to_u8(*v) as f32 / 255.0;
        }
    }
}

/// A row-major boolean mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl Mask {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height, data: vec![false; width * height] }
    }

    pub fn filled(width: usize, height: usize, value: bool) -> Self {
        Self { width, height, data: vec![value; width * height] }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<bool>) -> Option<Self> {
        (data.len() == width * height).then_some(Self { width, height, data })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [bool] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.data[y * self.width + x] = value;
    }

    #[inline]
    pub fn at(&self, p: usize) -> bool {
        self.data[p]
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.data.iter().any(|&b| b)
    }

    pub fn same_shape(&self, other: &Mask) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn union(&self, other: &Mask) -> Mask {
        self.zip(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &Mask) -> Mask {
        self.zip(other, |a, b| a && b)
    }

    pub fn is_disjoint(&self, other: &Mask) -> bool {
        assert!(self.same_shape(other));
        !self.data.iter().zip(&other.data).any(|(&a, &b)| a && b)
    }

    /// True if every set pixel of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &Mask) -> bool {
        assert!(self.same_shape(other));
        self.data.iter().zip(&other.data).all(|(&a, &b)| !a || b)
    }

    fn zip(&self, other: &Mask, f: impl Fn(bool, bool) -> bool) -> Mask {
        assert!(self.same_shape(other), "mask shapes differ");
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Mask { width: self.width, height: self.height, data }
    }

    pub fn resize_nearest(&self, width: usize, height: usize) -> Mask {
        if width == self.width && height == self.height {
            return self.clone();
        }
        Mask::from_fn(width, height, |x, y| {
            let sx = ((x as f64 + 0.5) * self.width as f64 / width as f64) as usize;
            let sy = ((y as f64 + 0.5) * self.height as f64 / height as f64) as usize;
            self.get(sx.min(self.width - 1), sy.min(self.height - 1))
        })
    }

    /// 0.0 / 1.0 single-channel image.
    pub fn to_image(&self) -> Image {
        let data = self.data.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
        Image::from_vec(self.width, self.height, 1, data).expect("shape")
    }
}

#[inline]
pub fn to_u8(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

#[inline]
pub fn to_u16(v: f32) -> u16 {
    (v.clamp(0.0, 1.0) as f64 * 65535.0).round() as u16
}

fn encode(img: DynamicImage) -> Result<Vec<u8>, CodecError> {
    let mut out = Cursor::new(Vec::new());
    img.write_to(&mut out, ImageFormat::Png)?;
    Ok(out.into_inner())
}

/// 8-bit RGB PNG from a 3-channel image.
pub fn encode_rgb8(img: &Image) -> Result<Vec<u8>, CodecError> {
    if img.channels() != 3 {
        return Err(CodecError::Shape { expected: "3 channels".into(), actual: img.shape_string() });
    }
    let bytes: Vec<u8> = img.data().iter().map(|&v| to_u8(v)).collect();
    let buf = RgbImage::from_raw(img.width() as u32, img.height() as u32, bytes).expect("shape");
    encode(DynamicImage::ImageRgb8(buf))
}

/// 8-bit gray PNG from a 1-channel image.
pub fn encode_gray8(img: &Image) -> Result<Vec<u8>, CodecError> {
    if img.channels() != 1 {
        return Err(CodecError::Shape { expected: "1 channel".into(), actual: img.shape_string() });
    }
    let bytes: Vec<u8> = img.data().iter().map(|&v| to_u8(v)).collect();
    let buf = GrayImage::from_raw(img.width() as u32, img.height() as u32, bytes).expect("shape");
    encode(DynamicImage::ImageLuma8(buf))
}

/// Mask as 8-bit gray with values {0, 255}.
pub fn encode_mask(mask: &Mask) -> Result<Vec<u8>, CodecError> {
    let bytes: Vec<u8> = mask.data().iter().map(|&b| if b { 255 } else { 0 }).collect();
    let buf = GrayImage::from_raw(mask.width() as u32, mask.height() as u32, bytes).expect("shape");
    encode(DynamicImage::ImageLuma8(buf))
}

/// 16-bit gray PNG from a 1-channel image in [0, 1].
pub fn encode_gray16(img: &Image) -> Result<Vec<u8>, CodecError> {
    if img.channels() != 1 {
        return Err(CodecError::Shape { expected: "1 channel".into(), actual: img.shape_string() });
    }
    let words: Vec<u16> = img.data().iter().map(|&v| to_u16(v)).collect();
    let buf: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_raw(img.width() as u32, img.height() as u32, words).expect("shape");
    encode(DynamicImage::ImageLuma16(buf))
}

fn decode(bytes: &[u8]) -> Result<DynamicImage, CodecError> {
    Ok(image::load_from_memory_with_format(bytes, ImageFormat::Png)?)
}

/// Decodes any PNG to a 3-channel float image (alpha dropped, gray expanded).
pub fn decode_rgb(bytes: &[u8]) -> Result<Image, CodecError> {
    let rgb = decode(bytes)?.to_rgb8();
    let (w, h) = rgb.dimensions();
    let data = rgb.into_raw().into_iter().map(|b| b as f32 / 255.0).collect();
    Ok(Image::from_vec(w as usize, h as usize, 3, data).expect("shape"))
}

/// Decodes a PNG to a 1-channel float image, keeping 16-bit precision when present.
pub fn decode_gray(bytes: &[u8]) -> Result<Image, CodecError> {
    let img = decode(bytes)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data: Vec<f32> = match img {
        DynamicImage::ImageLuma16(buf) => buf.into_raw().into_iter().map(|v| v as f32 / 65535.0).collect(),
        other => other.to_luma8().into_raw().into_iter().map(|v| v as f32 / 255.0).collect(),
    };
    Ok(Image::from_vec(w, h, 1, data).expect("shape"))
}

/// Decodes a PNG mask; any nonzero gray value counts as set.
pub fn decode_mask(bytes: &[u8]) -> Result<Mask, CodecError> {
    let gray = decode(bytes)?.to_luma8();
    let (w, h) = gray.dimensions();
    let data = gray.into_raw().into_iter().map(|v| v > 127).collect();
    Ok(Mask::from_vec(w as usize, h as usize, data).expect("shape"))
}
