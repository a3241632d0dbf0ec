//! Raster types, decoding, integral box downscaling and luma conversion.
//!
//! Every rounding step in this module is half-up, so results are bit-exact
//! across platforms.

use image::ImageFormat;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Working width of the pipeline (4x reduction of a 2048 px capture).
pub const WORKING_WIDTH: u32 = 512;
/// Working height of the pipeline (4x reduction of a 1536 px capture).
pub const WORKING_HEIGHT: u32 = 384;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ImageError {
    #[error("unsupported image format (expected PNG or JPEG)")]
    UnsupportedFormat,
    #[error("corrupt or truncated image stream: {0}")]
    CorruptStream(String),
    #[error("cannot box-resize {from_w}x{from_h} to {to_w}x{to_h}: factors must be integral")]
    NonIntegralFactor {
        from_w: u32,
        from_h: u32,
        to_w: u32,
        to_h: u32,
    },
    #[error("invalid raster: {0}")]
    InvalidRaster(String),
}

/// 24-bit colour raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: u32,
    height: u32,
    data: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn new(width: u32, height: u32, data: Vec<[u8; 3]>) -> Result<Self, ImageError> {
        check_dims(width, height, data.len())?;
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: u32, height: u32, px: [u8; 3]) -> Result<Self, ImageError> {
        Self::new(width, height, vec![px; width as usize * height as usize])
    }

    /// Builds an image from packed `RGBRGB...` bytes.
    pub fn from_raw(width: u32, height: u32, raw: &[u8]) -> Result<Self, ImageError> {
        if !raw.len().is_multiple_of(3) {
            return Err(ImageError::InvalidRaster(format!(
                "{} bytes is not a whole number of RGB pixels",
                raw.len()
            )));
        }
        let data = raw.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        Self::new(width, height, data)
    }

    /// Builds an image from packed `RGBA` bytes, dropping alpha.
    pub fn from_rgba(width: u32, height: u32, raw: &[u8]) -> Result<Self, ImageError> {
        if !raw.len().is_multiple_of(4) {
            return Err(ImageError::InvalidRaster(format!(
                "{} bytes is not a whole number of RGBA pixels",
                raw.len()
            )));
        }
        let data = raw.chunks_exact(4).map(|c| [c[0], c[1], c[2]]).collect();
        Self::new(width, height, data)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.data
    }

    pub fn pixels_mut(&mut self) -> &mut [[u8; 3]] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> [u8; 3] {
        self.data[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn put(&mut self, x: u32, y: u32, px: [u8; 3]) {
        let w = self.width as usize;
        self.data[y as usize * w + x as usize] = px;
    }

    pub fn to_raw(&self) -> Vec<u8> {
        self.data.iter().flatten().copied().collect()
    }

    pub fn to_rgba(&self) -> Vec<u8> {
        self.data
            .iter()
            .flat_map(|p| [p[0], p[1], p[2], 255])
            .collect()
    }

    /// Encodes as an 8-bit RGB PNG.
    pub fn encode_png(&self) -> Vec<u8> {
        let mut out = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut out, self.width, self.height);
            enc.set_color(png::ColorType::Rgb);
            enc.set_depth(png::BitDepth::Eight);
            // in-memory writer, dimensions validated at construction
            let mut w = enc.write_header().expect("png header");
            w.write_image_data(&self.to_raw()).expect("png data");
        }
        out
    }
}

/// 8-bit luma raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Result<Self, ImageError> {
        check_dims(width, height, data.len())?;
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: u32, height: u32, v: u8) -> Result<Self, ImageError> {
        Self::new(width, height, vec![v; width as usize * height as usize])
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.data[y as usize * self.width as usize + x as usize]
    }
}

/// Where a working image came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageMeta {
    pub source_path: String,
    pub original_width: u32,
    pub original_height: u32,
    pub dpi: Option<u32>,
}

fn check_dims(width: u32, height: u32, len: usize) -> Result<(), ImageError> {
    if width == 0 || height == 0 {
        return Err(ImageError::InvalidRaster(format!(
            "dimensions must be non-zero, got {width}x{height}"
        )));
    }
    if len != width as usize * height as usize {
        return Err(ImageError::InvalidRaster(format!(
            "{len} pixels do not fill {width}x{height}"
        )));
    }
    Ok(())
}

/// Decodes a PNG or JPEG stream. Alpha, if any, is dropped.
pub fn decode(bytes: &[u8]) -> Result<RgbImage, ImageError> {
    let format = image::guess_format(bytes).map_err(|_| ImageError::UnsupportedFormat)?;
    if !matches!(format, ImageFormat::Png | ImageFormat::Jpeg) {
        return Err(ImageError::UnsupportedFormat);
    }
    let dynamic = image::load_from_memory_with_format(bytes, format).map_err(|e| match e {
        image::ImageError::Unsupported(_) => ImageError::UnsupportedFormat,
        other => ImageError::CorruptStream(other.to_string()),
    })?;
    let rgb = dynamic.into_rgb8();
    let (w, h) = rgb.dimensions();
    RgbImage::from_raw(w, h, rgb.as_raw())
}

/// Block-mean downscale by integral factors in both axes.
pub fn resize_box(img: &RgbImage, out_w: u32, out_h: u32) -> Result<RgbImage, ImageError> {
    let err = || ImageError::NonIntegralFactor {
        from_w: img.width,
        from_h: img.height,
        to_w: out_w,
        to_h: out_h,
    };
    if out_w == 0 || out_h == 0 || out_w > img.width || out_h > img.height {
        return Err(err());
    }
    if !img.width.is_multiple_of(out_w) || !img.height.is_multiple_of(out_h) {
        return Err(err());
    }
    let fx = (img.width / out_w) as usize;
    let fy = (img.height / out_h) as usize;
    if fx == 1 && fy == 1 {
        return Ok(img.clone());
    }
    let n = (fx * fy) as u64;
    let w = img.width as usize;
    let mut out = Vec::with_capacity(out_w as usize * out_h as usize);
    for oy in 0..out_h as usize {
        for ox in 0..out_w as usize {
            let mut acc = [0u64; 3];
            for y in oy * fy..(oy + 1) * fy {
                let row = &img.data[y * w + ox * fx..y * w + (ox + 1) * fx];
                for p in row {
                    acc[0] += p[0] as u64;
                    acc[1] += p[1] as u64;
                    acc[2] += p[2] as u64;
                }
            }
            // half-up: floor((sum + n/2) / n) with exact integer halves
            out.push(acc.map(|s| ((2 * s + n) / (2 * n)) as u8));
        }
    }
    RgbImage::new(out_w, out_h, out)
}

/// Rec.601 luma, `0.299 R + 0.587 G + 0.114 B`, rounded half-up.
#[inline]
pub fn luma(px: [u8; 3]) -> u8 {
    let weighted = 299 * px[0] as u32 + 587 * px[1] as u32 + 114 * px[2] as u32;
    ((weighted + 500) / 1000) as u8
}

pub fn to_grayscale(img: &RgbImage) -> GrayImage {
    GrayImage {
        width: img.width,
        height: img.height,
        data: img.data.iter().map(|&p| luma(p)).collect(),
    }
}

/// Brings a decoded capture to the working resolution when it is an exact
/// integral multiple of 512x384; otherwise returns it unchanged.
pub fn to_working_resolution(img: &RgbImage) -> Result<RgbImage, ImageError> {
    let (w, h) = (img.width, img.height);
    if w >= WORKING_WIDTH
        && h >= WORKING_HEIGHT
        && w % WORKING_WIDTH == 0
        && h % WORKING_HEIGHT == 0
        && (w, h) != (WORKING_WIDTH, WORKING_HEIGHT)
    {
        resize_box(img, WORKING_WIDTH, WORKING_HEIGHT)
    } else {
        Ok(img.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn block_mean_oracle(img: &RgbImage, out_w: u32, out_h: u32) -> Vec<[u8; 3]> {
        let fx = img.width() / out_w;
        let fy = img.height() / out_h;
        let mut out = Vec::new();
        for oy in 0..out_h {
            for ox in 0..out_w {
                let mut px = [0u8; 3];
                for (c, slot) in px.iter_mut().enumerate() {
                    let mut sum = 0.0f64;
                    for y in 0..fy {
                        for x in 0..fx {
                            sum += img.get(ox * fx + x, oy * fy + y)[c] as f64;
                        }
                    }
                    *slot = (sum / (fx * fy) as f64 + 0.5).floor() as u8;
                }
                out.push(px);
            }
        }
        out
    }

    #[test]
    fn decode_white_png() {
        let img = RgbImage::filled(1, 1, [255, 255, 255]).unwrap();
        let decoded = decode(&img.encode_png()).unwrap();
        assert_eq!(decoded, img);
    }

    #[test]
    fn decode_drops_alpha() {
        let buf = image::RgbaImage::from_raw(2, 1, vec![10, 20, 30, 0, 40, 50, 60, 255]).unwrap();
        let mut bytes = Vec::new();
        buf.write_to(&mut std::io::Cursor::new(&mut bytes), ImageFormat::Png)
            .unwrap();
        let decoded = decode(&bytes).unwrap();
        assert_eq!(decoded.pixels(), &[[10, 20, 30], [40, 50, 60]]);
    }

    #[test]
    fn decode_full_capture_jpeg() {
        let buf = image::RgbImage::from_fn(2048, 1536, |x, y| {
            image::Rgb([(x % 256) as u8, (y % 256) as u8, 128])
        });
        let mut bytes = Vec::new();
        buf.write_to(&mut std::io::Cursor::new(&mut bytes), ImageFormat::Jpeg)
            .unwrap();
        let decoded = decode(&bytes).unwrap();
        assert_eq!((decoded.width(), decoded.height()), (2048, 1536));
    }

    #[test]
    fn truncated_png_is_corrupt() {
        let img = RgbImage::new(
            40,
            30,
            (0..1200u32)
                .map(|i| [i as u8, (i * 7) as u8, (i * 13) as u8])
                .collect(),
        )
        .unwrap();
        let bytes = img.encode_png();
        let cut = &bytes[..bytes.len() / 2];
        assert!(matches!(decode(cut), Err(ImageError::CorruptStream(_))));
    }

    #[test]
    fn unknown_bytes_are_unsupported() {
        assert_eq!(decode(b"GIF89a......"), Err(ImageError::UnsupportedFormat));
        assert_eq!(decode(b"not an image"), Err(ImageError::UnsupportedFormat));
    }

    #[test]
    fn resize_capture_to_working() {
        let img = RgbImage::filled(2048, 1536, [1, 2, 3]).unwrap();
        let out = resize_box(&img, 512, 384).unwrap();
        assert_eq!((out.width(), out.height()), (512, 384));
        assert!(out.pixels().iter().all(|&p| p == [1, 2, 3]));
    }

    #[test]
    fn resize_identity() {
        let img = RgbImage::new(
            3,
            2,
            vec![
                [1, 2, 3],
                [4, 5, 6],
                [7, 8, 9],
                [0, 0, 0],
                [255, 1, 2],
                [9, 9, 9],
            ],
        )
        .unwrap();
        assert_eq!(resize_box(&img, 3, 2).unwrap(), img);
    }

    #[test]
    fn resize_checkerboard_rounds_half_up() {
        let img = RgbImage::new(2, 2, vec![[0; 3], [255; 3], [255; 3], [0; 3]]).unwrap();
        let out = resize_box(&img, 1, 1).unwrap();
        assert_eq!(out.pixels(), block_mean_oracle(&img, 1, 1).as_slice());
        assert_eq!(out.pixels(), &[[128, 128, 128]]);
    }

    #[test]
    fn resize_rejects_non_integral() {
        let img = RgbImage::filled(10, 10, [0; 3]).unwrap();
        assert!(matches!(
            resize_box(&img, 3, 5),
            Err(ImageError::NonIntegralFactor { .. })
        ));
        assert!(matches!(
            resize_box(&img, 20, 5),
            Err(ImageError::NonIntegralFactor { .. })
        ));
    }

    #[test]
    fn grayscale_examples() {
        assert_eq!(luma([255, 255, 255]), 255);
        assert_eq!(luma([0, 0, 0]), 0);
        // 0.299 * 255 = 76.245
        assert_eq!(luma([255, 0, 0]), 76);
        assert_eq!(luma([0, 255, 0]), (0.587f64 * 255.0 + 0.5).floor() as u8);
    }

    #[test]
    fn working_resolution_reduces_captures_only() {
        let cap = RgbImage::filled(2048, 1536, [9; 3]).unwrap();
        let w = to_working_resolution(&cap).unwrap();
        assert_eq!((w.width(), w.height()), (512, 384));
        let odd = RgbImage::filled(300, 200, [9; 3]).unwrap();
        assert_eq!(to_working_resolution(&odd).unwrap(), odd);
    }

    fn small_image() -> impl Strategy<Value = RgbImage> {
        (1u32..5, 1u32..5, 1u32..4, 1u32..4).prop_flat_map(|(ow, oh, fx, fy)| {
            let (w, h) = (ow * fx, oh * fy);
            proptest::collection::vec(any::<[u8; 3]>(), (w * h) as usize)
                .prop_map(move |data| RgbImage::new(w, h, data).unwrap())
        })
    }

    proptest! {
        #[test]
        fn png_roundtrip(img in small_image()) {
            prop_assert_eq!(decode(&img.encode_png()).unwrap(), img);
        }

        #[test]
        fn resize_matches_block_oracle(img in small_image(), ow in 1u32..5, oh in 1u32..5) {
            prop_assume!(img.width() % ow == 0 && img.height() % oh == 0);
            prop_assume!(ow <= img.width() && oh <= img.height());
            let out = resize_box(&img, ow, oh).unwrap();
            let expected = block_mean_oracle(&img, ow, oh);
            prop_assert_eq!(out.pixels(), expected.as_slice());
            for c in 0..3 {
                let mean_in: f64 = img.pixels().iter().map(|p| p[c] as f64).sum::<f64>() / img.pixels().len() as f64;
                let mean_out: f64 = out.pixels().iter().map(|p| p[c] as f64).sum::<f64>() / out.pixels().len() as f64;
                prop_assert!((mean_in - mean_out).abs() <= 0.5);
            }
        }

        #[test]
        fn resize_constant_is_constant(v in any::<[u8; 3]>(), f in 1u32..5) {
            let img = RgbImage::filled(4 * f, 3 * f, v).unwrap();
            let out = resize_box(&img, 4, 3).unwrap();
            prop_assert!(out.pixels().iter().all(|&p| p == v));
        }

        #[test]
        fn gray_pixels_keep_value(v in any::<u8>()) {
            prop_assert_eq!(luma([v, v, v]), v);
        }
    }
}
