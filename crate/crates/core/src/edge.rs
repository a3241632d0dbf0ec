//! Canny edge detection: Gaussian blur, Sobel gradients, non-maximum
//! suppression and hysteresis linking.
//!
//! Borders are replicate-padded at every stage. Hysteresis thresholds are
//! fractions of the largest suppressed magnitude in the image, so the output
//! does not depend on the absolute contrast of the input.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imgcore::GrayImage;

#[derive(Debug, Error, PartialEq)]
pub enum EdgeError {
    #[error("image is {width}x{height}; gradients need at least 3x3")]
    ImageTooSmall { width: u32, height: u32 },
    #[error("invalid Canny parameters: {0}")]
    InvalidParams(String),
}

/// Real-valued raster used between the Canny stages.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub width: u32,
    pub height: u32,
    pub data: Vec<f64>,
}

impl Raster {
    pub fn zeros(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            data: vec![0.0; width as usize * height as usize],
        }
    }

    pub fn from_gray(img: &GrayImage) -> Self {
        Self {
            width: img.width(),
            height: img.height(),
            data: img.pixels().iter().map(|&v| v as f64).collect(),
        }
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> f64 {
        self.data[y as usize * self.width as usize + x as usize]
    }

    /// Reads with replicate padding.
    #[inline]
    pub fn get_clamped(&self, x: i64, y: i64) -> f64 {
        let cx = x.clamp(0, self.width as i64 - 1) as usize;
        let cy = y.clamp(0, self.height as i64 - 1) as usize;
        self.data[cy * self.width as usize + cx]
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }
}

/// Gradient orientation quantized to the four NMS directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sector {
    Deg0,
    Deg45,
    Deg90,
    Deg135,
}

impl Sector {
    /// Nearest of the four bins to `atan2(gy, gx)` modulo 180 degrees.
    pub fn from_gradient(gx: f64, gy: f64) -> Self {
        let mut angle = gy.atan2(gx).to_degrees();
        if angle < 0.0 {
            angle += 180.0;
        }
        if !(22.5..157.5).contains(&angle) {
            Sector::Deg0
        } else if angle < 67.5 {
            Sector::Deg45
        } else if angle < 112.5 {
            Sector::Deg90
        } else {
            Sector::Deg135
        }
    }

    /// Offsets of the two neighbours along the gradient direction (y down).
    pub fn neighbour_offsets(self) -> [(i64, i64); 2] {
        match self {
            Sector::Deg0 => [(-1, 0), (1, 0)],
            Sector::Deg45 => [(1, 1), (-1, -1)],
            Sector::Deg90 => [(0, -1), (0, 1)],
            Sector::Deg135 => [(-1, 1), (1, -1)],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    pub width: u32,
    pub height: u32,
    pub gx: Vec<f64>,
    pub gy: Vec<f64>,
    pub magnitude: Vec<f64>,
    pub sector: Vec<Sector>,
}

/// Binary edge mask with the dimensions of its source image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeMap {
    pub width: u32,
    pub height: u32,
    pub mask: Vec<bool>,
}

impl EdgeMap {
    pub fn empty(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            mask: vec![false; width as usize * height as usize],
        }
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> bool {
        self.mask[y as usize * self.width as usize + x as usize]
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// 1-bit grayscale PNG, edges white.
    pub fn encode_png(&self) -> Vec<u8> {
        let stride = (self.width as usize).div_ceil(8);
        let mut packed = vec![0u8; stride * self.height as usize];
        for y in 0..self.height as usize {
            for x in 0..self.width as usize {
                if self.mask[y * self.width as usize + x] {
                    packed[y * stride + x / 8] |= 0x80 >> (x % 8);
                }
            }
        }
        let mut out = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut out, self.width, self.height);
            enc.set_color(png::ColorType::Grayscale);
            enc.set_depth(png::BitDepth::One);
            let mut w = enc.write_header().expect("png header");
            w.write_image_data(&packed).expect("png data");
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CannyParams {
    /// Gaussian standard deviation in pixels.
    pub sigma: f64,
    /// Strong threshold as a fraction of the largest suppressed magnitude.
    pub t_high: f64,
    /// Weak threshold = `low_ratio * t_high`.
    pub low_ratio: f64,
}

impl Default for CannyParams {
    fn default() -> Self {
        Self {
            sigma: 1.4,
            t_high: 0.02,
            low_ratio: 0.4,
        }
    }
}

impl CannyParams {
    pub fn with_high(t_high: f64) -> Self {
        Self {
            t_high,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), EdgeError> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(EdgeError::InvalidParams(format!(
                "sigma must be > 0, got {}",
                self.sigma
            )));
        }
        if !(self.t_high > 0.0 && self.t_high <= 1.0) {
            return Err(EdgeError::InvalidParams(format!(
                "t_high must lie in (0, 1], got {}",
                self.t_high
            )));
        }
        if !(self.low_ratio > 0.0 && self.low_ratio < 1.0) {
            return Err(EdgeError::InvalidParams(format!(
                "low_ratio must lie in (0, 1), got {}",
                self.low_ratio
            )));
        }
        Ok(())
    }
}

/// Normalized 1-D Gaussian taps, radius `ceil(3 sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as i64;
    let denom = 2.0 * sigma * sigma;
    let mut taps: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / denom).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    taps
}

/// Separable Gaussian blur with replicate borders.
pub fn gaussian_blur(img: &GrayImage, sigma: f64) -> Result<Raster, EdgeError> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(EdgeError::InvalidParams(format!(
            "sigma must be > 0, got {sigma}"
        )));
    }
    Ok(blur_raster(&Raster::from_gray(img), sigma))
}

pub(crate) fn blur_raster(src: &Raster, sigma: f64) -> Raster {
    let taps = gaussian_kernel(sigma);
    let radius = (taps.len() / 2) as i64;
    let (w, h) = (src.width as i64, src.height as i64);

    let mut horiz = Raster::zeros(src.width, src.height);
    for y in 0..h {
        let row = &src.data[(y * w) as usize..((y + 1) * w) as usize];
        for x in 0..w {
            let mut acc = 0.0;
            for (k, t) in taps.iter().enumerate() {
                let sx = (x + k as i64 - radius).clamp(0, w - 1);
                acc += t * row[sx as usize];
            }
            horiz.data[(y * w + x) as usize] = acc;
        }
    }

    let mut out = Raster::zeros(src.width, src.height);
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, t) in taps.iter().enumerate() {
                let sy = (y + k as i64 - radius).clamp(0, h - 1);
                acc += t * horiz.data[(sy * w + x) as usize];
            }
            out.data[(y * w + x) as usize] = acc;
        }
    }
    out
}

/// 3x3 Sobel gradients with replicate borders.
pub fn sobel_gradients(r: &Raster) -> Result<GradientField, EdgeError> {
    if r.width < 3 || r.height < 3 {
        return Err(EdgeError::ImageTooSmall {
            width: r.width,
            height: r.height,
        });
    }
    let n = r.data.len();
    let mut gx = Vec::with_capacity(n);
    let mut gy = Vec::with_capacity(n);
    for y in 0..r.height as i64 {
        for x in 0..r.width as i64 {
            let p = |dx: i64, dy: i64| r.get_clamped(x + dx, y + dy);
            let (tl, tc, tr) = (p(-1, -1), p(0, -1), p(1, -1));
            let (ml, mr) = (p(-1, 0), p(1, 0));
            let (bl, bc, br) = (p(-1, 1), p(0, 1), p(1, 1));
            gx.push((tr + 2.0 * mr + br) - (tl + 2.0 * ml + bl));
            gy.push((bl + 2.0 * bc + br) - (tl + 2.0 * tc + tr));
        }
    }
    let magnitude = gx.iter().zip(&gy).map(|(a, b)| a.hypot(*b)).collect();
    let sector = gx
        .iter()
        .zip(&gy)
        .map(|(&a, &b)| Sector::from_gradient(a, b))
        .collect();
    Ok(GradientField {
        width: r.width,
        height: r.height,
        gx,
        gy,
        magnitude,
        sector,
    })
}

/// Keeps a magnitude only where it is >= both neighbours along its sector.
pub fn non_max_suppress(g: &GradientField) -> Raster {
    let mag = Raster {
        width: g.width,
        height: g.height,
        data: g.magnitude.clone(),
    };
    let mut out = Raster::zeros(g.width, g.height);
    let w = g.width as usize;
    for y in 0..g.height as i64 {
        for x in 0..g.width as i64 {
            let i = y as usize * w + x as usize;
            let m = g.magnitude[i];
            if m == 0.0 {
                continue;
            }
            let [(ax, ay), (bx, by)] = g.sector[i].neighbour_offsets();
            if m >= mag.get_clamped(x + ax, y + ay) && m >= mag.get_clamped(x + bx, y + by) {
                out.data[i] = m;
            }
        }
    }
    out
}

/// Double-threshold linking. Pixels at or above the strong threshold seed the
/// mask; weak pixels join when 8-connected to a seed through other weak pixels.
pub fn hysteresis(suppressed: &Raster, t_high: f64, low_ratio: f64) -> EdgeMap {
    let (w, h) = (suppressed.width as usize, suppressed.height as usize);
    let mut map = EdgeMap::empty(suppressed.width, suppressed.height);
    let max = suppressed.max();
    if max <= 0.0 {
        return map;
    }
    let strong = t_high * max;
    let weak = low_ratio * strong;

    let mut stack = Vec::new();
    for (i, &v) in suppressed.data.iter().enumerate() {
        if v >= strong && !map.mask[i] {
            map.mask[i] = true;
            stack.push(i);
            while let Some(j) = stack.pop() {
                let (jx, jy) = ((j % w) as i64, (j / w) as i64);
                for dy in -1..=1i64 {
                    for dx in -1..=1i64 {
                        let (nx, ny) = (jx + dx, jy + dy);
                        if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                            continue;
                        }
                        let k = ny as usize * w + nx as usize;
                        if !map.mask[k] && suppressed.data[k] >= weak {
                            map.mask[k] = true;
                            stack.push(k);
                        }
                    }
                }
            }
        }
    }
    map
}

/// Full detector: blur, Sobel, NMS, hysteresis.
pub fn canny(img: &GrayImage, p: &CannyParams) -> Result<EdgeMap, EdgeError> {
    p.validate()?;
    let blurred = gaussian_blur(img, p.sigma)?;
    let grad = sobel_gradients(&blurred)?;
    let thin = non_max_suppress(&grad);
    Ok(hysteresis(&thin, p.t_high, p.low_ratio))
}
