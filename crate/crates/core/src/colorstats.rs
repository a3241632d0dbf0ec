//! Sample mean / variance, per-region RGB histograms and the colour-variance
//! score used to flag accessory minerals.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imgcore::RgbImage;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StatsError {
    #[error("statistics need at least one sample")]
    EmptySample,
    #[error("region {region:?} lies outside a {width}x{height} image")]
    RegionOutOfBounds {
        region: Rect,
        width: u32,
        height: u32,
    },
}

/// Axis-aligned pixel rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl Rect {
    pub const fn new(x: u32, y: u32, w: u32, h: u32) -> Self {
        Self { x, y, w, h }
    }

    pub fn area(&self) -> u64 {
        self.w as u64 * self.h as u64
    }

    pub fn contains(&self, x: u32, y: u32) -> bool {
        x >= self.x && y >= self.y && x < self.x + self.w && y < self.y + self.h
    }

    fn check_within(&self, img: &RgbImage) -> Result<(), StatsError> {
        let fits = self.w > 0
            && self.h > 0
            && (self.x as u64 + self.w as u64) <= img.width() as u64
            && (self.y as u64 + self.h as u64) <= img.height() as u64;
        if fits {
            Ok(())
        } else {
            Err(StatsError::RegionOutOfBounds {
                region: *self,
                width: img.width(),
                height: img.height(),
            })
        }
    }
}

/// Mean and spread of a sample.
///
/// `sum_sq_dev` is the unnormalized sum of squared deviations from the mean;
/// `variance` divides it by `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleStats {
    pub n: usize,
    pub mean: f64,
    pub sum_sq_dev: f64,
    pub variance: f64,
}

/// Two-pass mean and variance.
pub fn stats(values: &[f64]) -> Result<SampleStats, StatsError> {
    if values.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let n = values.len();
    let mean = neumaier_sum(values.iter().copied()) / n as f64;
    let sum_sq_dev = neumaier_sum(values.iter().map(|&x| (x - mean) * (x - mean)));
    Ok(SampleStats {
        n,
        mean,
        sum_sq_dev,
        variance: sum_sq_dev / n as f64,
    })
}

fn neumaier_sum(iter: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in iter {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Per-channel 256-bin counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RgbHistogram {
    pub bins: [Vec<u64>; 3],
}

impl RgbHistogram {
    fn zeroed() -> Self {
        Self {
            bins: [vec![0; 256], vec![0; 256], vec![0; 256]],
        }
    }

    pub fn total(&self) -> u64 {
        self.bins[0].iter().sum()
    }

    /// Population variance of one channel's intensities.
    pub fn channel_variance(&self, channel: usize) -> f64 {
        let mut n = 0u128;
        let mut s1 = 0u128;
        let mut s2 = 0u128;
        for (v, &c) in self.bins[channel].iter().enumerate() {
            let (v, c) = (v as u128, c as u128);
            n += c;
            s1 += c * v;
            s2 += c * v * v;
        }
        if n == 0 {
            return 0.0;
        }
        // n * sum(v^2) - (sum v)^2 is exact in integers
        (n * s2 - s1 * s1) as f64 / (n * n) as f64
    }

    /// Per-channel statistics over the binned intensities.
    pub fn channel_stats(&self, channel: usize) -> Result<SampleStats, StatsError> {
        let values: Vec<f64> = self.bins[channel]
            .iter()
            .enumerate()
            .flat_map(|(v, &c)| std::iter::repeat_n(v as f64, c as usize))
            .collect();
        stats(&values)
    }
}

pub fn histogram(img: &RgbImage, region: Rect) -> Result<RgbHistogram, StatsError> {
    region.check_within(img)?;
    let mut h = RgbHistogram::zeroed();
    for y in region.y..region.y + region.h {
        for x in region.x..region.x + region.w {
            let p = img.get(x, y);
            for (bins, v) in h.bins.iter_mut().zip(p) {
                bins[v as usize] += 1;
            }
        }
    }
    Ok(h)
}

/// Which colour variance is thresholded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VarianceMode {
    /// Mean over pixels of the variance among a pixel's R, G, B values.
    #[default]
    Chroma,
    /// Largest per-channel intensity variance.
    PerChannelMax,
    /// Average per-channel intensity variance.
    PerChannelMean,
}

impl VarianceMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            VarianceMode::Chroma => "chroma",
            VarianceMode::PerChannelMax => "per-channel-max",
            VarianceMode::PerChannelMean => "per-channel-mean",
        }
    }
}

impl std::str::FromStr for VarianceMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "chroma" => Ok(VarianceMode::Chroma),
            "per-channel-max" => Ok(VarianceMode::PerChannelMax),
            "per-channel-mean" => Ok(VarianceMode::PerChannelMean),
            other => Err(format!("unknown variance mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColourVarianceScore {
    pub value: f64,
    pub mode: VarianceMode,
}

pub fn colour_variance(
    img: &RgbImage,
    region: Rect,
    mode: VarianceMode,
) -> Result<ColourVarianceScore, StatsError> {
    let value = match mode {
        VarianceMode::Chroma => {
            region.check_within(img)?;
            chroma_variance(img, region)
        }
        VarianceMode::PerChannelMax | VarianceMode::PerChannelMean => {
            let h = histogram(img, region)?;
            let v = [0, 1, 2].map(|c| h.channel_variance(c));
            if mode == VarianceMode::PerChannelMax {
                v.into_iter().fold(0.0, f64::max)
            } else {
                (v[0] + v[1] + v[2]) / 3.0
            }
        }
    };
    Ok(ColourVarianceScore { value, mode })
}

// Per pixel, var(r, g, b) = (3 * (r^2 + g^2 + b^2) - (r + g + b)^2) / 9, so the
// region mean is an integer sum divided once at the end.
fn chroma_variance(img: &RgbImage, region: Rect) -> f64 {
    let mut acc = 0u64;
    for y in region.y..region.y + region.h {
        for x in region.x..region.x + region.w {
            let [r, g, b] = img.get(x, y).map(|c| c as u64);
            acc += 3 * (r * r + g * g + b * b) - (r + g + b) * (r + g + b);
        }
    }
    acc as f64 / (9 * region.area()) as f64
}
