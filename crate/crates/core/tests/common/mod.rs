//! Slow, obviously-correct reference implementations for integration tests.
#![allow(dead_code)]

use thinsection::imgcore::GrayImage;

fn clamp_get(data: &[f64], w: i64, h: i64, x: i64, y: i64) -> f64 {
    data[(y.clamp(0, h - 1) * w + x.clamp(0, w - 1)) as usize]
}

/// Full 2-D Gaussian convolution with replicate borders.
pub fn naive_blur(img: &GrayImage, sigma: f64) -> Vec<f64> {
    let (w, h) = (img.width() as i64, img.height() as i64);
    let src: Vec<f64> = img.pixels().iter().map(|&v| v as f64).collect();
    let r = (3.0 * sigma).ceil() as i64;
    let weight = |dx: i64, dy: i64| (-((dx * dx + dy * dy) as f64) / (2.0 * sigma * sigma)).exp();
    let mut total = 0.0;
    for dy in -r..=r {
        for dx in -r..=r {
            total += weight(dx, dy);
        }
    }
    let mut out = vec![0.0; src.len()];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for dy in -r..=r {
                for dx in -r..=r {
                    acc += weight(dx, dy) / total * clamp_get(&src, w, h, x + dx, y + dy);
                }
            }
            out[(y * w + x) as usize] = acc;
        }
    }
    out
}

const SOBEL_X: [[f64; 3]; 3] = [[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]];
const SOBEL_Y: [[f64; 3]; 3] = [[-1.0, -2.0, -1.0], [0.0, 0.0, 0.0], [1.0, 2.0, 1.0]];

/// Gradient magnitude and direction bin (0..4 for 0/45/90/135 degrees).
pub fn naive_gradients(blur: &[f64], w: i64, h: i64) -> (Vec<f64>, Vec<usize>) {
    let mut mag = Vec::new();
    let mut bin = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let (mut gx, mut gy) = (0.0, 0.0);
            for (ky, (rx, ry)) in SOBEL_X.iter().zip(&SOBEL_Y).enumerate() {
                for kx in 0..3 {
                    let v = clamp_get(blur, w, h, x + kx as i64 - 1, y + ky as i64 - 1);
                    gx += rx[kx] * v;
                    gy += ry[kx] * v;
                }
            }
            mag.push((gx * gx + gy * gy).sqrt());
            let deg = gy.atan2(gx).to_degrees().rem_euclid(180.0);
            bin.push(((deg + 22.5) / 45.0).floor() as usize % 4);
        }
    }
    (mag, bin)
}

/// Every pixel compared with both neighbours along its direction bin.
pub fn naive_nms(mag: &[f64], bin: &[usize], w: i64, h: i64) -> Vec<f64> {
    let mut out = vec![0.0; mag.len()];
    for y in 0..h {
        for x in 0..w {
            let i = (y * w + x) as usize;
            let theta = (bin[i] as f64 * 45.0).to_radians();
            let (dx, dy) = (theta.cos().round() as i64, theta.sin().round() as i64);
            let fwd = clamp_get(mag, w, h, x + dx, y + dy);
            let back = clamp_get(mag, w, h, x - dx, y - dy);
            if mag[i] > 0.0 && mag[i] >= fwd && mag[i] >= back {
                out[i] = mag[i];
            }
        }
    }
    out
}

/// Grows the strong set by repeated sweeps until nothing changes.
pub fn naive_hysteresis(s: &[f64], w: i64, h: i64, t_high: f64, low_ratio: f64) -> Vec<bool> {
    let max = s.iter().cloned().fold(0.0, f64::max);
    if max <= 0.0 {
        return vec![false; s.len()];
    }
    let strong = t_high * max;
    let weak = low_ratio * strong;
    let mut on: Vec<bool> = s.iter().map(|&v| v >= strong).collect();
    loop {
        let mut changed = false;
        for y in 0..h {
            for x in 0..w {
                let i = (y * w + x) as usize;
                if on[i] || s[i] < weak {
                    continue;
                }
                let touches = (-1..=1).any(|dy: i64| {
                    (-1..=1).any(|dx: i64| {
                        let (nx, ny) = (x + dx, y + dy);
                        nx >= 0 && ny >= 0 && nx < w && ny < h && on[(ny * w + nx) as usize]
                    })
                });
                if touches {
                    on[i] = true;
                    changed = true;
                }
            }
        }
        if !changed {
            return on;
        }
    }
}

pub fn naive_canny(img: &GrayImage, sigma: f64, t_high: f64, low_ratio: f64) -> Vec<bool> {
    let (w, h) = (img.width() as i64, img.height() as i64);
    let blur = naive_blur(img, sigma);
    let (mag, bin) = naive_gradients(&blur, w, h);
    let thin = naive_nms(&mag, &bin, w, h);
    naive_hysteresis(&thin, w, h, t_high, low_ratio)
}

/// Variance of the three channel values of one pixel, as an exact fraction
/// numerator over 9.
pub fn chroma_numerator(p: [u8; 3]) -> i64 {
    let s: i64 = p.iter().map(|&c| c as i64).sum();
    let sq: i64 = p.iter().map(|&c| (c as i64) * (c as i64)).sum();
    3 * sq - s * s
}
