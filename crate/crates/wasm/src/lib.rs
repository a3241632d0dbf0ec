//! Browser bindings: synthesize a section, show its edges, classify it.
//!
//! Images cross the boundary as RGBA byte arrays (what `ImageData` holds).

use std::collections::BTreeMap;

use wasm_bindgen::prelude::*;

use thinsection::colorstats::VarianceMode;
use thinsection::edge::{canny, CannyParams};
use thinsection::grid::ParamSet;
use thinsection::imgcore::{to_grayscale, RgbImage};
use thinsection::overlay::render_overlay;
use thinsection::petro::Rock;
use thinsection::synth::{diorite_example_layout, generate, generate_samples};
use thinsection::trace::analyze;

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

fn rgb_from(rgba: &[u8], width: u32, height: u32) -> Result<RgbImage, JsError> {
    RgbImage::from_rgba(width, height, rgba).map_err(js_err)
}

/// A seeded 512x384 synthetic section of `rock`, or the 8x8 diorite sample
/// when `rock` is `"diorite-example"`.
#[wasm_bindgen]
pub fn synth_sample(rock: &str, seed: u32) -> Result<Vec<u8>, JsError> {
    let image = if rock == "diorite-example" {
        generate(&diorite_example_layout(), 8, seed as u64)
            .map_err(js_err)?
            .image
    } else {
        let rock: Rock = rock.parse().map_err(|e: String| JsError::new(&e))?;
        let counts = BTreeMap::from([(rock, 1)]);
        let mut samples = generate_samples(&counts, seed as u64).map_err(js_err)?;
        samples.remove(0).sample.image
    };
    Ok(image.to_rgba())
}

/// Canny edges as an opaque black/white RGBA image.
#[wasm_bindgen]
pub fn edge_map(rgba: &[u8], width: u32, height: u32, canny_high: f64) -> Result<Vec<u8>, JsError> {
    let rgb = rgb_from(rgba, width, height)?;
    let edges = canny(&to_grayscale(&rgb), &CannyParams::with_high(canny_high)).map_err(js_err)?;
    Ok(edges
        .mask
        .iter()
        .flat_map(|&on| {
            if on {
                [255, 255, 255, 255]
            } else {
                [0, 0, 0, 255]
            }
        })
        .collect())
}

#[wasm_bindgen]
pub struct Classification {
    overlay: Vec<u8>,
    trace: String,
    summary: String,
}

#[wasm_bindgen]
impl Classification {
    /// Tinted overlay as RGBA, same size as the input.
    #[wasm_bindgen(getter)]
    pub fn overlay(&self) -> Vec<u8> {
        self.overlay.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn trace(&self) -> String {
        self.trace.clone()
    }

    /// JSON with cell labels, percentages and the rock decision.
    #[wasm_bindgen(getter)]
    pub fn summary(&self) -> String {
        self.summary.clone()
    }
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn classify(
    rgba: &[u8],
    width: u32,
    height: u32,
    grid: u32,
    t_nonzero: f64,
    t_variance: f64,
    canny_high: f64,
    variance_mode: &str,
) -> Result<Classification, JsError> {
    let rgb = rgb_from(rgba, width, height)?;
    let params = ParamSet {
        grid,
        t_nonzero,
        t_variance,
        canny: CannyParams::with_high(canny_high),
        variance_mode: variance_mode
            .parse::<VarianceMode>()
            .map_err(|e| JsError::new(&e))?,
    };
    let analysis = analyze(&rgb, &params).map_err(js_err)?;
    let overlay = render_overlay(&rgb, &analysis.cells).map_err(js_err)?;
    Ok(Classification {
        overlay: overlay.to_rgba(),
        trace: analysis.trace("canvas"),
        summary: serde_json::to_string(&analysis).map_err(js_err)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diorite_example_round_trip() {
        let rgba = synth_sample("diorite-example", 1).unwrap_or_else(|_| panic!("synth"));
        assert_eq!(rgba.len(), 512 * 384 * 4);
        let c = classify(&rgba, 512, 384, 8, 0.01, 50.0, 0.02, "chroma")
            .unwrap_or_else(|_| panic!("classify"));
        assert!(c.trace().ends_with("It's a Diorite!\n"));
        assert_eq!(c.overlay().len(), rgba.len());
        let summary: serde_json::Value = serde_json::from_str(&c.summary()).unwrap();
        assert_eq!(summary["percentages"]["accessory_cells"], 17);
        let edges = edge_map(&rgba, 512, 384, 0.02).unwrap_or_else(|_| panic!("edges"));
        assert!(edges.chunks(4).any(|p| p[0] == 255));
    }
}
