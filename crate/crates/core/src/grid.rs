//! Grid partitioning, per-cell labelling and the image-level mineral tally.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::colorstats::{colour_variance, Rect, VarianceMode};
use crate::edge::{canny, CannyParams, EdgeError, EdgeMap};
use crate::imgcore::{GrayImage, RgbImage};

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("a {cells}-cell grid does not fit a {width}x{height} image")]
    GridTooFine { width: u32, height: u32, cells: u32 },
    #[error("image dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(u32, u32, u32, u32),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Edge(#[from] EdgeError),
}

/// Tiling of an image into `cells_x` by `cells_y` rectangles. The last
/// column and row absorb any remainder, so every pixel lands in one cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub image_width: u32,
    pub image_height: u32,
    pub cells_x: u32,
    pub cells_y: u32,
}

impl GridSpec {
    pub fn new(width: u32, height: u32, cells_x: u32, cells_y: u32) -> Result<Self, GridError> {
        if cells_x == 0 || cells_y == 0 || cells_x > width || cells_y > height {
            return Err(GridError::GridTooFine {
                width,
                height,
                cells: cells_x.max(cells_y),
            });
        }
        Ok(Self {
            image_width: width,
            image_height: height,
            cells_x,
            cells_y,
        })
    }

    pub fn cell_count(&self) -> usize {
        self.cells_x as usize * self.cells_y as usize
    }

    /// Size of a regular (non-remainder) cell.
    pub fn base_cell_size(&self) -> (u32, u32) {
        (
            self.image_width / self.cells_x,
            self.image_height / self.cells_y,
        )
    }

    pub fn cell_rect(&self, cx: u32, cy: u32) -> Rect {
        let (bw, bh) = self.base_cell_size();
        let x = cx * bw;
        let y = cy * bh;
        let w = if cx + 1 == self.cells_x {
            self.image_width - x
        } else {
            bw
        };
        let h = if cy + 1 == self.cells_y {
            self.image_height - y
        } else {
            bh
        };
        Rect::new(x, y, w, h)
    }

    /// Cell rectangles in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = Rect> + '_ {
        (0..self.cells_y)
            .flat_map(move |cy| (0..self.cells_x).map(move |cx| self.cell_rect(cx, cy)))
    }

    pub fn cell_of(&self, x: u32, y: u32) -> (u32, u32) {
        let (bw, bh) = self.base_cell_size();
        (
            (x / bw).min(self.cells_x - 1),
            (y / bh).min(self.cells_y - 1),
        )
    }
}

/// Square `g` x `g` grid.
pub fn make_grid(width: u32, height: u32, g: u32) -> Result<GridSpec, GridError> {
    if g == 0 || g > width.min(height) {
        return Err(GridError::GridTooFine {
            width,
            height,
            cells: g,
        });
    }
    GridSpec::new(width, height, g, g)
}

/// One point of the parameter space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamSet {
    /// Cells per side.
    pub grid: u32,
    /// Largest edge-pixel fraction a quartz cell may have.
    pub t_nonzero: f64,
    /// Smallest colour-variance score that makes a cell accessory (exclusive).
    pub t_variance: f64,
    pub canny: CannyParams,
    #[serde(default)]
    pub variance_mode: VarianceMode,
}

impl Default for ParamSet {
    fn default() -> Self {
        Self {
            grid: 16,
            t_nonzero: 0.01,
            t_variance: 200.0,
            canny: CannyParams::with_high(0.02),
            variance_mode: VarianceMode::Chroma,
        }
    }
}

impl ParamSet {
    pub fn validate(&self) -> Result<(), GridError> {
        if self.grid == 0 {
            return Err(GridError::InvalidParams("grid must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.t_nonzero) {
            return Err(GridError::InvalidParams(format!(
                "t_nonzero must lie in [0, 1], got {}",
                self.t_nonzero
            )));
        }
        if self.t_variance.is_nan() || self.t_variance < 0.0 {
            return Err(GridError::InvalidParams(format!(
                "t_variance must be >= 0, got {}",
                self.t_variance
            )));
        }
        self.canny.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellLabel {
    #[serde(rename = "Q")]
    Quartz,
    #[serde(rename = "A")]
    Accessory,
    #[serde(rename = "O")]
    Other,
}

impl CellLabel {
    pub fn code(self) -> char {
        match self {
            CellLabel::Quartz => 'Q',
            CellLabel::Accessory => 'A',
            CellLabel::Other => 'O',
        }
    }
}

/// Colour wins over edges: a colourful cell is never quartz.
pub fn classify_cell(edge_fraction: f64, colour_variance: f64, p: &ParamSet) -> CellLabel {
    if colour_variance > p.t_variance {
        CellLabel::Accessory
    } else if edge_fraction <= p.t_nonzero {
        CellLabel::Quartz
    } else {
        CellLabel::Other
    }
}

/// Threshold-independent per-cell measurements.
#[derive(Debug, Clone, PartialEq)]
pub struct CellFeatures {
    pub grid: GridSpec,
    pub edge_fraction: Vec<f64>,
    pub colour_variance: Vec<f64>,
}

pub fn cell_features(
    rgb: &RgbImage,
    edges: &EdgeMap,
    grid: GridSpec,
    mode: VarianceMode,
) -> Result<CellFeatures, GridError> {
    if (rgb.width(), rgb.height()) != (edges.width, edges.height) {
        return Err(GridError::DimensionMismatch(
            rgb.width(),
            rgb.height(),
            edges.width,
            edges.height,
        ));
    }
    if (grid.image_width, grid.image_height) != (rgb.width(), rgb.height()) {
        return Err(GridError::DimensionMismatch(
            grid.image_width,
            grid.image_height,
            rgb.width(),
            rgb.height(),
        ));
    }
    let mut edge_fraction = Vec::with_capacity(grid.cell_count());
    let mut variance = Vec::with_capacity(grid.cell_count());
    for r in grid.cells() {
        let mut on = 0u64;
        for y in r.y..r.y + r.h {
            let row = y as usize * edges.width as usize;
            on += edges.mask[row + r.x as usize..row + (r.x + r.w) as usize]
                .iter()
                .filter(|&&m| m)
                .count() as u64;
        }
        edge_fraction.push(on as f64 / r.area() as f64);
        // rectangles come from the grid and are always in bounds
        variance.push(
            colour_variance(rgb, r, mode)
                .expect("grid cell within image")
                .value,
        );
    }
    Ok(CellFeatures {
        grid,
        edge_fraction,
        colour_variance: variance,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellLabelGrid {
    pub cells_x: u32,
    pub cells_y: u32,
    pub labels: Vec<CellLabel>,
    pub edge_fraction: Vec<f64>,
    pub colour_variance: Vec<f64>,
}

impl CellLabelGrid {
    pub fn label(&self, cx: u32, cy: u32) -> CellLabel {
        self.labels[(cy * self.cells_x + cx) as usize]
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("label grid serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MineralPercentages {
    pub quartz_fraction: f64,
    pub accessory_fraction: f64,
    pub quartz_cells: usize,
    pub accessory_cells: usize,
    pub total_cells: usize,
}

impl MineralPercentages {
    pub fn from_labels(labels: &[CellLabel]) -> Self {
        let total = labels.len();
        let q = labels.iter().filter(|&&l| l == CellLabel::Quartz).count();
        let a = labels
            .iter()
            .filter(|&&l| l == CellLabel::Accessory)
            .count();
        Self {
            quartz_fraction: q as f64 / total as f64,
            accessory_fraction: a as f64 / total as f64,
            quartz_cells: q,
            accessory_cells: a,
            total_cells: total,
        }
    }

    pub fn quartz_pct(&self) -> f64 {
        100.0 * self.quartz_fraction
    }

    pub fn accessory_pct(&self) -> f64 {
        100.0 * self.accessory_fraction
    }
}

pub fn label_cells(features: &CellFeatures, p: &ParamSet) -> (CellLabelGrid, MineralPercentages) {
    let labels: Vec<CellLabel> = features
        .edge_fraction
        .iter()
        .zip(&features.colour_variance)
        .map(|(&e, &v)| classify_cell(e, v, p))
        .collect();
    let pct = MineralPercentages::from_labels(&labels);
    (
        CellLabelGrid {
            cells_x: features.grid.cells_x,
            cells_y: features.grid.cells_y,
            labels,
            edge_fraction: features.edge_fraction.clone(),
            colour_variance: features.colour_variance.clone(),
        },
        pct,
    )
}

/// Labels every cell given a precomputed edge map.
pub fn classify_with_edges(
    rgb: &RgbImage,
    edges: &EdgeMap,
    p: &ParamSet,
) -> Result<(CellLabelGrid, MineralPercentages), GridError> {
    p.validate()?;
    let grid = make_grid(rgb.width(), rgb.height(), p.grid)?;
    let features = cell_features(rgb, edges, grid, p.variance_mode)?;
    Ok(label_cells(&features, p))
}

/// Runs Canny on the whole gray image, then labels and tallies the cells.
pub fn classify_image(
    rgb: &RgbImage,
    gray: &GrayImage,
    p: &ParamSet,
) -> Result<(CellLabelGrid, MineralPercentages), GridError> {
    if (rgb.width(), rgb.height()) != (gray.width(), gray.height()) {
        return Err(GridError::DimensionMismatch(
            rgb.width(),
            rgb.height(),
            gray.width(),
            gray.height(),
        ));
    }
    p.validate()?;
    let edges = canny(gray, &p.canny)?;
    classify_with_edges(rgb, &edges, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imgcore::to_grayscale;
    use proptest::prelude::*;

    fn params(t_nonzero: f64, t_variance: f64) -> ParamSet {
        ParamSet {
            grid: 8,
            t_nonzero,
            t_variance,
            ..ParamSet::default()
        }
    }

    #[test]
    fn working_grids() {
        let g8 = make_grid(512, 384, 8).unwrap();
        assert_eq!(g8.cell_count(), 64);
        assert!(g8.cells().all(|r| (r.w, r.h) == (64, 48)));
        let g16 = make_grid(512, 384, 16).unwrap();
        assert_eq!(g16.cell_count(), 256);
        assert!(g16.cells().all(|r| (r.w, r.h) == (32, 24)));
    }

    #[test]
    fn unit_cells() {
        let g = make_grid(4, 4, 4).unwrap();
        assert_eq!(g.cell_count(), 16);
        assert!(g.cells().all(|r| r.area() == 1));
    }

    #[test]
    fn too_fine() {
        assert!(matches!(
            make_grid(10, 3, 4),
            Err(GridError::GridTooFine { .. })
        ));
        assert!(matches!(
            make_grid(10, 10, 0),
            Err(GridError::GridTooFine { .. })
        ));
    }

    #[test]
    fn remainder_goes_to_last_cells() {
        let g = make_grid(10, 7, 3).unwrap();
        assert_eq!(g.cell_rect(0, 0), Rect::new(0, 0, 3, 2));
        assert_eq!(g.cell_rect(2, 2), Rect::new(6, 4, 4, 3));
    }

    #[test]
    fn cell_rule() {
        assert_eq!(
            classify_cell(0.0, 0.0, &params(0.01, 50.0)),
            CellLabel::Quartz
        );
        assert_eq!(
            classify_cell(0.0, 14450.0, &params(0.01, 50.0)),
            CellLabel::Accessory
        );
        assert_eq!(
            classify_cell(0.5, 10.0, &params(0.01, 50.0)),
            CellLabel::Other
        );
        // boundaries: quartz test is inclusive, colour test strict
        assert_eq!(
            classify_cell(0.01, 50.0, &params(0.01, 50.0)),
            CellLabel::Quartz
        );
    }

    #[test]
    fn constant_gray_image_is_all_quartz() {
        let rgb = RgbImage::filled(64, 48, [120; 3]).unwrap();
        let (cells, pct) = classify_image(&rgb, &to_grayscale(&rgb), &params(0.01, 50.0)).unwrap();
        assert_eq!(pct.quartz_fraction, 1.0);
        assert_eq!(pct.accessory_fraction, 0.0);
        assert!(cells.labels.iter().all(|&l| l == CellLabel::Quartz));
    }

    #[test]
    fn mismatched_rasters() {
        let rgb = RgbImage::filled(8, 8, [0; 3]).unwrap();
        let gray = GrayImage::filled(8, 9, 0).unwrap();
        assert!(matches!(
            classify_image(&rgb, &gray, &params(0.01, 50.0)),
            Err(GridError::DimensionMismatch(..))
        ));
    }

    #[test]
    fn colourful_cells_counted() {
        // 8x8 grid of 4x4 cells; paint 17 cells red
        let mut rgb = RgbImage::filled(32, 32, [100; 3]).unwrap();
        let g = make_grid(32, 32, 8).unwrap();
        let painted: Vec<Rect> = g.cells().take(17).collect();
        for r in &painted {
            for y in r.y..r.y + r.h {
                for x in r.x..r.x + r.w {
                    rgb.put(x, y, [200, 20, 20]);
                }
            }
        }
        let edges = EdgeMap::empty(32, 32);
        let (_, pct) = classify_with_edges(&rgb, &edges, &params(0.01, 50.0)).unwrap();
        assert_eq!(
            (pct.accessory_cells, pct.quartz_cells, pct.total_cells),
            (17, 47, 64)
        );
        assert_eq!(pct.accessory_fraction, 17.0 / 64.0);
    }

    #[test]
    fn json_uses_label_codes() {
        let f = CellFeatures {
            grid: make_grid(2, 2, 1).unwrap(),
            edge_fraction: vec![0.5],
            colour_variance: vec![0.0],
        };
        let (cells, _) = label_cells(&f, &params(0.01, 50.0));
        let v: serde_json::Value = serde_json::from_str(&cells.to_json()).unwrap();
        assert_eq!(v["labels"][0], "O");
        assert_eq!(v["cells_x"], 1);
    }

    fn edge_map_strategy() -> impl Strategy<Value = EdgeMap> {
        (1u32..40, 1u32..40).prop_flat_map(|(w, h)| {
            proptest::collection::vec(any::<bool>(), (w * h) as usize).prop_map(move |mask| {
                EdgeMap {
                    width: w,
                    height: h,
                    mask,
                }
            })
        })
    }

    proptest! {
        #[test]
        fn grid_tiles_exactly(w in 1u32..300, h in 1u32..300, g in 1u32..40) {
            prop_assume!(g <= w.min(h));
            let grid = make_grid(w, h, g).unwrap();
            let mut hits = vec![0u8; (w * h) as usize];
            for r in grid.cells() {
                for y in r.y..r.y + r.h {
                    for x in r.x..r.x + r.w {
                        hits[(y * w + x) as usize] += 1;
                    }
                }
            }
            prop_assert!(hits.iter().all(|&c| c == 1));
            let (bw, bh) = grid.base_cell_size();
            prop_assert_eq!((bw, bh), (w / g, h / g));
            for px in [(0, 0), (w - 1, h - 1), (w / 2, h / 3)] {
                let (cx, cy) = grid.cell_of(px.0, px.1);
                prop_assert!(grid.cell_rect(cx, cy).contains(px.0, px.1));
            }
        }

        #[test]
        fn weighted_edge_fractions_sum_to_global(edges in edge_map_strategy(), g in 1u32..10) {
            prop_assume!(g <= edges.width.min(edges.height));
            let rgb = RgbImage::filled(edges.width, edges.height, [0; 3]).unwrap();
            let grid = make_grid(edges.width, edges.height, g).unwrap();
            let f = cell_features(&rgb, &edges, grid, VarianceMode::Chroma).unwrap();
            let weighted: f64 = grid.cells().zip(&f.edge_fraction).map(|(r, e)| (e * r.area() as f64).round()).sum();
            prop_assert_eq!(weighted as usize, edges.count());
        }

        #[test]
        fn thresholds_are_monotone(
            e in proptest::collection::vec(0f64..1.0, 1..50),
            t1 in 0f64..1.0, t2 in 0f64..1.0,
            v1 in 0f64..500.0, v2 in 0f64..500.0,
        ) {
            let grid = GridSpec::new(e.len() as u32, 1, e.len() as u32, 1).unwrap();
            let var: Vec<f64> = e.iter().map(|x| x * 400.0).collect();
            let f = CellFeatures { grid, edge_fraction: e.clone(), colour_variance: var };
            let (lo_t, hi_t) = (t1.min(t2), t1.max(t2));
            let (lo_v, hi_v) = (v1.min(v2), v1.max(v2));
            let q_lo = label_cells(&f, &params(lo_t, lo_v)).1;
            let q_hi = label_cells(&f, &params(hi_t, lo_v)).1;
            prop_assert!(q_lo.quartz_fraction <= q_hi.quartz_fraction);
            let a_lo = label_cells(&f, &params(lo_t, lo_v)).1;
            let a_hi = label_cells(&f, &params(lo_t, hi_v)).1;
            prop_assert!(a_lo.accessory_fraction >= a_hi.accessory_fraction);
            prop_assert!(q_lo.quartz_cells + q_lo.accessory_cells <= q_lo.total_cells);
            let none = label_cells(&f, &params(lo_t, f64::INFINITY)).1;
            prop_assert_eq!(none.accessory_cells, 0);
            let all = label_cells(&f, &params(1.0, f64::INFINITY)).1;
            prop_assert_eq!(all.quartz_cells, all.total_cells);
        }
    }
}
