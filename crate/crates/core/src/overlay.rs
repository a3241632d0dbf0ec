//! Grid and label tint drawn over the working image.

use thiserror::Error;

use crate::grid::{CellLabel, CellLabelGrid, GridSpec};
use crate::imgcore::RgbImage;

pub const GRID_COLOUR: [u8; 3] = [255, 255, 0];
pub const QUARTZ_TINT: [u8; 3] = [0, 0, 255];
pub const ACCESSORY_TINT: [u8; 3] = [255, 0, 0];

#[derive(Debug, Error, PartialEq)]
pub enum OverlayError {
    #[error("label grid {0}x{1} does not fit a {2}x{3} image")]
    DimensionMismatch(u32, u32, u32, u32),
}

fn blend(px: [u8; 3], tint: [u8; 3]) -> [u8; 3] {
    std::array::from_fn(|i| (px[i] as u16 + tint[i] as u16).div_ceil(2) as u8)
}

/// Tints Quartz cells blue and Accessory cells red (50% blend), then draws
/// the interior cell boundaries. The outer frame is left alone.
pub fn render_overlay(img: &RgbImage, cells: &CellLabelGrid) -> Result<RgbImage, OverlayError> {
    let mismatch =
        || OverlayError::DimensionMismatch(cells.cells_x, cells.cells_y, img.width(), img.height());
    if cells.labels.len() != (cells.cells_x * cells.cells_y) as usize {
        return Err(mismatch());
    }
    let grid = GridSpec::new(img.width(), img.height(), cells.cells_x, cells.cells_y)
        .map_err(|_| mismatch())?;
    let mut out = img.clone();
    for cy in 0..grid.cells_y {
        for cx in 0..grid.cells_x {
            let tint = match cells.label(cx, cy) {
                CellLabel::Quartz => QUARTZ_TINT,
                CellLabel::Accessory => ACCESSORY_TINT,
                CellLabel::Other => continue,
            };
            let r = grid.cell_rect(cx, cy);
            for y in r.y..r.y + r.h {
                for x in r.x..r.x + r.w {
                    out.put(x, y, blend(img.get(x, y), tint));
                }
            }
        }
    }
    for cx in 1..grid.cells_x {
        let x = grid.cell_rect(cx, 0).x;
        for y in 0..img.height() {
            out.put(x, y, GRID_COLOUR);
        }
    }
    for cy in 1..grid.cells_y {
        let y = grid.cell_rect(0, cy).y;
        for x in 0..img.width() {
            out.put(x, y, GRID_COLOUR);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(cx: u32, cy: u32, f: impl Fn(usize) -> CellLabel) -> CellLabelGrid {
        let n = (cx * cy) as usize;
        CellLabelGrid {
            cells_x: cx,
            cells_y: cy,
            labels: (0..n).map(f).collect(),
            edge_fraction: vec![0.0; n],
            colour_variance: vec![0.0; n],
        }
    }

    #[test]
    fn all_other_only_adds_grid_lines() {
        let img = RgbImage::filled(512, 384, [10, 20, 30]).unwrap();
        let out = render_overlay(&img, &labels(8, 8, |_| CellLabel::Other)).unwrap();
        for y in 0..384 {
            for x in 0..512 {
                let on_line = (x % 64 == 0 && x > 0) || (y % 48 == 0 && y > 0);
                let want = if on_line { GRID_COLOUR } else { [10, 20, 30] };
                assert_eq!(out.get(x, y), want, "({x},{y})");
            }
        }
    }

    #[test]
    fn tint_area_matches_cell_count() {
        let img = RgbImage::filled(512, 384, [100, 100, 100]).unwrap();
        let grid = labels(8, 8, |i| match i % 3 {
            0 => CellLabel::Quartz,
            1 => CellLabel::Accessory,
            _ => CellLabel::Other,
        });
        let out = render_overlay(&img, &grid).unwrap();
        let count = |px: [u8; 3]| out.pixels().iter().filter(|&&p| p == px).count();
        let q_cells = grid
            .labels
            .iter()
            .filter(|&&l| l == CellLabel::Quartz)
            .count();
        let a_cells = grid
            .labels
            .iter()
            .filter(|&&l| l == CellLabel::Accessory)
            .count();
        // each cell loses its top row and left column to grid lines unless on the frame
        let interior = |i: usize| {
            let (cx, cy) = (i % 8, i / 8);
            (64 - (cx > 0) as usize) * (48 - (cy > 0) as usize)
        };
        let q_px: usize = (0..64)
            .filter(|&i| grid.labels[i] == CellLabel::Quartz)
            .map(interior)
            .sum();
        let a_px: usize = (0..64)
            .filter(|&i| grid.labels[i] == CellLabel::Accessory)
            .map(interior)
            .sum();
        assert!(q_cells > 0 && a_cells > 0);
        assert_eq!(count(blend([100; 3], QUARTZ_TINT)), q_px);
        assert_eq!(count(blend([100; 3], ACCESSORY_TINT)), a_px);
    }

    #[test]
    fn mismatched_grid_rejected() {
        let img = RgbImage::filled(4, 4, [0; 3]).unwrap();
        assert!(render_overlay(&img, &labels(8, 8, |_| CellLabel::Other)).is_err());
        let mut bad = labels(2, 2, |_| CellLabel::Other);
        bad.labels.pop();
        assert!(render_overlay(&img, &bad).is_err());
    }
}
