//! Single-image analysis and its printable trace.

use serde::Serialize;

use crate::edge::{canny, EdgeMap};
use crate::grid::{
    cell_features, label_cells, make_grid, CellLabelGrid, GridError, GridSpec, MineralPercentages,
    ParamSet,
};
use crate::imgcore::{to_grayscale, RgbImage};
use crate::petro::{classify_rock, RockDecision};

/// Everything computed for one working-resolution image.
#[derive(Debug, Clone, Serialize)]
pub struct Analysis {
    pub params: ParamSet,
    pub grid: GridSpec,
    #[serde(skip)]
    pub edges: EdgeMap,
    pub cells: CellLabelGrid,
    pub percentages: MineralPercentages,
    pub decision: RockDecision,
}

pub fn analyze(rgb: &RgbImage, p: &ParamSet) -> Result<Analysis, GridError> {
    p.validate()?;
    let grid = make_grid(rgb.width(), rgb.height(), p.grid)?;
    let edges = canny(&to_grayscale(rgb), &p.canny)?;
    let features = cell_features(rgb, &edges, grid, p.variance_mode)?;
    let (cells, percentages) = label_cells(&features, p);
    let decision = classify_rock(percentages.quartz_pct(), percentages.accessory_pct())
        .expect("cell fractions lie in [0, 100]");
    Ok(Analysis {
        params: *p,
        grid,
        edges,
        cells,
        percentages,
        decision,
    })
}

impl Analysis {
    /// Tab-separated report, one field per line, ending with the verdict.
    pub fn trace(&self, source: &str) -> String {
        let g = &self.grid;
        let (cw, ch) = g.base_cell_size();
        let n = self.percentages.total_cells;
        let mut out = String::new();
        let mut line = |s: String| {
            out.push_str(&s);
            out.push('\n');
        };
        line(format!("Opening {source}"));
        line(format!("Params\t= {}x{}", g.cells_x, g.cells_y));
        line(format!(
            "Image resolution\t{} x {}",
            g.image_width, g.image_height
        ));
        line(format!("Cell resolution\t{cw}x{ch}"));
        line(format!("Number of cells\t{n}"));
        line(format!("t nonzero\t{}", self.params.t_nonzero));
        line(format!(
            "Accessory Minerals\t{}/{n} ({:.6})",
            self.percentages.accessory_cells, self.percentages.accessory_fraction
        ));
        line(format!("t variance\t{}", self.params.t_variance));
        line(format!(
            "Quartz\t{}/{n} ({:.6})",
            self.percentages.quartz_cells, self.percentages.quartz_fraction
        ));
        line(self.decision.verdict_line());
        out
    }
}
