//! Deterministic synthetic thin sections with exact per-cell ground truth.
//!
//! Quartz renders as a near-constant, nearly colourless matrix; accessory
//! grains as saturated colour; feldspar grains as gray lamellar stripes.
//! Non-quartz grains are drawn inset from their cell-aligned bounds by
//! [`GRAIN_INSET`] pixels of matrix, so grain boundaries (and the edges they
//! produce) fall inside the grain's own cells.
//!
//! Noise comes from ChaCha8 seeded with the sample's 64-bit seed and is drawn
//! in row-major pixel order, three draws per pixel.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{make_grid, CellLabel, GridError, GridSpec};
use crate::imgcore::{RgbImage, WORKING_HEIGHT, WORKING_WIDTH};
use crate::petro::{Rock, QAPF_TABLE};

pub const GRAIN_INSET: u32 = 3;
pub const QUARTZ_COLOUR: [u8; 3] = [210, 209, 206];
pub const FELDSPAR_GRAY: u8 = 140;
pub const STRIPE_PERIOD: u32 = 6;
pub const STRIPE_AMPLITUDE: u8 = 60;

/// Hornblende green, biotite brown, garnet red, tourmaline blue, epidote olive.
pub const ACCESSORY_PALETTE: [[u8; 3]; 5] = [
    [40, 120, 40],
    [150, 70, 30],
    [170, 30, 60],
    [40, 60, 150],
    [140, 150, 30],
];

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("regions do not tile the {cells}x{cells} grid: {0}", cells = .1)]
    InvalidLayout(String, u32),
    #[error(
        "quartz {q_pct:.3}% / accessory {a_pct:.3}% matches {matches:?}; need exactly one rock"
    )]
    AmbiguousTruth {
        q_pct: f64,
        a_pct: f64,
        matches: Vec<Rock>,
    },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegionKind {
    QuartzLike,
    AccessoryLike,
    FeldsparLike,
}

impl RegionKind {
    pub fn cell_label(self) -> CellLabel {
        match self {
            RegionKind::QuartzLike => CellLabel::Quartz,
            RegionKind::AccessoryLike => CellLabel::Accessory,
            RegionKind::FeldsparLike => CellLabel::Other,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StripeAxis {
    /// Bands run left to right (intensity varies with y).
    #[default]
    Horizontal,
    Vertical,
}

/// Rectangle in cell units of the declared grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellRect {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSpec {
    pub kind: RegionKind,
    pub cells: CellRect,
    /// Defaults: quartz matrix colour, palette colour, or feldspar gray.
    #[serde(default)]
    pub base_colour: Option<[u8; 3]>,
    /// Uniform noise half-width in gray levels.
    #[serde(default)]
    pub noise: Option<u8>,
    #[serde(default)]
    pub stripe_period: Option<u32>,
    #[serde(default)]
    pub stripe_axis: StripeAxis,
}

impl RegionSpec {
    pub fn new(kind: RegionKind, cells: CellRect) -> Self {
        Self {
            kind,
            cells,
            base_colour: None,
            noise: None,
            stripe_period: None,
            stripe_axis: StripeAxis::Horizontal,
        }
    }

    fn noise_amplitude(&self) -> i32 {
        self.noise.map_or(
            match self.kind {
                RegionKind::QuartzLike => 1,
                RegionKind::AccessoryLike => 4,
                RegionKind::FeldsparLike => 2,
            },
            i32::from,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSample {
    pub image: RgbImage,
    pub grid: u32,
    /// Row-major labels at the declared grid.
    pub truth_cells: Vec<CellLabel>,
    pub truth_rock: Rock,
    pub seed: u64,
}

impl SyntheticSample {
    pub fn quartz_fraction(&self) -> f64 {
        fraction(&self.truth_cells, CellLabel::Quartz)
    }

    pub fn accessory_fraction(&self) -> f64 {
        fraction(&self.truth_cells, CellLabel::Accessory)
    }

    /// Cells whose 4-neighbours all share their label; boundary cells of a
    /// region are excluded.
    pub fn interior_cells(&self) -> Vec<usize> {
        let g = self.grid as i64;
        (0..self.truth_cells.len())
            .filter(|&i| {
                let (x, y) = (i as i64 % g, i as i64 / g);
                [(-1, 0), (1, 0), (0, -1), (0, 1)].iter().all(|(dx, dy)| {
                    let (nx, ny) = (x + dx, y + dy);
                    nx < 0
                        || ny < 0
                        || nx >= g
                        || ny >= g
                        || self.truth_cells[(ny * g + nx) as usize] == self.truth_cells[i]
                })
            })
            .collect()
    }
}

fn fraction(labels: &[CellLabel], which: CellLabel) -> f64 {
    labels.iter().filter(|&&l| l == which).count() as f64 / labels.len() as f64
}

/// The unique QAPF row containing the given cell fractions.
pub fn unique_rock(q_fraction: f64, a_fraction: f64) -> Result<Rock, SynthError> {
    let (q_pct, a_pct) = (100.0 * q_fraction, 100.0 * a_fraction);
    let matches: Vec<Rock> = QAPF_TABLE
        .iter()
        .filter(|r| r.matches(q_pct, a_pct))
        .map(|r| r.rock)
        .collect();
    match matches.as_slice() {
        [one] => Ok(*one),
        _ => Err(SynthError::AmbiguousTruth {
            q_pct,
            a_pct,
            matches,
        }),
    }
}

/// Renders a 512x384 sample from regions tiling a `grid` x `grid` layout.
pub fn generate(spec: &[RegionSpec], grid: u32, seed: u64) -> Result<SyntheticSample, SynthError> {
    let layout = make_grid(WORKING_WIDTH, WORKING_HEIGHT, grid)?;
    let owner = region_owner(spec, grid)?;
    let truth_cells: Vec<CellLabel> = owner.iter().map(|&r| spec[r].kind.cell_label()).collect();
    let truth_rock = unique_rock(
        fraction(&truth_cells, CellLabel::Quartz),
        fraction(&truth_cells, CellLabel::Accessory),
    )?;
    let image = render(spec, &layout, &owner, seed);
    Ok(SyntheticSample {
        image,
        grid,
        truth_cells,
        truth_rock,
        seed,
    })
}

fn region_owner(spec: &[RegionSpec], grid: u32) -> Result<Vec<usize>, SynthError> {
    let mut owner = vec![usize::MAX; (grid * grid) as usize];
    for (ri, r) in spec.iter().enumerate() {
        let c = r.cells;
        if c.w == 0 || c.h == 0 || c.x + c.w > grid || c.y + c.h > grid {
            return Err(SynthError::InvalidLayout(
                format!("region {ri} ({c:?}) is empty or outside the grid"),
                grid,
            ));
        }
        for y in c.y..c.y + c.h {
            for x in c.x..c.x + c.w {
                let slot = &mut owner[(y * grid + x) as usize];
                if *slot != usize::MAX {
                    return Err(SynthError::InvalidLayout(
                        format!("cell ({x},{y}) claimed by regions {} and {ri}", *slot),
                        grid,
                    ));
                }
                *slot = ri;
            }
        }
    }
    if let Some(i) = owner.iter().position(|&o| o == usize::MAX) {
        return Err(SynthError::InvalidLayout(
            format!(
                "cell ({},{}) is not covered",
                i as u32 % grid,
                i as u32 / grid
            ),
            grid,
        ));
    }
    Ok(owner)
}

struct PixelBox {
    x0: u32,
    y0: u32,
    x1: u32,
    y1: u32,
}

fn region_pixels(r: &RegionSpec, layout: &GridSpec) -> (PixelBox, PixelBox) {
    let first = layout.cell_rect(r.cells.x, r.cells.y);
    let last = layout.cell_rect(r.cells.x + r.cells.w - 1, r.cells.y + r.cells.h - 1);
    let outer = PixelBox {
        x0: first.x,
        y0: first.y,
        x1: last.x + last.w,
        y1: last.y + last.h,
    };
    let inset = match r.kind {
        RegionKind::QuartzLike => 0,
        _ => GRAIN_INSET
            .min((outer.x1 - outer.x0) / 4)
            .min((outer.y1 - outer.y0) / 4),
    };
    let inner = PixelBox {
        x0: outer.x0 + inset,
        y0: outer.y0 + inset,
        x1: outer.x1 - inset,
        y1: outer.y1 - inset,
    };
    (outer, inner)
}

fn render(spec: &[RegionSpec], layout: &GridSpec, owner: &[usize], seed: u64) -> RgbImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let boxes: Vec<(PixelBox, PixelBox)> = spec.iter().map(|r| region_pixels(r, layout)).collect();
    let matrix = RegionSpec::new(
        RegionKind::QuartzLike,
        CellRect {
            x: 0,
            y: 0,
            w: 1,
            h: 1,
        },
    );
    let mut data = Vec::with_capacity((WORKING_WIDTH * WORKING_HEIGHT) as usize);
    for y in 0..WORKING_HEIGHT {
        for x in 0..WORKING_WIDTH {
            let draws: [i32; 3] = [rng.gen(), rng.gen(), rng.gen()];
            let (cx, cy) = layout.cell_of(x, y);
            let ri = owner[(cy * layout.cells_x + cx) as usize];
            let region = &spec[ri];
            let (outer, inner) = &boxes[ri];
            let inside = x >= inner.x0 && x < inner.x1 && y >= inner.y0 && y < inner.y1;
            let px = if inside {
                shade(region, ri, x - outer.x0, y - outer.y0, draws)
            } else {
                shade(&matrix, 0, 0, 0, draws)
            };
            data.push(px);
        }
    }
    RgbImage::new(WORKING_WIDTH, WORKING_HEIGHT, data).expect("fixed working size")
}

fn jitter(draw: i32, amplitude: i32) -> i32 {
    if amplitude == 0 {
        0
    } else {
        draw.rem_euclid(2 * amplitude + 1) - amplitude
    }
}

fn clamp_u8(v: i32) -> u8 {
    v.clamp(0, 255) as u8
}

fn shade(r: &RegionSpec, index: usize, lx: u32, ly: u32, draws: [i32; 3]) -> [u8; 3] {
    let amp = r.noise_amplitude();
    match r.kind {
        RegionKind::QuartzLike => {
            let base = r.base_colour.unwrap_or(QUARTZ_COLOUR);
            [0, 1, 2].map(|c| clamp_u8(base[c] as i32 + jitter(draws[c], amp)))
        }
        RegionKind::AccessoryLike => {
            let base = r
                .base_colour
                .unwrap_or(ACCESSORY_PALETTE[index % ACCESSORY_PALETTE.len()]);
            [0, 1, 2].map(|c| clamp_u8(base[c] as i32 + jitter(draws[c], amp)))
        }
        RegionKind::FeldsparLike => {
            let period = r.stripe_period.unwrap_or(STRIPE_PERIOD).max(2);
            let base = r.base_colour.map_or(FELDSPAR_GRAY as i32, |c| c[0] as i32);
            let along = match r.stripe_axis {
                StripeAxis::Horizontal => ly,
                StripeAxis::Vertical => lx,
            };
            let half = STRIPE_AMPLITUDE as i32 / 2;
            let band = if (along % period) < period / 2 {
                -half
            } else {
                half
            };
            let v = clamp_u8(base + band + jitter(draws[0], amp));
            [v, v, v]
        }
    }
}

/// Cell-fraction targets and grain size for one rock class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RockProfile {
    pub rock: Rock,
    /// Grid at which ground truth is declared.
    pub grid: u32,
    /// Grain edge length in declared cells.
    pub grain_cells: u32,
    /// Inclusive ranges of quartz / accessory grain counts to draw from.
    pub quartz_grains: (u32, u32),
    pub accessory_grains: (u32, u32),
}

impl RockProfile {
    /// Medium-grained granite and adamellite, homogeneous diorite, and
    /// fine-grained tonalite.
    pub fn for_rock(rock: Rock) -> Self {
        match rock {
            // 64 grains of 2x2 cells: quartz 34-47%, accessory 6-9%
            Rock::Granite => Self {
                rock,
                grid: 16,
                grain_cells: 2,
                quartz_grains: (22, 30),
                accessory_grains: (4, 6),
            },
            // quartz 8-12%, accessory 17-27%
            Rock::Adamellite => Self {
                rock,
                grid: 16,
                grain_cells: 2,
                quartz_grains: (5, 8),
                accessory_grains: (11, 17),
            },
            // 1024 single cells: quartz 28-42%, accessory 25-35%
            Rock::Tonalite => Self {
                rock,
                grid: 32,
                grain_cells: 1,
                quartz_grains: (287, 430),
                accessory_grains: (256, 358),
            },
            // quartz 0-1.6%, accessory 26-39%
            Rock::Diorite => Self {
                rock,
                grid: 8,
                grain_cells: 1,
                quartz_grains: (0, 1),
                accessory_grains: (17, 25),
            },
        }
    }

    /// Random grain layout; grain kinds are shuffled over the grain lattice.
    pub fn layout(&self, rng: &mut impl Rng) -> Vec<RegionSpec> {
        let per_side = self.grid / self.grain_cells;
        let total = (per_side * per_side) as usize;
        let nq = rng.gen_range(self.quartz_grains.0..=self.quartz_grains.1) as usize;
        let na = rng.gen_range(self.accessory_grains.0..=self.accessory_grains.1) as usize;
        let mut kinds = vec![RegionKind::FeldsparLike; total];
        kinds[..nq].fill(RegionKind::QuartzLike);
        kinds[nq..nq + na].fill(RegionKind::AccessoryLike);
        kinds.shuffle(rng);
        kinds
            .into_iter()
            .enumerate()
            .map(|(i, kind)| {
                let (gx, gy) = (i as u32 % per_side, i as u32 / per_side);
                let mut r = RegionSpec::new(
                    kind,
                    CellRect {
                        x: gx * self.grain_cells,
                        y: gy * self.grain_cells,
                        w: self.grain_cells,
                        h: self.grain_cells,
                    },
                );
                if kind == RegionKind::AccessoryLike {
                    r.base_colour =
                        Some(ACCESSORY_PALETTE[rng.gen_range(0..ACCESSORY_PALETTE.len())]);
                }
                if kind == RegionKind::FeldsparLike && rng.gen_bool(0.5) {
                    r.stripe_axis = StripeAxis::Vertical;
                }
                r
            })
            .collect()
    }
}

/// The 8x8 layout of the worked example: no quartz, 17 accessory cells, the
/// rest feldspar.
pub fn diorite_example_layout() -> Vec<RegionSpec> {
    (0..64u32)
        .map(|i| {
            // spread accessory cells over the grid: every cell with i % 4 == 1, plus one
            let kind = if i % 4 == 1 || i == 62 {
                RegionKind::AccessoryLike
            } else {
                RegionKind::FeldsparLike
            };
            let mut r = RegionSpec::new(
                kind,
                CellRect {
                    x: i % 8,
                    y: i / 8,
                    w: 1,
                    h: 1,
                },
            );
            if (i / 8) % 2 == 1 {
                r.stripe_axis = StripeAxis::Vertical;
            }
            r
        })
        .collect()
}

/// One entry of a generated corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSample {
    pub id: String,
    pub section: String,
    pub layout: Vec<RegionSpec>,
    pub sample: SyntheticSample,
}

/// Generates `count` samples per rock, in `Rock::ALL` order. Every three
/// consecutive samples of a rock share a section id.
pub fn generate_samples(
    class_counts: &BTreeMap<Rock, usize>,
    seed: u64,
) -> Result<Vec<CorpusSample>, SynthError> {
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for rock in Rock::ALL {
        let count = class_counts.get(&rock).copied().unwrap_or(0);
        let profile = RockProfile::for_rock(rock);
        for i in 0..count {
            let sample_seed: u64 = master.gen();
            let mut rng = ChaCha8Rng::seed_from_u64(sample_seed);
            let layout = profile.layout(&mut rng);
            let sample = generate(&layout, profile.grid, sample_seed)?;
            out.push(CorpusSample {
                id: format!("{}_{:02}", rock.name().to_ascii_lowercase(), i),
                section: format!("{}-{}", rock.name().to_ascii_lowercase(), i / 3),
                layout,
                sample,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub path: String,
    pub rock: String,
    pub section: String,
}

#[derive(Serialize)]
struct SeedRecord<'a> {
    id: &'a str,
    rock: Rock,
    seed: u64,
    grid: u32,
    layout: &'a [RegionSpec],
}

/// Writes one PNG per sample, `manifest.csv` (`path,rock,section`, paths
/// relative to `out_dir`) and `synth.json` with per-sample seeds and layouts.
pub fn generate_corpus(
    class_counts: &BTreeMap<Rock, usize>,
    seed: u64,
    out_dir: &Path,
) -> Result<Vec<ManifestRow>, SynthError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| SynthError::Io { path, source }
    };
    let samples = generate_samples(class_counts, seed)?;
    fs::create_dir_all(out_dir).map_err(io(out_dir))?;
    let mut rows = Vec::with_capacity(samples.len());
    for s in &samples {
        let file = format!("{}.png", s.id);
        let path = out_dir.join(&file);
        fs::write(&path, s.sample.image.encode_png()).map_err(io(&path))?;
        rows.push(ManifestRow {
            path: file,
            rock: s.sample.truth_rock.name().to_owned(),
            section: s.section.clone(),
        });
    }
    let manifest = out_dir.join("manifest.csv");
    let mut w = csv::Writer::from_path(&manifest)?;
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush().map_err(io(&manifest))?;

    let records: Vec<SeedRecord> = samples
        .iter()
        .map(|s| SeedRecord {
            id: &s.id,
            rock: s.sample.truth_rock,
            seed: s.sample.seed,
            grid: s.sample.grid,
            layout: &s.layout,
        })
        .collect();
    let meta = serde_json::json!({ "corpus_seed": seed, "samples": records });
    let meta_path = out_dir.join("synth.json");
    fs::write(&meta_path, serde_json::to_string_pretty(&meta)? + "\n").map_err(io(&meta_path))?;
    Ok(rows)
}
