//! Parameter sweeps over an image corpus, with CSV / JSON reporting.
//!
//! The swept "Canny" value drives the detector's strong threshold. By default
//! the cell edge-fraction cutoff stays fixed (0.01); with `bind_thresholds`
//! both take the swept value.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::colorstats::VarianceMode;
use crate::edge::{canny, CannyParams, EdgeMap};
use crate::grid::{cell_features, label_cells, make_grid, CellFeatures, ParamSet};
use crate::imgcore::{decode, to_grayscale, to_working_resolution, GrayImage, RgbImage};
use crate::metrics::{average_precision_by_class, tally, PrecisionRecord};
use crate::petro::{classify_rock, Rock, RockDecision, RockLabel};

pub const GENERATED_BY: &str = concat!("thinsection ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("corpus is empty")]
    CorpusEmpty,
    #[error("plan has no parameter combinations")]
    NoCombos,
    #[error("plan lists a parameter combination twice: {0:?}")]
    DuplicateCombo(ParamSet),
    #[error("no defined precision for {0}")]
    NoDefinedPrecision(Rock),
    #[error("manifest {path}, line {line}: {msg}")]
    Manifest {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("worker pool: {0}")]
    Pool(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> SweepError {
    let path = path.to_path_buf();
    move |source| SweepError::Io { path, source }
}

/// One image with its ground truth.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusEntry {
    /// Path as written in the manifest; also the row's image id.
    pub id: String,
    pub path: PathBuf,
    pub rock: Rock,
    pub section: String,
}

/// Reads a `path,rock,section` manifest. Relative paths resolve against the
/// manifest's directory.
pub fn read_manifest(path: &Path) -> Result<Vec<CorpusEntry>, SweepError> {
    let base = path.parent().unwrap_or(Path::new("."));
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => SweepError::Io {
            path: path.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, e.to_string()),
        },
        _ => SweepError::Csv(e),
    })?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| SweepError::Manifest {
                path: path.to_path_buf(),
                line: 1,
                msg: format!("missing `{name}` column"),
            })
    };
    let (pc, rc, sc) = (col("path")?, col("rock")?, col("section")?);
    let mut entries = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let field = |c: usize| rec.get(c).unwrap_or("").trim().to_owned();
        let rock = field(rc)
            .parse::<Rock>()
            .map_err(|msg| SweepError::Manifest {
                path: path.to_path_buf(),
                line: i + 2,
                msg,
            })?;
        let id = field(pc);
        entries.push(CorpusEntry {
            path: base.join(&id),
            id,
            rock,
            section: field(sc),
        });
    }
    Ok(entries)
}

/// One table row: a grid size crossed with Canny and variance thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanRow {
    pub grid: u32,
    pub canny: Vec<f64>,
    pub variance: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanTable {
    pub name: String,
    pub rows: Vec<PlanRow>,
}

impl PlanTable {
    /// Cell grids 4..32; 4x4 sweeps three Canny thresholds, the rest only 0.01;
    /// six variance thresholds throughout.
    pub fn experiment1() -> Self {
        let variance = vec![50.0, 100.0, 150.0, 200.0, 250.0, 300.0];
        let row = |grid, canny: &[f64]| PlanRow {
            grid,
            canny: canny.to_vec(),
            variance: variance.clone(),
        };
        Self {
            name: "experiment1".into(),
            rows: vec![
                row(4, &[0.01, 0.02, 0.03]),
                row(8, &[0.01]),
                row(16, &[0.01]),
                row(32, &[0.01]),
            ],
        }
    }

    /// Full cross of four grids, three Canny and three variance thresholds.
    pub fn experiment2() -> Self {
        Self {
            name: "experiment2".into(),
            rows: [4, 8, 16, 32]
                .into_iter()
                .map(|grid| PlanRow {
                    grid,
                    canny: vec![0.01, 0.02, 0.03],
                    variance: vec![100.0, 200.0, 300.0],
                })
                .collect(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, SweepError> {
        Ok(serde_json::from_str(text)?)
    }
}

/// How swept values map onto a [`ParamSet`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanOptions {
    pub bind_thresholds: bool,
    /// Cell edge-fraction cutoff when thresholds are not bound.
    pub cell_cutoff: f64,
    pub sigma: f64,
    pub low_ratio: f64,
    pub variance_mode: VarianceMode,
}

impl Default for PlanOptions {
    fn default() -> Self {
        let c = CannyParams::default();
        Self {
            bind_thresholds: false,
            cell_cutoff: 0.01,
            sigma: c.sigma,
            low_ratio: c.low_ratio,
            variance_mode: VarianceMode::Chroma,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub name: String,
    pub combos: Vec<ParamSet>,
    pub corpus: Vec<CorpusEntry>,
}

impl ExperimentPlan {
    pub fn from_table(table: &PlanTable, opts: &PlanOptions) -> Result<Self, SweepError> {
        let mut combos: Vec<ParamSet> = Vec::new();
        for row in &table.rows {
            for &c in &row.canny {
                for &v in &row.variance {
                    let p = ParamSet {
                        grid: row.grid,
                        t_nonzero: if opts.bind_thresholds {
                            c
                        } else {
                            opts.cell_cutoff
                        },
                        t_variance: v,
                        canny: CannyParams {
                            sigma: opts.sigma,
                            t_high: c,
                            low_ratio: opts.low_ratio,
                        },
                        variance_mode: opts.variance_mode,
                    };
                    if combos.contains(&p) {
                        return Err(SweepError::DuplicateCombo(p));
                    }
                    combos.push(p);
                }
            }
        }
        if combos.is_empty() {
            return Err(SweepError::NoCombos);
        }
        Ok(Self {
            name: table.name.clone(),
            combos,
            corpus: Vec::new(),
        })
    }

    pub fn with_corpus(mut self, corpus: Vec<CorpusEntry>) -> Self {
        self.corpus = corpus;
        self
    }
}

pub fn plan_experiment1(opts: &PlanOptions) -> ExperimentPlan {
    ExperimentPlan::from_table(&PlanTable::experiment1(), opts).expect("static plan is valid")
}

pub fn plan_experiment2(opts: &PlanOptions) -> ExperimentPlan {
    ExperimentPlan::from_table(&PlanTable::experiment2(), opts).expect("static plan is valid")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub image: String,
    pub section: String,
    pub combo: usize,
    pub params: ParamSet,
    pub quartz_pct: Option<f64>,
    pub accessory_pct: Option<f64>,
    pub decision: Option<RockDecision>,
    pub truth: Rock,
    pub correct: bool,
    pub error: Option<String>,
}

impl SweepRow {
    pub fn predicted(&self) -> RockLabel {
        self.decision
            .as_ref()
            .map_or(RockLabel::Unclassified, |d| d.label)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub plan: String,
    pub combos: Vec<ParamSet>,
    pub rows: Vec<SweepRow>,
    pub records: Vec<PrecisionRecord>,
}

/// Decoded working rasters plus per-Canny-setting caches.
struct Prepared {
    rgb: RgbImage,
    gray: GrayImage,
    edges: HashMap<[u64; 3], EdgeMap>,
    features: HashMap<(u32, [u64; 3], VarianceMode), CellFeatures>,
}

fn canny_key(c: &CannyParams) -> [u64; 3] {
    [c.sigma.to_bits(), c.t_high.to_bits(), c.low_ratio.to_bits()]
}

pub fn load_working_image(path: &Path) -> Result<(RgbImage, GrayImage), String> {
    let bytes = fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let rgb = decode(&bytes).map_err(|e| e.to_string())?;
    let rgb = to_working_resolution(&rgb).map_err(|e| e.to_string())?;
    let gray = to_grayscale(&rgb);
    Ok((rgb, gray))
}

impl Prepared {
    fn run(&mut self, p: &ParamSet) -> Result<(f64, f64, RockDecision), String> {
        p.validate().map_err(|e| e.to_string())?;
        let ck = canny_key(&p.canny);
        let fkey = (p.grid, ck, p.variance_mode);
        if !self.features.contains_key(&fkey) {
            if !self.edges.contains_key(&ck) {
                let e = canny(&self.gray, &p.canny).map_err(|e| e.to_string())?;
                self.edges.insert(ck, e);
            }
            let grid = make_grid(self.rgb.width(), self.rgb.height(), p.grid)
                .map_err(|e| e.to_string())?;
            let f = cell_features(&self.rgb, &self.edges[&ck], grid, p.variance_mode)
                .map_err(|e| e.to_string())?;
            self.features.insert(fkey, f);
        }
        let (_, pct) = label_cells(&self.features[&fkey], p);
        let d = classify_rock(pct.quartz_pct(), pct.accessory_pct()).map_err(|e| e.to_string())?;
        Ok((pct.quartz_pct(), pct.accessory_pct(), d))
    }
}

fn sweep_image(entry: &CorpusEntry, combos: &[ParamSet]) -> Vec<SweepRow> {
    let loaded = load_working_image(&entry.path);
    let mut prepared = loaded.as_ref().ok().map(|(rgb, gray)| Prepared {
        rgb: rgb.clone(),
        gray: gray.clone(),
        edges: HashMap::new(),
        features: HashMap::new(),
    });
    combos
        .iter()
        .enumerate()
        .map(|(ci, p)| {
            let outcome = match (&mut prepared, &loaded) {
                (Some(prep), _) => prep.run(p),
                (None, Err(e)) => Err(e.clone()),
                (None, Ok(_)) => unreachable!(),
            };
            let mut row = SweepRow {
                image: entry.id.clone(),
                section: entry.section.clone(),
                combo: ci,
                params: *p,
                quartz_pct: None,
                accessory_pct: None,
                decision: None,
                truth: entry.rock,
                correct: false,
                error: None,
            };
            match outcome {
                Ok((q, a, d)) => {
                    row.correct = d.label == RockLabel::Rock(entry.rock);
                    row.quartz_pct = Some(q);
                    row.accessory_pct = Some(a);
                    row.decision = Some(d);
                }
                Err(e) => row.error = Some(e),
            }
            row
        })
        .collect()
}

/// Per-combo, per-rock precision over report rows. Rocks are those present
/// as ground truth or as predictions.
pub fn precision_records(combos: &[ParamSet], rows: &[SweepRow]) -> Vec<PrecisionRecord> {
    let mut rocks: Vec<Rock> = rows
        .iter()
        .flat_map(|r| [Some(r.truth), r.predicted().rock()])
        .flatten()
        .collect();
    rocks.sort();
    rocks.dedup();
    let mut by_combo: Vec<Vec<(RockLabel, Rock)>> = vec![Vec::new(); combos.len()];
    for r in rows {
        by_combo[r.combo].push((r.predicted(), r.truth));
    }
    let mut out = Vec::new();
    for (ci, preds) in by_combo.iter().enumerate() {
        for &rock in &rocks {
            out.push(PrecisionRecord::new(rock, combos[ci], tally(preds, rock)));
        }
    }
    out
}

/// Runs every (image, combo) pair. Decoding and Canny run once per image and
/// Canny setting; failures become error rows.
pub fn run_sweep(plan: &ExperimentPlan, workers: Option<usize>) -> Result<SweepReport, SweepError> {
    if plan.corpus.is_empty() {
        return Err(SweepError::CorpusEmpty);
    }
    if plan.combos.is_empty() {
        return Err(SweepError::NoCombos);
    }
    let mut corpus: Vec<&CorpusEntry> = plan.corpus.iter().collect();
    corpus.sort_by(|a, b| a.id.cmp(&b.id));
    let work = || -> Vec<SweepRow> {
        corpus
            .par_iter()
            .map(|e| sweep_image(e, &plan.combos))
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect()
    };
    let rows = match workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| SweepError::Pool(e.to_string()))?
            .install(work),
        None => work(),
    };
    let records = precision_records(&plan.combos, &rows);
    Ok(SweepReport {
        plan: plan.name.clone(),
        combos: plan.combos.clone(),
        rows,
        records,
    })
}

fn combo_order(a: &ParamSet, b: &ParamSet) -> std::cmp::Ordering {
    (a.grid, a.t_nonzero, a.t_variance, a.canny.t_high)
        .partial_cmp(&(b.grid, b.t_nonzero, b.t_variance, b.canny.t_high))
        .unwrap_or(std::cmp::Ordering::Equal)
}

/// All combos reaching the highest defined precision for `rock`.
pub fn best_params(report: &SweepReport, rock: Rock) -> Result<Vec<ParamSet>, SweepError> {
    let defined: Vec<(&ParamSet, f64)> = report
        .records
        .iter()
        .filter(|r| r.rock == rock)
        .filter_map(|r| r.precision.map(|p| (&r.params, p)))
        .collect();
    let best = defined
        .iter()
        .map(|d| d.1)
        .fold(None, |m: Option<f64>, p| Some(m.map_or(p, |m| m.max(p))))
        .ok_or(SweepError::NoDefinedPrecision(rock))?;
    let mut out: Vec<ParamSet> = defined
        .into_iter()
        .filter(|d| d.1 == best)
        .map(|d| *d.0)
        .collect();
    out.sort_by(combo_order);
    Ok(out)
}

pub fn best_precision(report: &SweepReport, rock: Rock) -> Option<f64> {
    report
        .records
        .iter()
        .filter(|r| r.rock == rock)
        .filter_map(|r| r.precision)
        .fold(None, |m, p| Some(m.map_or(p, |m: f64| m.max(p))))
}

fn f6(v: f64) -> String {
    format!("{v:.6}")
}

const REPORT_HEADER: [&str; 12] = [
    "image",
    "section",
    "grid",
    "t_nonzero",
    "t_variance",
    "canny_high",
    "quartz_pct",
    "accessory_pct",
    "predicted",
    "truth",
    "correct",
    "error",
];

impl SweepReport {
    pub fn to_csv(&self) -> Result<String, SweepError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(REPORT_HEADER)?;
        for r in &self.rows {
            let opt = |v: Option<f64>| v.map(f6).unwrap_or_default();
            w.write_record([
                r.image.clone(),
                r.section.clone(),
                r.params.grid.to_string(),
                f6(r.params.t_nonzero),
                f6(r.params.t_variance),
                f6(r.params.canny.t_high),
                opt(r.quartz_pct),
                opt(r.accessory_pct),
                r.decision
                    .as_ref()
                    .map(|d| d.label.to_string())
                    .unwrap_or_default(),
                r.truth.to_string(),
                r.correct.to_string(),
                r.error.clone().unwrap_or_default(),
            ])?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| SweepError::Pool(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv of utf-8 fields"))
    }

    /// Rebuilds a report from `report.csv`. Canny sigma and low ratio are not
    /// stored there and come back as defaults.
    pub fn from_csv(plan: &str, text: &str) -> Result<Self, SweepError> {
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let mut combos: Vec<ParamSet> = Vec::new();
        let mut rows = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec?;
            let bad = |msg: String| SweepError::Manifest {
                path: PathBuf::from("report.csv"),
                line: i + 2,
                msg,
            };
            let get = |c: usize| rec.get(c).unwrap_or("");
            let num = |c: usize| {
                get(c)
                    .parse::<f64>()
                    .map_err(|e| bad(format!("column {c}: {e}")))
            };
            let opt = |c: usize| -> Result<Option<f64>, SweepError> {
                if get(c).is_empty() {
                    Ok(None)
                } else {
                    num(c).map(Some)
                }
            };
            let params = ParamSet {
                grid: get(2).parse().map_err(|e| bad(format!("grid: {e}")))?,
                t_nonzero: num(3)?,
                t_variance: num(4)?,
                canny: CannyParams::with_high(num(5)?),
                variance_mode: VarianceMode::Chroma,
            };
            let combo = match combos.iter().position(|c| *c == params) {
                Some(i) => i,
                None => {
                    combos.push(params);
                    combos.len() - 1
                }
            };
            let truth: Rock = get(9).parse().map_err(bad)?;
            let (q, a) = (opt(6)?, opt(7)?);
            let decision = match (q, a, get(8)) {
                (Some(q), Some(a), p) if !p.is_empty() => {
                    Some(classify_rock(q, a).map_err(|e| bad(e.to_string()))?)
                }
                _ => None,
            };
            rows.push(SweepRow {
                image: get(0).to_owned(),
                section: get(1).to_owned(),
                combo,
                params,
                quartz_pct: q,
                accessory_pct: a,
                correct: get(10) == "true",
                truth,
                decision,
                error: Some(get(11).to_owned()).filter(|e| !e.is_empty()),
            });
        }
        let records = precision_records(&combos, &rows);
        Ok(Self {
            plan: plan.to_owned(),
            combos,
            rows,
            records,
        })
    }

    /// Per-record table: `rock,grid,t_canny_or_nonzero,t_variance,precision,support`.
    pub fn precision_csv(&self) -> Result<String, SweepError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "rock",
            "grid",
            "t_canny_or_nonzero",
            "t_variance",
            "precision",
            "support",
        ])?;
        for r in &self.records {
            w.write_record([
                r.rock.to_string(),
                r.params.grid.to_string(),
                f6(r.params.canny.t_high),
                f6(r.params.t_variance),
                r.precision.map(f6).unwrap_or_else(|| "undefined".into()),
                r.support.to_string(),
            ])?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| SweepError::Pool(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv of utf-8 fields"))
    }

    pub fn summary(&self) -> Summary {
        let rocks: Vec<Rock> = {
            let mut r: Vec<Rock> = self.records.iter().map(|r| r.rock).collect();
            r.dedup();
            r.sort();
            r.dedup();
            r
        };
        let classes = rocks
            .iter()
            .map(|&rock| {
                let recs: Vec<PrecisionRecord> = self
                    .records
                    .iter()
                    .filter(|r| r.rock == rock)
                    .cloned()
                    .collect();
                let by_grid = average_precision_by_class(&recs, |r| r.params.grid)
                    .map(|m| {
                        m.into_iter()
                            .map(|(g, a)| (g.to_string(), a.mean_precision))
                            .collect()
                    })
                    .unwrap_or_default();
                let by_variance = average_precision_by_class(&recs, |r| f6(r.params.t_variance))
                    .map(|m| m.into_iter().map(|(v, a)| (v, a.mean_precision)).collect())
                    .unwrap_or_default();
                let by_canny = average_precision_by_class(&recs, |r| f6(r.params.canny.t_high))
                    .map(|m| m.into_iter().map(|(v, a)| (v, a.mean_precision)).collect())
                    .unwrap_or_default();
                ClassSummary {
                    rock,
                    support: self.rows.iter().filter(|r| r.truth == rock).count()
                        / self.combos.len().max(1),
                    best_precision: best_precision(self, rock),
                    best_params: best_params(self, rock)
                        .unwrap_or_default()
                        .iter()
                        .map(ComboSummary::from)
                        .collect(),
                    mean_precision_by_grid: by_grid,
                    mean_precision_by_canny: by_canny,
                    mean_precision_by_variance: by_variance,
                    records: recs
                        .iter()
                        .map(|r| RecordSummary {
                            combo: ComboSummary::from(&r.params),
                            tp: r.counts.tp,
                            fp: r.counts.fp,
                            precision: r.precision,
                            recall: r.recall,
                        })
                        .collect(),
                }
            })
            .collect();
        Summary {
            generated_by: GENERATED_BY.to_owned(),
            plan: self.plan.clone(),
            images: self.rows.len() / self.combos.len().max(1),
            combos: self.combos.len(),
            errors: self.rows.iter().filter(|r| r.error.is_some()).count(),
            classes,
        }
    }

    /// Writes `report.csv`, `precision.csv` and `summary.json` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<(), SweepError> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let report = dir.join("report.csv");
        fs::write(&report, self.to_csv()?).map_err(io_err(&report))?;
        let precision = dir.join("precision.csv");
        fs::write(&precision, self.precision_csv()?).map_err(io_err(&precision))?;
        let summary = dir.join("summary.json");
        let json = serde_json::to_string_pretty(&self.summary())? + "\n";
        fs::write(&summary, json).map_err(io_err(&summary))?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComboSummary {
    pub grid: u32,
    pub t_nonzero: f64,
    pub t_variance: f64,
    pub canny_high: f64,
}

impl From<&ParamSet> for ComboSummary {
    fn from(p: &ParamSet) -> Self {
        Self {
            grid: p.grid,
            t_nonzero: p.t_nonzero,
            t_variance: p.t_variance,
            canny_high: p.canny.t_high,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordSummary {
    #[serde(flatten)]
    pub combo: ComboSummary,
    pub tp: u64,
    pub fp: u64,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSummary {
    pub rock: Rock,
    pub support: usize,
    pub best_precision: Option<f64>,
    pub best_params: Vec<ComboSummary>,
    pub mean_precision_by_grid: BTreeMap<String, Option<f64>>,
    pub mean_precision_by_canny: BTreeMap<String, Option<f64>>,
    pub mean_precision_by_variance: BTreeMap<String, Option<f64>>,
    pub records: Vec<RecordSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub generated_by: String,
    pub plan: String,
    pub images: usize,
    pub combos: usize,
    pub errors: usize,
    pub classes: Vec<ClassSummary>,
}
