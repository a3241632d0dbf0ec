//! Command bodies. Each returns the complete stdout text so nothing is printed
//! when a later step fails.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thinsection::imgcore::{decode, to_working_resolution, WORKING_HEIGHT, WORKING_WIDTH};
use thinsection::overlay::render_overlay;
use thinsection::petro::Rock;
use thinsection::sweep::{
    best_params, best_precision, read_manifest, run_sweep, ExperimentPlan, PlanOptions, PlanTable,
    SweepReport,
};
use thinsection::synth::{diorite_example_layout, generate, generate_corpus};
use thinsection::trace::analyze;

use crate::args::{ClassifyArgs, ReportArgs, SweepArgs, SynthArgs};
use crate::config::{resolve_params, FileConfig, DEFAULT_T_NONZERO};
use crate::error::CliError;

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}

pub fn classify(a: &ClassifyArgs) -> Result<String, CliError> {
    let file = FileConfig::load(a.thresholds.config.as_deref())?;
    let params = resolve_params(&a.thresholds, a.bind_thresholds, &file)?;
    let bytes = read(&a.image)?;
    let rgb = decode(&bytes).map_err(|e| CliError::data(format!("{}: {e}", a.image.display())))?;
    let rgb = to_working_resolution(&rgb)?;
    if (rgb.width(), rgb.height()) != (WORKING_WIDTH, WORKING_HEIGHT) {
        eprintln!(
            "warning: working image is {}x{}, not {WORKING_WIDTH}x{WORKING_HEIGHT}",
            rgb.width(),
            rgb.height()
        );
    }
    let analysis = analyze(&rgb, &params)?;
    if let Some(p) = &a.dump_edges {
        write(p, analysis.edges.encode_png())?;
    }
    if let Some(p) = &a.dump_overlay {
        let img = render_overlay(&rgb, &analysis.cells).map_err(CliError::data)?;
        write(p, img.encode_png())?;
    }
    if let Some(p) = &a.dump_cells {
        write(p, analysis.cells.to_json() + "\n")?;
    }
    Ok(analysis.trace(&a.image.display().to_string()))
}

fn load_plan(name: &str, opts: &PlanOptions) -> Result<ExperimentPlan, CliError> {
    let table = match name {
        "experiment1" => PlanTable::experiment1(),
        "experiment2" => PlanTable::experiment2(),
        path => {
            let text = String::from_utf8(read(Path::new(path))?).map_err(CliError::data)?;
            PlanTable::from_json(&text).map_err(|e| CliError::data(format!("{path}: {e}")))?
        }
    };
    Ok(ExperimentPlan::from_table(&table, opts)?)
}

fn best_lines(report: &SweepReport) -> String {
    let mut out = String::new();
    let mut rocks: Vec<Rock> = report.rows.iter().map(|r| r.truth).collect();
    rocks.sort();
    rocks.dedup();
    for rock in rocks {
        match (best_precision(report, rock), best_params(report, rock)) {
            (Some(p), Ok(combos)) => {
                let c = &combos[0];
                let _ = write!(
                    out,
                    "{rock}\tprecision {p:.6}\t{g}x{g} t_nonzero {} canny_high {} t_variance {}",
                    c.t_nonzero,
                    c.canny.t_high,
                    c.t_variance,
                    g = c.grid,
                );
                if combos.len() > 1 {
                    let _ = write!(out, " (+{} tied)", combos.len() - 1);
                }
                out.push('\n');
            }
            _ => {
                let _ = writeln!(out, "{rock}\tprecision undefined");
            }
        }
    }
    out
}

pub fn sweep(a: &SweepArgs) -> Result<String, CliError> {
    let file = FileConfig::load(a.config.as_deref())?;
    let opts = PlanOptions {
        bind_thresholds: a.bind_thresholds || file.bind_thresholds.unwrap_or(false),
        cell_cutoff: a.t_nonzero.or(file.t_nonzero).unwrap_or(DEFAULT_T_NONZERO),
        variance_mode: a.variance_mode.or(file.variance_mode).unwrap_or_default(),
        ..PlanOptions::default()
    };
    let corpus = read_manifest(&a.manifest)?;
    let plan = load_plan(&a.plan, &opts)?.with_corpus(corpus);
    let report = run_sweep(&plan, a.workers.or(file.workers))?;
    let errors = report.rows.iter().filter(|r| r.error.is_some()).count();
    if errors == report.rows.len() {
        let first = report.rows[0].error.clone().unwrap_or_default();
        return Err(CliError::data(format!(
            "every image failed; first error: {first}"
        )));
    }
    if errors > 0 {
        eprintln!(
            "warning: {errors} of {} rows failed, see report.csv",
            report.rows.len()
        );
    }
    report.write_to(&a.out)?;
    Ok(format!(
        "{} images x {} combos -> {}\n{}",
        plan.corpus.len(),
        plan.combos.len(),
        a.out.display(),
        best_lines(&report)
    ))
}

pub fn synth(a: &SynthArgs) -> Result<String, CliError> {
    let counts: BTreeMap<Rock, usize> = Rock::ALL.into_iter().map(|r| (r, a.per_class)).collect();
    let rows = generate_corpus(&counts, a.seed, &a.out)?;
    let mut out = format!(
        "{} images -> {}\n",
        rows.len(),
        a.out.join("manifest.csv").display()
    );
    if a.diorite_example {
        let sample = generate(&diorite_example_layout(), 8, a.seed)?;
        let path = a.out.join("diorite_example.png");
        write(&path, sample.image.encode_png())?;
        let _ = writeln!(out, "diorite example -> {}", path.display());
    }
    Ok(out)
}

pub fn report(a: &ReportArgs) -> Result<String, CliError> {
    let text = String::from_utf8(read(&a.report)?).map_err(CliError::data)?;
    let report = SweepReport::from_csv("report", &text)?;
    if report.rows.is_empty() {
        return Err(CliError::data(format!("{}: no rows", a.report.display())));
    }
    if let Some(dir) = &a.out {
        fs::create_dir_all(dir).map_err(|e| CliError::io(format!("{}: {e}", dir.display())))?;
        write(&dir.join("precision.csv"), report.precision_csv()?)?;
        let json = serde_json::to_string_pretty(&report.summary()).map_err(CliError::data)? + "\n";
        write(&dir.join("summary.json"), json)?;
    }
    Ok(best_lines(&report))
}
