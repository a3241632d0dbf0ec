//! Settings resolution: flags, then the `--config` file, then defaults.

use std::fs;
use std::path::Path;

use serde::Deserialize;
use thinsection::colorstats::VarianceMode;
use thinsection::edge::CannyParams;
use thinsection::grid::ParamSet;

use crate::args::Thresholds;
use crate::error::CliError;

pub const DEFAULT_GRID: u32 = 16;
pub const DEFAULT_CANNY_HIGH: f64 = 0.02;
pub const DEFAULT_T_VARIANCE: f64 = 200.0;
pub const DEFAULT_T_NONZERO: f64 = 0.01;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub grid: Option<u32>,
    pub t_nonzero: Option<f64>,
    pub t_variance: Option<f64>,
    pub canny_high: Option<f64>,
    pub variance_mode: Option<VarianceMode>,
    pub bind_thresholds: Option<bool>,
    pub workers: Option<usize>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
    }
}

/// Builds the classification parameters. With `bind`, one value drives both
/// the Canny threshold and the quartz cutoff.
pub fn resolve_params(
    t: &Thresholds,
    bind_flag: bool,
    file: &FileConfig,
) -> Result<ParamSet, CliError> {
    let bind = bind_flag || file.bind_thresholds.unwrap_or(false);
    let canny_high = t.canny_high.or(file.canny_high);
    let t_nonzero = t.t_nonzero.or(file.t_nonzero);
    let (canny_high, t_nonzero) = if bind {
        let v = match (canny_high, t_nonzero) {
            (Some(c), Some(n)) if c != n => {
                return Err(CliError::usage(format!(
                    "bound thresholds disagree: canny-high {c} vs t-nonzero {n}"
                )))
            }
            (c, n) => c.or(n).unwrap_or(DEFAULT_CANNY_HIGH),
        };
        (v, v)
    } else {
        (
            canny_high.unwrap_or(DEFAULT_CANNY_HIGH),
            t_nonzero.unwrap_or(DEFAULT_T_NONZERO),
        )
    };
    let p = ParamSet {
        grid: t.grid.or(file.grid).unwrap_or(DEFAULT_GRID),
        t_nonzero,
        t_variance: t
            .t_variance
            .or(file.t_variance)
            .unwrap_or(DEFAULT_T_VARIANCE),
        canny: CannyParams::with_high(canny_high),
        variance_mode: t.variance_mode.or(file.variance_mode).unwrap_or_default(),
    };
    p.validate().map_err(CliError::usage)?;
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let p = resolve_params(&Thresholds::default(), false, &FileConfig::default()).unwrap();
        assert_eq!(
            (p.grid, p.t_nonzero, p.t_variance, p.canny.t_high),
            (16, 0.01, 200.0, 0.02)
        );
    }

    #[test]
    fn flags_beat_file_beats_defaults() {
        let file = FileConfig {
            grid: Some(8),
            t_variance: Some(50.0),
            ..Default::default()
        };
        let flags = Thresholds {
            grid: Some(32),
            ..Default::default()
        };
        let p = resolve_params(&flags, false, &file).unwrap();
        assert_eq!((p.grid, p.t_variance), (32, 50.0));
    }

    #[test]
    fn binding() {
        let flags = Thresholds {
            t_nonzero: Some(0.03),
            ..Default::default()
        };
        let p = resolve_params(&flags, true, &FileConfig::default()).unwrap();
        assert_eq!((p.t_nonzero, p.canny.t_high), (0.03, 0.03));
        let clash = Thresholds {
            t_nonzero: Some(0.03),
            canny_high: Some(0.01),
            ..Default::default()
        };
        assert_eq!(
            resolve_params(&clash, true, &FileConfig::default())
                .unwrap_err()
                .code,
            1
        );
    }
}
