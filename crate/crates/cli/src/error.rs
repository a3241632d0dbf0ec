use std::fmt::Display;

use thinsection::edge::EdgeError;
use thinsection::grid::GridError;
use thinsection::imgcore::ImageError;
use thinsection::sweep::SweepError;
use thinsection::synth::SynthError;

pub const USAGE: u8 = 1;
pub const IO: u8 = 2;
pub const DATA: u8 = 3;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(m: impl Display) -> Self {
        Self {
            code: USAGE,
            message: m.to_string(),
        }
    }

    pub fn io(m: impl Display) -> Self {
        Self {
            code: IO,
            message: m.to_string(),
        }
    }

    pub fn data(m: impl Display) -> Self {
        Self {
            code: DATA,
            message: m.to_string(),
        }
    }
}

impl From<ImageError> for CliError {
    fn from(e: ImageError) -> Self {
        Self::data(e)
    }
}

impl From<GridError> for CliError {
    fn from(e: GridError) -> Self {
        match e {
            GridError::GridTooFine { .. } | GridError::InvalidParams(_) => Self::usage(e),
            GridError::Edge(EdgeError::InvalidParams(_)) => Self::usage(e),
            _ => Self::data(e),
        }
    }
}

impl From<SweepError> for CliError {
    fn from(e: SweepError) -> Self {
        match e {
            SweepError::Io { .. } => Self::io(e),
            _ => Self::data(e),
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::Io { .. } => Self::io(e),
            _ => Self::data(e),
        }
    }
}
