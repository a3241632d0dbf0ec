//! Thin-section image classification: quartz cells are found by their lack of
//! Canny edges, accessory-mineral cells by their colour variance, and the
//! resulting cell percentages are matched against QAPF ranges.

pub mod colorstats;
pub mod edge;
pub mod grid;
pub mod imgcore;
pub mod metrics;
pub mod overlay;
pub mod petro;
pub mod sweep;
pub mod synth;
pub mod trace;
