//! Confusion counting, precision and grouped precision averages.

use std::collections::BTreeMap;
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::ParamSet;
use crate::petro::{Rock, RockLabel};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("precision is undefined without positive predictions (tp + fp = 0)")]
    UndefinedPrecision,
    #[error("no records to average")]
    EmptyGroup,
}

/// One-vs-rest counts for a single target class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl Add for ConfusionCounts {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self {
            tp: self.tp + o.tp,
            fp: self.fp + o.fp,
            fn_: self.fn_ + o.fn_,
            tn: self.tn + o.tn,
        }
    }
}

impl AddAssign for ConfusionCounts {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl std::iter::Sum for ConfusionCounts {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), Add::add)
    }
}

pub fn precision(c: &ConfusionCounts) -> Result<f64, MetricsError> {
    if c.tp + c.fp == 0 {
        return Err(MetricsError::UndefinedPrecision);
    }
    Ok(c.tp as f64 / (c.tp + c.fp) as f64)
}

pub fn recall(c: &ConfusionCounts) -> Option<f64> {
    (c.tp + c.fn_ > 0).then(|| c.tp as f64 / (c.tp + c.fn_) as f64)
}

pub fn f1(c: &ConfusionCounts) -> Option<f64> {
    let p = precision(c).ok()?;
    let r = recall(c)?;
    (p + r > 0.0).then(|| 2.0 * p * r / (p + r))
}

/// Counts `(predicted, truth)` pairs against one target rock.
pub fn tally(predictions: &[(RockLabel, Rock)], target: Rock) -> ConfusionCounts {
    let mut c = ConfusionCounts::default();
    for &(pred, truth) in predictions {
        let predicted = pred == RockLabel::Rock(target);
        let actual = truth == target;
        match (predicted, actual) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    c
}

/// Precision of one rock class under one parameter combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecisionRecord {
    pub rock: Rock,
    pub params: ParamSet,
    pub counts: ConfusionCounts,
    /// `None` when the class was never predicted.
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    /// Images whose ground truth is `rock`.
    pub support: u64,
}

impl PrecisionRecord {
    pub fn new(rock: Rock, params: ParamSet, counts: ConfusionCounts) -> Self {
        Self {
            rock,
            params,
            counts,
            precision: precision(&counts).ok(),
            recall: recall(&counts),
            f1: f1(&counts),
            support: counts.tp + counts.fn_,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupAverage {
    /// Mean over records with defined precision; `None` if there were none.
    pub mean_precision: Option<f64>,
    pub defined: usize,
    pub undefined: usize,
}

/// Mean precision per group key. Undefined records are counted, not averaged.
pub fn average_precision_by_class<K, F>(
    records: &[PrecisionRecord],
    key: F,
) -> Result<BTreeMap<K, GroupAverage>, MetricsError>
where
    K: Ord,
    F: Fn(&PrecisionRecord) -> K,
{
    if records.is_empty() {
        return Err(MetricsError::EmptyGroup);
    }
    let mut acc: BTreeMap<K, (f64, usize, usize)> = BTreeMap::new();
    for r in records {
        let slot = acc.entry(key(r)).or_default();
        match r.precision {
            Some(p) => {
                slot.0 += p;
                slot.1 += 1;
            }
            None => slot.2 += 1,
        }
    }
    Ok(acc
        .into_iter()
        .map(|(k, (sum, defined, undefined))| {
            (
                k,
                GroupAverage {
                    mean_precision: (defined > 0).then(|| sum / defined as f64),
                    defined,
                    undefined,
                },
            )
        })
        .collect())
}
