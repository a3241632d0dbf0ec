//! QAPF range lookup from quartz / accessory percentages, and per-section
//! majority voting.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PetroError {
    #[error("percentage {0} outside [0, 100]")]
    PercentOutOfRange(f64),
    #[error("cannot aggregate an empty vote list")]
    EmptyVotes,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Rock {
    Granite,
    Adamellite,
    Tonalite,
    Diorite,
}

impl Rock {
    /// Table order, which is also the tie-break order.
    pub const ALL: [Rock; 4] = [
        Rock::Granite,
        Rock::Adamellite,
        Rock::Tonalite,
        Rock::Diorite,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Rock::Granite => "Granite",
            Rock::Adamellite => "Adamellite",
            Rock::Tonalite => "Tonalite",
            Rock::Diorite => "Diorite",
        }
    }
}

impl fmt::Display for Rock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Rock {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "granite" => Ok(Rock::Granite),
            "adamellite" | "quartz monzonite" | "quartz-monzonite" => Ok(Rock::Adamellite),
            "tonalite" => Ok(Rock::Tonalite),
            "diorite" => Ok(Rock::Diorite),
            other => Err(format!("unknown rock type `{other}`")),
        }
    }
}

/// Percentage interval. `max_exclusive` marks a half-open upper bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub min: f64,
    pub max: f64,
    pub max_exclusive: bool,
}

impl Interval {
    const fn closed(min: f64, max: f64) -> Self {
        Self {
            min,
            max,
            max_exclusive: false,
        }
    }

    const fn half_open(min: f64, max: f64) -> Self {
        Self {
            min,
            max,
            max_exclusive: true,
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.min
            && if self.max_exclusive {
                v < self.max
            } else {
                v <= self.max
            }
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.min + self.max)
    }

    pub fn width(&self) -> f64 {
        self.max - self.min
    }
}

/// One QAPF row. The feldspar columns are kept for reference only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RockRange {
    pub rock: Rock,
    pub quartz: Interval,
    pub alkali_feldspar: Option<Interval>,
    pub plagioclase: Interval,
    pub accessory: Interval,
}

pub const QAPF_TABLE: [RockRange; 4] = [
    RockRange {
        rock: Rock::Granite,
        quartz: Interval::closed(20.0, 60.0),
        alkali_feldspar: Some(Interval::closed(35.0, 90.0)),
        plagioclase: Interval::closed(10.0, 65.0),
        accessory: Interval::closed(5.0, 20.0),
    },
    RockRange {
        rock: Rock::Adamellite,
        quartz: Interval::closed(5.0, 20.0),
        alkali_feldspar: Some(Interval::closed(35.0, 65.0)),
        plagioclase: Interval::closed(35.0, 65.0),
        accessory: Interval::closed(10.0, 35.0),
    },
    RockRange {
        rock: Rock::Tonalite,
        quartz: Interval::closed(15.0, 50.0),
        alkali_feldspar: Some(Interval::closed(10.0, 35.0)),
        plagioclase: Interval::closed(65.0, 90.0),
        accessory: Interval::closed(10.0, 40.0),
    },
    RockRange {
        rock: Rock::Diorite,
        quartz: Interval::half_open(0.0, 5.0),
        alkali_feldspar: None,
        plagioclase: Interval::closed(70.0, 90.0),
        accessory: Interval::closed(20.0, 50.0),
    },
];

impl RockRange {
    pub fn for_rock(rock: Rock) -> &'static RockRange {
        QAPF_TABLE
            .iter()
            .find(|r| r.rock == rock)
            .expect("every rock has a row")
    }

    pub fn matches(&self, q_pct: f64, a_pct: f64) -> bool {
        self.quartz.contains(q_pct) && self.accessory.contains(a_pct)
    }

    /// Distance from the row's centre, each axis scaled by the row's width.
    pub fn normalized_distance(&self, q_pct: f64, a_pct: f64) -> f64 {
        let dq = (q_pct - self.quartz.center()) / self.quartz.width();
        let da = (a_pct - self.accessory.center()) / self.accessory.width();
        dq.hypot(da)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RockLabel {
    Rock(Rock),
    Unclassified,
}

impl RockLabel {
    pub fn rock(self) -> Option<Rock> {
        match self {
            RockLabel::Rock(r) => Some(r),
            RockLabel::Unclassified => None,
        }
    }
}

impl fmt::Display for RockLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RockLabel::Rock(r) => write!(f, "{r}"),
            RockLabel::Unclassified => f.write_str("Unclassified"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RockDecision {
    pub label: RockLabel,
    pub matched: Vec<Rock>,
    /// Closest row by normalized distance; equals the label when matched.
    pub nearest: Rock,
    pub distance: f64,
    pub q_pct: f64,
    pub a_pct: f64,
}

impl RockDecision {
    /// `It's a Diorite!` or `Unclassified (nearest: Granite)`.
    pub fn verdict_line(&self) -> String {
        match self.label {
            RockLabel::Rock(r) => format!("It's a {r}!"),
            RockLabel::Unclassified => format!("Unclassified (nearest: {})", self.nearest),
        }
    }
}

fn argmin<'a>(rows: impl Iterator<Item = &'a RockRange>, q: f64, a: f64) -> Option<(Rock, f64)> {
    let mut best: Option<(Rock, f64)> = None;
    for row in rows {
        let d = row.normalized_distance(q, a);
        // strict < keeps the earlier row on ties
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((row.rock, d));
        }
    }
    best
}

pub fn classify_rock(q_pct: f64, a_pct: f64) -> Result<RockDecision, PetroError> {
    for v in [q_pct, a_pct] {
        if !(0.0..=100.0).contains(&v) {
            return Err(PetroError::PercentOutOfRange(v));
        }
    }
    let matched: Vec<Rock> = QAPF_TABLE
        .iter()
        .filter(|r| r.matches(q_pct, a_pct))
        .map(|r| r.rock)
        .collect();
    let candidates = QAPF_TABLE.iter().filter(|r| matched.contains(&r.rock));
    let (label, (nearest, distance)) = match argmin(candidates, q_pct, a_pct) {
        Some(win) => (RockLabel::Rock(win.0), win),
        None => (
            RockLabel::Unclassified,
            argmin(QAPF_TABLE.iter(), q_pct, a_pct).expect("table is non-empty"),
        ),
    };
    Ok(RockDecision {
        label,
        matched,
        nearest,
        distance,
        q_pct,
        a_pct,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SectionLabel {
    Rock(Rock),
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionDecision {
    pub section_id: String,
    pub votes: Vec<RockDecision>,
    pub label: SectionLabel,
}

/// Strict majority over the classified votes; anything else is indeterminate.
pub fn aggregate_section(
    section_id: &str,
    votes: Vec<RockDecision>,
) -> Result<SectionDecision, PetroError> {
    if votes.is_empty() {
        return Err(PetroError::EmptyVotes);
    }
    let rocks: Vec<Rock> = votes.iter().filter_map(|v| v.label.rock()).collect();
    let label = Rock::ALL
        .iter()
        .copied()
        .find(|&r| 2 * rocks.iter().filter(|&&x| x == r).count() > rocks.len())
        .map_or(SectionLabel::Indeterminate, SectionLabel::Rock);
    Ok(SectionDecision {
        section_id: section_id.to_owned(),
        votes,
        label,
    })
}
