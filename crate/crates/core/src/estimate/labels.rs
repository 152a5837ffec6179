use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, Result};
use crate::series::{Grid, RatioSeries};
use crate::sim::OccupancySeries;

/// Discrete occupancy state, ordered `Empty < SlightlyFilled < Full`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateLabel {
    Empty,
    SlightlyFilled,
    Full,
}

impl StateLabel {
    pub const ALL: [StateLabel; 3] = [
        StateLabel::Empty,
        StateLabel::SlightlyFilled,
        StateLabel::Full,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StateLabel::Empty => "empty",
            StateLabel::SlightlyFilled => "slightly_filled",
            StateLabel::Full => "full",
        }
    }

    /// Human-readable name as used in rendered tables.
    pub fn display_name(self) -> &'static str {
        match self {
            StateLabel::Empty => "empty",
            StateLabel::SlightlyFilled => "slightly filled",
            StateLabel::Full => "full",
        }
    }

    pub fn level(self) -> u8 {
        self as u8
    }

    pub fn from_level(level: u8) -> StateLabel {
        match level {
            0 => StateLabel::Empty,
            1 => StateLabel::SlightlyFilled,
            _ => StateLabel::Full,
        }
    }
}

impl fmt::Display for StateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StateLabel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "empty" => Ok(StateLabel::Empty),
            "slightly_filled" => Ok(StateLabel::SlightlyFilled),
            "full" => Ok(StateLabel::Full),
            other => Err(format!(
                "unknown label `{other}` (expected empty|slightly_filled|full)"
            )),
        }
    }
}

/// Lower bounds of the slightly-filled and full states, as occupancy ratios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub filled: f64,
    pub full: f64,
}

impl Thresholds {
    /// 75 % for slightly filled, 95 % for full.
    pub const REFERENCE: Thresholds = Thresholds {
        filled: 0.75,
        full: 0.95,
    };

    /// Requires `0 < filled < full <= 1.5`.
    pub fn new(filled: f64, full: f64) -> Result<Thresholds, ConfigError> {
        if !(filled > 0.0 && filled < full && full <= 1.5) {
            return Err(ConfigError::new(
                "thresholds",
                format!("need 0 < filled < full <= 1.5, got ({filled}, {full})"),
            ));
        }
        Ok(Thresholds { filled, full })
    }

    fn of_level(&self, level: u8) -> f64 {
        if level == 1 {
            self.filled
        } else {
            self.full
        }
    }
}

/// The plain discretization without hysteresis.
pub fn classify(ratio: f64, thresholds: Thresholds) -> StateLabel {
    if ratio >= thresholds.full {
        StateLabel::Full
    } else if ratio >= thresholds.filled {
        StateLabel::SlightlyFilled
    } else {
        StateLabel::Empty
    }
}

/// Discretizes `ratio` given the label emitted at the previous tick.
///
/// Moving up into a level requires `ratio >= threshold + band`; moving down
/// out of a level requires `ratio < threshold - band`. Otherwise the previous
/// label is kept. With `band == 0` this reduces to [`classify`].
pub fn label_point(
    ratio: f64,
    thresholds: Thresholds,
    band: f64,
    previous: StateLabel,
) -> StateLabel {
    let prev = previous.level();
    let mut up = prev;
    while up < 2 && ratio >= thresholds.of_level(up + 1) + band {
        up += 1;
    }
    if up > prev {
        return StateLabel::from_level(up);
    }
    let mut down = prev;
    while down > 0 && ratio < thresholds.of_level(down) - band {
        down -= 1;
    }
    StateLabel::from_level(down)
}

/// One label per evaluation tick.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LabelSeries {
    pub grid: Grid,
    pub labels: Vec<StateLabel>,
}

impl LabelSeries {
    pub fn new(grid: Grid, labels: Vec<StateLabel>) -> Self {
        assert_eq!(grid.len, labels.len(), "one label per grid point");
        Self { grid, labels }
    }

    pub fn slice(&self, range: std::ops::Range<usize>) -> LabelSeries {
        let grid = Grid::new(self.grid.time(range.start), self.grid.step_s, range.len());
        LabelSeries::new(grid, self.labels[range].to_vec())
    }
}

/// Labels a curve online. The first point takes its plain classification;
/// every later point goes through [`label_point`] with the label before it.
pub fn label_curve(curve: &RatioSeries, thresholds: Thresholds, band: f64) -> LabelSeries {
    let mut labels = Vec::with_capacity(curve.len());
    let mut previous = None;
    for &v in &curve.values {
        let label = match previous {
            None => classify(v, thresholds),
            Some(p) => label_point(v, thresholds, band, p),
        };
        labels.push(label);
        previous = Some(label);
    }
    LabelSeries::new(curve.grid, labels)
}

/// Reference labels: the true ratio sampled on `eval_grid` and discretized
/// without hysteresis.
pub fn ground_truth_labels(
    truth: &OccupancySeries,
    thresholds: Thresholds,
    eval_grid: &Grid,
) -> Result<LabelSeries> {
    let sampled = truth.ratios().sample_on(eval_grid)?;
    Ok(label_curve(&sampled, thresholds, 0.0))
}
