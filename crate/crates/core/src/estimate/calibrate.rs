use serde::Serialize;

use super::labels::{label_curve, LabelSeries, Thresholds};
use crate::error::{Error, Result};
use crate::eval::{extract_transitions, match_transitions, MatchOutcome, MatchWindows};
use crate::series::RatioSeries;

/// Candidate threshold values. Only pairs with `filled < full` are searched.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdGrid {
    pub filled: Vec<f64>,
    pub full: Vec<f64>,
}

impl Default for ThresholdGrid {
    /// filled in {0.50, 0.55, ..., 0.90}, full in {0.85, 0.86, ..., 1.05}.
    fn default() -> Self {
        Self {
            filled: (50..=90).step_by(5).map(|k| f64::from(k) / 100.0).collect(),
            full: (85..=105).map(|k| f64::from(k) / 100.0).collect(),
        }
    }
}

impl ThresholdGrid {
    pub fn single(thresholds: Thresholds) -> Self {
        Self {
            filled: vec![thresholds.filled],
            full: vec![thresholds.full],
        }
    }

    /// Admissible cells in lexicographic order of `(filled, full)`.
    pub fn cells(&self) -> Vec<Thresholds> {
        let mut filled = self.filled.clone();
        let mut full = self.full.clone();
        filled.sort_by(f64::total_cmp);
        full.sort_by(f64::total_cmp);
        let mut cells = Vec::new();
        for &a in &filled {
            for &b in &full {
                if let Ok(t) = Thresholds::new(a, b) {
                    cells.push(t);
                }
            }
        }
        cells
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CalibrationSettings {
    /// Hysteresis used when labeling candidate curves.
    pub hysteresis: f64,
    pub windows: MatchWindows,
    /// Objective cost of one miss or one false alarm, in minutes. Defaults
    /// to the late matching window, the largest delay a match can have.
    pub miss_penalty_min: f64,
}

impl Default for CalibrationSettings {
    fn default() -> Self {
        Self {
            hysteresis: 0.02,
            windows: MatchWindows::default(),
            miss_penalty_min: MatchWindows::default().late_min(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdSearch {
    pub best: Thresholds,
    pub objective: f64,
    pub cells_evaluated: usize,
}

/// Matches the labels of every curve against its truth and pools the result.
pub fn score_curves(
    curves: &[RatioSeries],
    truths: &[LabelSeries],
    thresholds: Thresholds,
    hysteresis: f64,
    windows: MatchWindows,
) -> Result<MatchOutcome> {
    if curves.len() != truths.len() {
        return Err(Error::GridMismatch(format!(
            "{} estimated segments vs {} truth segments",
            curves.len(),
            truths.len()
        )));
    }
    let mut pooled = MatchOutcome::default();
    for (curve, truth) in curves.iter().zip(truths) {
        curve.grid.ensure_same(&truth.grid, "calibration segment")?;
        let est = extract_transitions(&label_curve(curve, thresholds, hysteresis));
        let tru = extract_transitions(truth);
        pooled.extend(match_transitions(&tru, &est, windows));
    }
    Ok(pooled)
}

/// Mean absolute matched delay in minutes plus the miss / false alarm
/// penalty. No matches contribute a mean of zero.
pub fn calibration_objective(outcome: &MatchOutcome, miss_penalty_min: f64) -> f64 {
    let n = outcome.matches.len();
    let mean_abs = if n == 0 {
        0.0
    } else {
        outcome.matches.iter().map(|m| m.delay_s.abs()).sum::<i64>() as f64 / n as f64 / 60.0
    };
    let errors = (outcome.missed.len() + outcome.false_alarms.len()) as f64;
    mean_abs + miss_penalty_min * errors
}

/// Exhaustive search for the thresholds whose labels of `curves` best
/// reproduce the transitions of `truths`. Ties go to the reference pair
/// (0.75, 0.95) if it is among them, otherwise to the lexicographically
/// smallest pair.
pub fn grid_search_thresholds(
    curves: &[RatioSeries],
    truths: &[LabelSeries],
    grid: &ThresholdGrid,
    settings: &CalibrationSettings,
) -> Result<ThresholdSearch> {
    let cells = grid.cells();
    if cells.is_empty() {
        return Err(Error::EmptyThresholdGrid);
    }
    let mut best: Option<(Thresholds, f64)> = None;
    for &cell in &cells {
        let outcome = score_curves(curves, truths, cell, settings.hysteresis, settings.windows)?;
        let objective = calibration_objective(&outcome, settings.miss_penalty_min);
        let better = match best {
            None => true,
            Some((_, b)) => objective < b || (objective == b && cell == Thresholds::REFERENCE),
        };
        if better {
            best = Some((cell, objective));
        }
    }
    let (best, objective) = best.expect("non-empty grid");
    Ok(ThresholdSearch {
        best,
        objective,
        cells_evaluated: cells.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::Grid;

    fn wave() -> RatioSeries {
        let values = (0..288)
            .map(|i| {
                let h = i as f64 / 12.0;
                0.6 + 0.5 * (std::f64::consts::TAU * (h - 10.0) / 24.0).sin()
            })
            .collect();
        RatioSeries::new(Grid::new(0, 300, 288), values)
    }

    #[test]
    fn default_grid_shape() {
        let g = ThresholdGrid::default();
        assert_eq!(g.filled.len(), 9);
        assert_eq!(g.full.len(), 21);
        let cells = g.cells();
        assert!(cells.iter().all(|c| c.filled < c.full));
        assert!(cells.contains(&Thresholds::REFERENCE));
        // 0.85 drops one full value, 0.90 drops six.
        assert_eq!(cells.len(), 9 * 21 - 1 - 6);
    }

    #[test]
    fn single_cell_grid() {
        let curve = wave();
        let truth = label_curve(&curve, Thresholds::REFERENCE, 0.0);
        let cell = Thresholds::new(0.6, 1.0).unwrap();
        let out = grid_search_thresholds(
            &[curve],
            &[truth],
            &ThresholdGrid::single(cell),
            &CalibrationSettings::default(),
        )
        .unwrap();
        assert_eq!(out.best, cell);
        assert_eq!(out.cells_evaluated, 1);
    }

    #[test]
    fn self_consistent_truth_is_a_fixed_point() {
        let curve = wave();
        let truth = label_curve(&curve, Thresholds::REFERENCE, 0.0);
        let settings = CalibrationSettings {
            hysteresis: 0.0,
            ..Default::default()
        };
        let out = grid_search_thresholds(&[curve], &[truth], &ThresholdGrid::default(), &settings)
            .unwrap();
        assert_eq!(out.best, Thresholds::REFERENCE);
        assert_eq!(out.objective, 0.0);
    }

    #[test]
    fn empty_grid_is_an_error() {
        let grid = ThresholdGrid {
            filled: vec![0.9],
            full: vec![0.85],
        };
        assert!(matches!(
            grid_search_thresholds(&[], &[], &grid, &CalibrationSettings::default()),
            Err(Error::EmptyThresholdGrid)
        ));
    }
}
