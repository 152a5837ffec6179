//! Online occupancy-state estimation from sparse observations.
//!
//! Two estimators share the same final step, hysteresis labeling of a
//! real-valued curve:
//!
//! * **naive**: a trailing moving average of the scaled observations;
//! * **mean day**: the daily mean profile of the training days, stretched
//!   and shifted to fit the part of the current day seen so far.
//!
//! Both are causal: the label at tick `t` depends on observations up to
//! `t` only.

mod calibrate;
mod labels;
mod meanday;
mod profile;
mod smooth;
mod warp;

pub use calibrate::{
    calibration_objective, grid_search_thresholds, score_curves, CalibrationSettings,
    ThresholdGrid, ThresholdSearch,
};
pub use labels::{
    classify, ground_truth_labels, label_curve, label_point, LabelSeries, StateLabel, Thresholds,
};
pub use meanday::{estimate_labels_meanday, meanday_curve, MeanDayCurve, MeanDaySettings};
pub use profile::{daily_mean_profile, DailyProfile};
pub use smooth::{smooth_causal, smooth_centered};
pub use warp::{fit_warp, WarpFit, WarpFitter, WarpParams, WarpSearch};

use crate::error::Result;
use crate::series::{Grid, RatioSeries};

/// Smoothed observations read at the evaluation ticks.
pub fn naive_curve(scaled: &RatioSeries, window_s: u64, eval_grid: &Grid) -> Result<RatioSeries> {
    smooth_causal(scaled, window_s).sample_on(eval_grid)
}

/// Labels from thresholding the trailing mean of the scaled observations.
pub fn estimate_labels_naive(
    scaled: &RatioSeries,
    thresholds: Thresholds,
    window_s: u64,
    hysteresis: f64,
    eval_grid: &Grid,
) -> Result<LabelSeries> {
    let curve = naive_curve(scaled, window_s, eval_grid)?;
    Ok(label_curve(&curve, thresholds, hysteresis))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_lot_full_observation() {
        let grid = Grid::new(0, 60, 600);
        let scaled = RatioSeries::constant(grid, 1.1);
        let labels = estimate_labels_naive(
            &scaled,
            Thresholds::REFERENCE,
            1800,
            0.02,
            &grid.decimate(5),
        )
        .unwrap();
        assert!(labels.labels.iter().all(|l| *l == StateLabel::Full));
    }

    #[test]
    fn no_observations_all_empty() {
        let grid = Grid::new(0, 60, 600);
        let scaled = RatioSeries::constant(grid, 0.0);
        let labels = estimate_labels_naive(
            &scaled,
            Thresholds::REFERENCE,
            1800,
            0.02,
            &grid.decimate(5),
        )
        .unwrap();
        assert!(labels.labels.iter().all(|l| *l == StateLabel::Empty));
    }
}
