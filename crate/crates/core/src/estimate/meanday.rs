use serde::Serialize;

use super::labels::{label_curve, LabelSeries, Thresholds};
use super::profile::DailyProfile;
use super::warp::{WarpFit, WarpFitter, WarpSearch};
use crate::error::Result;
use crate::scenario::SECONDS_PER_DAY;
use crate::series::RatioSeries;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanDaySettings {
    /// Minimum spacing between two warp refits.
    pub refit_every_s: u64,
    /// Both regularizer weights are this factor times the number of samples
    /// in the fit.
    pub lambda_per_sample: f64,
    pub search: WarpSearch,
}

impl Default for MeanDaySettings {
    fn default() -> Self {
        Self {
            refit_every_s: 300,
            lambda_per_sample: 0.1,
            search: WarpSearch::default(),
        }
    }
}

/// The online stretch-fit curve of one day and the fit in force at each tick.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanDayCurve {
    pub curve: RatioSeries,
    pub fits: Vec<WarpFit>,
    /// Ticks where the fit was degenerate and the fallback value was used.
    pub fallback_ticks: usize,
}

/// Walks through `today` (scaled observations on the evaluation grid of a
/// single day), refitting the warped profile on the prefix seen so far and
/// reading the fitted curve at the current tick. Ticks with a degenerate fit
/// take the value of `fallback` instead.
pub fn meanday_curve(
    profile: &DailyProfile,
    today: &RatioSeries,
    fallback: &RatioSeries,
    settings: &MeanDaySettings,
) -> Result<MeanDayCurve> {
    today
        .grid
        .ensure_same(&fallback.grid, "mean-day fallback curve")?;
    let mut fitter = WarpFitter::new(profile, settings.search);
    let mut values = Vec::with_capacity(today.len());
    let mut fits = Vec::with_capacity(today.len());
    let mut fallback_ticks = 0;
    let mut current: Option<(u64, WarpFit)> = None;

    for (i, &y) in today.values.iter().enumerate() {
        let t = today.grid.time(i);
        let t_day = (t % SECONDS_PER_DAY) as f64;
        fitter.push(t_day, y);

        let due = match current {
            None => true,
            Some((fitted_at, _)) => t - fitted_at >= settings.refit_every_s,
        };
        if due {
            let lambda = settings.lambda_per_sample * fitter.len() as f64;
            current = Some((t, fitter.fit(lambda, lambda)));
        }
        let (_, fit) = current.expect("fitted above");
        if fit.degenerate {
            fallback_ticks += 1;
            values.push(fallback.values[i]);
        } else {
            values.push(fit.params.apply(profile, t_day));
        }
        fits.push(fit);
    }

    Ok(MeanDayCurve {
        curve: RatioSeries::new(today.grid, values),
        fits,
        fallback_ticks,
    })
}

/// Labels from the stretch-fit curve of one day.
pub fn estimate_labels_meanday(
    profile: &DailyProfile,
    today: &RatioSeries,
    fallback: &RatioSeries,
    thresholds: Thresholds,
    hysteresis: f64,
    settings: &MeanDaySettings,
) -> Result<LabelSeries> {
    let fitted = meanday_curve(profile, today, fallback, settings)?;
    Ok(label_curve(&fitted.curve, thresholds, hysteresis))
}
