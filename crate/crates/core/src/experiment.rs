//! The full study: simulate, observe at each penetration rate, calibrate,
//! estimate and score.
//!
//! Every day of the horizon is evaluated leave-one-out: its thresholds are
//! grid-searched on the naive curves of the other days, and its mean-day
//! profile is the mean of the other days. Transitions are extracted and
//! matched per day and pooled into one [`DelayTable`] per
//! (penetration, method).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::estimate::{
    daily_mean_profile, grid_search_thresholds, ground_truth_labels, label_curve, meanday_curve,
    naive_curve, CalibrationSettings, LabelSeries, MeanDaySettings, StateLabel, ThresholdGrid,
    Thresholds,
};
use crate::eval::{
    delay_table, extract_transitions, match_transitions, DelayTable, MatchOutcome, MatchWindows,
};
use crate::observe::{observe, FlaggedEventLog, ObservedSeries};
use crate::scenario::{PenetrationRate, Stream, ValidatedScenario};
use crate::series::{Grid, RatioSeries};
use crate::sim::{simulate, Simulation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Naive,
    MeanDay,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Naive => "naive",
            Method::MeanDay => "meanday",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "naive" => Ok(Method::Naive),
            "meanday" => Ok(Method::MeanDay),
            other => Err(format!("unknown method `{other}` (expected naive|meanday)")),
        }
    }
}

/// Estimator and scoring knobs for one study.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimationSettings {
    /// Thresholds that define the true states.
    pub truth_thresholds: Thresholds,
    /// Trailing moving-average window of the naive estimator.
    pub window_s: u64,
    pub hysteresis: f64,
    /// When false, the estimators use `truth_thresholds` directly.
    pub calibrate: bool,
    pub threshold_grid: ThresholdGrid,
    pub windows: MatchWindows,
    pub miss_penalty_min: f64,
    pub meanday: MeanDaySettings,
    pub profile_bin_s: u64,
    /// Grid-search the mean-day thresholds on mean-day curves instead of
    /// reusing the naive thresholds.
    pub recalibrate_meanday: bool,
}

impl Default for EstimationSettings {
    fn default() -> Self {
        Self {
            truth_thresholds: Thresholds::REFERENCE,
            window_s: 1800,
            hysteresis: 0.02,
            calibrate: true,
            threshold_grid: ThresholdGrid::default(),
            windows: MatchWindows::default(),
            miss_penalty_min: MatchWindows::default().late_min(),
            meanday: MeanDaySettings::default(),
            profile_bin_s: 300,
            recalibrate_meanday: false,
        }
    }
}

impl EstimationSettings {
    fn calibration(&self) -> CalibrationSettings {
        CalibrationSettings {
            hysteresis: self.hysteresis,
            windows: self.windows,
            miss_penalty_min: self.miss_penalty_min,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DayResult {
    pub day: usize,
    pub thresholds: Thresholds,
    pub outcome: MatchOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodResult {
    pub method: Method,
    /// Estimated curve over the whole horizon, on the evaluation grid.
    pub curve: RatioSeries,
    pub labels: LabelSeries,
    pub days: Vec<DayResult>,
    pub outcome: MatchOutcome,
    pub table: DelayTable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PenetrationRun {
    pub penetration: PenetrationRate,
    pub flagged: FlaggedEventLog,
    pub observed: ObservedSeries,
    pub methods: Vec<MethodResult>,
}

impl PenetrationRun {
    pub fn method(&self, method: Method) -> Option<&MethodResult> {
        self.methods.iter().find(|m| m.method == method)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub simulation: Simulation,
    pub eval_grid: Grid,
    pub truth_labels: LabelSeries,
    pub runs: Vec<PenetrationRun>,
}

/// Observations of one day read at the evaluation ticks, split per day.
#[derive(Debug, Clone)]
struct DaySegments {
    truth: Vec<LabelSeries>,
    naive: Vec<RatioSeries>,
    scaled: Vec<RatioSeries>,
}

fn split_days(series: &RatioSeries, days: usize) -> Vec<RatioSeries> {
    (0..days)
        .map(|d| {
            let r = series.grid.day_range(d);
            let grid = Grid::new(series.grid.time(r.start), series.grid.step_s, r.len());
            RatioSeries::new(grid, series.values[r].to_vec())
        })
        .collect()
}

fn concat_curves(grid: Grid, parts: &[RatioSeries]) -> RatioSeries {
    RatioSeries::new(
        grid,
        parts
            .iter()
            .flat_map(|p| p.values.iter().copied())
            .collect(),
    )
}

fn concat_labels(grid: Grid, parts: &[LabelSeries]) -> LabelSeries {
    LabelSeries::new(
        grid,
        parts
            .iter()
            .flat_map(|p| p.labels.iter().copied())
            .collect(),
    )
}

fn others(day: usize, days: usize) -> Vec<usize> {
    (0..days).filter(|d| *d != day).collect()
}

fn pick<T: Clone>(items: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|i| items[*i].clone()).collect()
}

fn thresholds_for(
    day: usize,
    curves: &[RatioSeries],
    truths: &[LabelSeries],
    settings: &EstimationSettings,
) -> Result<Thresholds> {
    if !settings.calibrate {
        return Ok(settings.truth_thresholds);
    }
    let train = others(day, curves.len());
    let search = grid_search_thresholds(
        &pick(curves, &train),
        &pick(truths, &train),
        &settings.threshold_grid,
        &settings.calibration(),
    )?;
    Ok(search.best)
}

fn score_day(truth: &LabelSeries, labels: &LabelSeries, windows: MatchWindows) -> MatchOutcome {
    match_transitions(
        &extract_transitions(truth),
        &extract_transitions(labels),
        windows,
    )
}

fn run_method(
    method: Method,
    segments: &DaySegments,
    scaled: &RatioSeries,
    eval_grid: Grid,
    settings: &EstimationSettings,
) -> Result<MethodResult> {
    let days = segments.truth.len();
    let naive_thresholds: Vec<Thresholds> = (0..days)
        .map(|d| thresholds_for(d, &segments.naive, &segments.truth, settings))
        .collect::<Result<_>>()?;

    let (curves, thresholds) = match method {
        Method::Naive => (segments.naive.clone(), naive_thresholds),
        Method::MeanDay => {
            let curves: Vec<RatioSeries> = (0..days)
                .map(|d| {
                    let profile =
                        daily_mean_profile(scaled, &others(d, days), settings.profile_bin_s)?;
                    let fitted = meanday_curve(
                        &profile,
                        &segments.scaled[d],
                        &segments.naive[d],
                        &settings.meanday,
                    )?;
                    Ok(fitted.curve)
                })
                .collect::<Result<_>>()?;
            let thresholds = if settings.recalibrate_meanday {
                (0..days)
                    .map(|d| thresholds_for(d, &curves, &segments.truth, settings))
                    .collect::<Result<_>>()?
            } else {
                naive_thresholds
            };
            (curves, thresholds)
        }
    };

    let mut day_results = Vec::with_capacity(days);
    let mut day_labels = Vec::with_capacity(days);
    let mut pooled = MatchOutcome::default();
    for d in 0..days {
        let labels = label_curve(&curves[d], thresholds[d], settings.hysteresis);
        let outcome = score_day(&segments.truth[d], &labels, settings.windows);
        pooled.extend(outcome.clone());
        day_results.push(DayResult {
            day: d,
            thresholds: thresholds[d],
            outcome,
        });
        day_labels.push(labels);
    }

    Ok(MethodResult {
        method,
        curve: concat_curves(eval_grid, &curves),
        labels: concat_labels(eval_grid, &day_labels),
        days: day_results,
        table: delay_table(&pooled),
        outcome: pooled,
    })
}

/// Sampling, estimation and scoring at one penetration rate on an existing
/// simulation.
pub fn run_penetration(
    scenario: &ValidatedScenario,
    simulation: &Simulation,
    truth_labels: &LabelSeries,
    penetration: PenetrationRate,
    sampling_seed: u64,
    methods: &[Method],
    settings: &EstimationSettings,
) -> Result<PenetrationRun> {
    let grid = simulation.occupancy.grid;
    let eval_grid = truth_labels.grid;
    let (flagged, observed) = observe(
        &simulation.log,
        grid,
        penetration,
        scenario.capacities().green,
        sampling_seed,
    )?;
    let scaled = observed.ratios();
    let days = scenario.horizon_days() as usize;

    let naive = naive_curve(&scaled, settings.window_s, &eval_grid)?;
    let segments = DaySegments {
        truth: (0..days)
            .map(|d| truth_labels.slice(eval_grid.day_range(d)))
            .collect(),
        naive: split_days(&naive, days),
        scaled: split_days(&scaled.sample_on(&eval_grid)?, days),
    };

    let methods = methods
        .iter()
        .map(|m| run_method(*m, &segments, &scaled, eval_grid, settings))
        .collect::<Result<_>>()?;
    Ok(PenetrationRun {
        penetration,
        flagged,
        observed,
        methods,
    })
}

/// The whole study for one scenario.
pub fn run_experiment(
    scenario: &ValidatedScenario,
    penetrations: &[PenetrationRate],
    methods: &[Method],
    settings: &EstimationSettings,
) -> Result<Experiment> {
    let simulation = simulate(scenario);
    let eval_grid = Grid::covering(scenario.horizon_s(), scenario.eval_step_s());
    let truth_labels =
        ground_truth_labels(&simulation.occupancy, settings.truth_thresholds, &eval_grid)?;
    let sampling_seed = scenario.stream_seed(Stream::AppUsers);
    let runs = penetrations
        .iter()
        .map(|p| {
            run_penetration(
                scenario,
                &simulation,
                &truth_labels,
                *p,
                sampling_seed,
                methods,
                settings,
            )
        })
        .collect::<Result<_>>()?;
    Ok(Experiment {
        simulation,
        eval_grid,
        truth_labels,
        runs,
    })
}

/// Labels as small integers (empty 0, slightly filled 1, full 2) for plotting.
pub fn label_levels(labels: &[StateLabel]) -> Vec<u8> {
    labels.iter().map(|l| l.level()).collect()
}
