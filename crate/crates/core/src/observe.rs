//! What an app with penetration `p` sees of the lot.
//!
//! Each truck either runs the app or not, so flags are drawn per truck. The
//! draw is coupled across penetration rates: truck `i` gets one uniform
//! `u_i` from the app-user stream and is flagged when `u_i < p`. For a fixed
//! seed the flagged set at `p = 0.1` is therefore a subset of the set at
//! `p = 0.2`, while each rate on its own is an independent Bernoulli
//! thinning.
//!
//! Observed counts are scaled by `1 / (p * green capacity)`, which is an
//! unbiased estimate of the true occupancy ratio.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::scenario::PenetrationRate;
use crate::series::{Grid, RatioSeries};
use crate::sim::{check_sorted, EventLog, ParkingEvent};

/// An event log with a per-truck app-user flag.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FlaggedEventLog {
    pub log: EventLog,
    pub app_user: Vec<bool>,
}

impl FlaggedEventLog {
    pub fn flagged(&self) -> impl Iterator<Item = &ParkingEvent> {
        self.log
            .events
            .iter()
            .zip(&self.app_user)
            .filter_map(|(e, f)| f.then_some(e))
    }

    pub fn flagged_count(&self) -> usize {
        self.app_user.iter().filter(|f| **f).count()
    }
}

/// Count of app-user trucks parked at each grid point.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ObservedCounts {
    pub grid: Grid,
    pub counts: Vec<u32>,
}

/// Observed counts together with their scaled occupancy ratio.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObservedSeries {
    pub grid: Grid,
    pub counts: Vec<u32>,
    pub scaled_ratio: Vec<f64>,
}

impl ObservedSeries {
    pub fn ratios(&self) -> RatioSeries {
        RatioSeries::new(self.grid, self.scaled_ratio.clone())
    }
}

/// Flags each truck independently with probability `p`.
pub fn assign_app_users(log: &EventLog, p: PenetrationRate, seed: u64) -> FlaggedEventLog {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let app_user = log
        .events
        .iter()
        .map(|_| rng.random::<f64>() < p.get())
        .collect();
    FlaggedEventLog {
        log: log.clone(),
        app_user,
    }
}

/// Interval counting over the flagged events only, with the same half-open
/// semantics as [`crate::sim::occupancy_from_events`].
pub fn observed_count_series(flagged: &FlaggedEventLog, grid: Grid) -> Result<ObservedCounts> {
    check_sorted(&flagged.log.events)?;
    let mut diff = vec![0i64; grid.len + 1];
    for e in flagged.flagged() {
        let lo = grid.ceil_index(e.arrival_s);
        let hi = grid.ceil_index(e.departure_s);
        if lo < hi {
            diff[lo] += 1;
            diff[hi] -= 1;
        }
    }
    let mut running = 0i64;
    let counts = diff[..grid.len]
        .iter()
        .map(|d| {
            running += d;
            running as u32
        })
        .collect();
    Ok(ObservedCounts { grid, counts })
}

/// `scaled_ratio(t) = observed_count(t) / (p * green_capacity)`.
pub fn scale_series(
    observed: &ObservedCounts,
    p: PenetrationRate,
    green_capacity: u32,
) -> ObservedSeries {
    let denom = p.get() * f64::from(green_capacity);
    let scaled_ratio = observed
        .counts
        .iter()
        .map(|c| f64::from(*c) / denom)
        .collect();
    ObservedSeries {
        grid: observed.grid,
        counts: observed.counts.clone(),
        scaled_ratio,
    }
}

/// Flag, count and scale in one go.
pub fn observe(
    log: &EventLog,
    grid: Grid,
    p: PenetrationRate,
    green_capacity: u32,
    seed: u64,
) -> Result<(FlaggedEventLog, ObservedSeries)> {
    let flagged = assign_app_users(log, p, seed);
    let counts = observed_count_series(&flagged, grid)?;
    let series = scale_series(&counts, p, green_capacity);
    Ok((flagged, series))
}
