use serde::Serialize;

use crate::error::{Error, Result};
use crate::scenario::SECONDS_PER_DAY;
use crate::series::RatioSeries;

/// Mean occupancy ratio per time-of-day bin. Bin `b` is anchored at
/// `b * bin_s` seconds after midnight.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DailyProfile {
    pub bin_s: u64,
    pub values: Vec<f64>,
}

impl DailyProfile {
    pub fn new(bin_s: u64, values: Vec<f64>) -> Result<DailyProfile> {
        if bin_s == 0 || SECONDS_PER_DAY % bin_s != 0 {
            return Err(Error::GridMismatch(format!(
                "profile bin of {bin_s} s does not divide a day"
            )));
        }
        let expected = (SECONDS_PER_DAY / bin_s) as usize;
        if values.len() != expected {
            return Err(Error::GridMismatch(format!(
                "profile has {} bins, expected {expected}",
                values.len()
            )));
        }
        if let Some(b) = values.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::GridMismatch(format!(
                "profile bin {b} is negative or not finite"
            )));
        }
        Ok(DailyProfile { bin_s, values })
    }

    pub fn is_all_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }

    /// Linear interpolation between bin anchors, clamped at both ends.
    pub fn at(&self, t_day_s: f64) -> f64 {
        let x = t_day_s / self.bin_s as f64;
        let last = self.values.len() - 1;
        if !(x > 0.0) {
            return self.values[0];
        }
        if x >= last as f64 {
            return self.values[last];
        }
        let i = x.floor() as usize;
        let frac = x - i as f64;
        self.values[i] + frac * (self.values[i + 1] - self.values[i])
    }
}

/// Mean over `training_days` of each day's bin-averaged curve. A bin with no
/// samples copies the bin before it; the first bin falls back to zero.
pub fn daily_mean_profile(
    scaled: &RatioSeries,
    training_days: &[usize],
    bin_s: u64,
) -> Result<DailyProfile> {
    if training_days.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    if bin_s == 0 || SECONDS_PER_DAY % bin_s != 0 {
        return Err(Error::GridMismatch(format!(
            "profile bin of {bin_s} s does not divide a day"
        )));
    }
    let bins = (SECONDS_PER_DAY / bin_s) as usize;
    let mut mean = vec![0.0; bins];
    for &day in training_days {
        let mut sums = vec![0.0; bins];
        let mut counts = vec![0usize; bins];
        for i in scaled.grid.day_range(day) {
            let t_day = scaled.grid.time(i) % SECONDS_PER_DAY;
            let b = (t_day / bin_s) as usize;
            sums[b] += scaled.values[i];
            counts[b] += 1;
        }
        let mut previous = 0.0;
        for b in 0..bins {
            let v = if counts[b] > 0 {
                sums[b] / counts[b] as f64
            } else {
                previous
            };
            mean[b] += v;
            previous = v;
        }
    }
    let n = training_days.len() as f64;
    for v in &mut mean {
        *v /= n;
    }
    DailyProfile::new(bin_s, mean)
}
