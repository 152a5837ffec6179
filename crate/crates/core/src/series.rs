//! Regular time grids and real-valued series on them.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scenario::SECONDS_PER_DAY;

/// `len` points at `start_s + k * step_s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Grid {
    pub start_s: u64,
    pub step_s: u64,
    pub len: usize,
}

impl Grid {
    pub fn new(start_s: u64, step_s: u64, len: usize) -> Self {
        assert!(step_s > 0, "grid step must be positive");
        Self {
            start_s,
            step_s,
            len,
        }
    }

    /// Grid covering `[0, horizon_s)`.
    pub fn covering(horizon_s: u64, step_s: u64) -> Self {
        Self::new(0, step_s, horizon_s.div_ceil(step_s) as usize)
    }

    pub fn time(&self, index: usize) -> u64 {
        self.start_s + index as u64 * self.step_s
    }

    pub fn end_s(&self) -> u64 {
        self.time(self.len)
    }

    pub fn times(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.len).map(|i| self.time(i))
    }

    /// Index of the point at exactly `t_s`, if there is one.
    pub fn index_of(&self, t_s: u64) -> Option<usize> {
        if t_s < self.start_s || (t_s - self.start_s) % self.step_s != 0 {
            return None;
        }
        let i = ((t_s - self.start_s) / self.step_s) as usize;
        (i < self.len).then_some(i)
    }

    /// First index whose time is `>= t_s`.
    pub(crate) fn ceil_index(&self, t_s: u64) -> usize {
        if t_s <= self.start_s {
            0
        } else {
            ((t_s - self.start_s).div_ceil(self.step_s) as usize).min(self.len)
        }
    }

    /// The coarser grid formed by every `factor`-th point.
    pub fn decimate(&self, factor: usize) -> Grid {
        assert!(factor > 0);
        Grid::new(
            self.start_s,
            self.step_s * factor as u64,
            self.len.div_ceil(factor),
        )
    }

    pub fn points_per_day(&self) -> usize {
        (SECONDS_PER_DAY / self.step_s) as usize
    }

    /// Indices of the points that fall on scenario day `day`.
    pub fn day_range(&self, day: usize) -> std::ops::Range<usize> {
        let lo = self.ceil_index(day as u64 * SECONDS_PER_DAY);
        let hi = self.ceil_index((day as u64 + 1) * SECONDS_PER_DAY);
        lo..hi
    }

    pub fn ensure_same(&self, other: &Grid, what: &str) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{what}: {}+{}x{} vs {}+{}x{}",
                self.start_s, self.step_s, self.len, other.start_s, other.step_s, other.len
            )))
        }
    }
}

/// Occupancy ratios (or any real-valued curve) on a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioSeries {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl RatioSeries {
    pub fn new(grid: Grid, values: Vec<f64>) -> Self {
        assert_eq!(grid.len, values.len(), "series length must match its grid");
        Self { grid, values }
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        Self::new(grid, vec![value; grid.len])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Sample every `factor`-th point.
    pub fn decimate(&self, factor: usize) -> RatioSeries {
        let values = self.values.iter().copied().step_by(factor).collect();
        RatioSeries::new(self.grid.decimate(factor), values)
    }

    /// Resample onto `target`, whose points must all lie on this grid.
    pub fn sample_on(&self, target: &Grid) -> Result<RatioSeries> {
        let mut values = Vec::with_capacity(target.len);
        for t in target.times() {
            let i = self.grid.index_of(t).ok_or_else(|| {
                Error::GridMismatch(format!("t = {t} s is not a point of the source grid"))
            })?;
            values.push(self.values[i]);
        }
        Ok(RatioSeries::new(*target, values))
    }

    /// The first `len` points.
    pub fn truncated(&self, len: usize) -> RatioSeries {
        let len = len.min(self.len());
        RatioSeries::new(
            Grid::new(self.grid.start_s, self.grid.step_s, len),
            self.values[..len].to_vec(),
        )
    }
}
