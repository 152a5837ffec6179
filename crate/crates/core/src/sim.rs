//! Discrete-event simulation of a single parking lot.
//!
//! Trucks arrive as a non-homogeneous Poisson process, draw a stay from the
//! duration mixture, and take the first zone with a free space in the order
//! green, yellow, red. Trucks that find every zone full are turned away and
//! only counted. Each truck parks at most once.
//!
//! Parking intervals are half-open, `[arrival_s, departure_s)`, and all event
//! times are whole seconds. A departure at second `t` therefore frees its
//! space for an arrival at the same second.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scenario::{
    ArrivalProfile, DurationMixture, Stream, ValidatedScenario, ZoneCapacities, ZoneId,
    SECONDS_PER_DAY,
};
use crate::series::{Grid, RatioSeries};

/// Redraws allowed before a truncated duration draw gives up.
pub const MAX_DURATION_RESAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct ParkingEvent {
    pub truck_id: u64,
    pub arrival_s: u64,
    pub departure_s: u64,
    pub zone: ZoneId,
}

impl ParkingEvent {
    pub fn is_parked_at(&self, t_s: u64) -> bool {
        self.arrival_s <= t_s && t_s < self.departure_s
    }
}

/// Parking events sorted by arrival, with truck ids `0..n` in that order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EventLog {
    pub events: Vec<ParkingEvent>,
    pub scenario_fingerprint: String,
}

impl EventLog {
    /// Checks ordering, id density and positive stays.
    pub fn validate(&self) -> Result<()> {
        check_sorted(&self.events)?;
        for (position, e) in self.events.iter().enumerate() {
            if e.truck_id != position as u64 {
                return Err(Error::NonDenseIds {
                    position,
                    found: e.truck_id,
                });
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

pub(crate) fn check_sorted(events: &[ParkingEvent]) -> Result<()> {
    for e in events {
        if e.departure_s <= e.arrival_s {
            return Err(Error::NonPositiveStay {
                truck_id: e.truck_id,
                arrival_s: e.arrival_s,
                departure_s: e.departure_s,
            });
        }
    }
    for pair in events.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if (b.arrival_s, b.truck_id) <= (a.arrival_s, a.truck_id) {
            return Err(Error::Unsorted {
                truck_id: b.truck_id,
            });
        }
    }
    Ok(())
}

/// Parked-truck counts per zone on a regular grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OccupancySeries {
    pub grid: Grid,
    pub green: Vec<u32>,
    pub yellow: Vec<u32>,
    pub red: Vec<u32>,
    pub total: Vec<u32>,
    pub green_capacity: u32,
}

impl OccupancySeries {
    /// `count_total / green capacity`; exceeds 1 under overflow.
    pub fn ratio(&self, index: usize) -> f64 {
        f64::from(self.total[index]) / f64::from(self.green_capacity)
    }

    pub fn ratios(&self) -> RatioSeries {
        let values = (0..self.grid.len).map(|i| self.ratio(i)).collect();
        RatioSeries::new(self.grid, values)
    }

    pub fn zone(&self, zone: ZoneId) -> &[u32] {
        match zone {
            ZoneId::Green => &self.green,
            ZoneId::Yellow => &self.yellow,
            ZoneId::Red => &self.red,
        }
    }
}

/// Output of [`simulate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub log: EventLog,
    pub occupancy: OccupancySeries,
    /// Arrivals turned away because every zone was full.
    pub rejected: u64,
}

/// Arrival instants (seconds since scenario start, strictly increasing) of a
/// Poisson process with the profile's piecewise-constant intensity, drawn by
/// thinning a homogeneous process at the peak rate.
pub fn sample_arrivals(profile: &ArrivalProfile, horizon_days: u32, seed: u64) -> Vec<f64> {
    let peak_per_hour = profile.max_rate();
    if !(peak_per_hour > 0.0) {
        return Vec::new();
    }
    let horizon_s = f64::from(horizon_days) * SECONDS_PER_DAY as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gaps = Exp::new(peak_per_hour / 3600.0).expect("positive rate");

    let mut arrivals = Vec::new();
    let mut t = 0.0f64;
    loop {
        t += gaps.sample(&mut rng);
        if t >= horizon_s {
            break;
        }
        let accept: f64 = rng.random();
        if accept * peak_per_hour < profile.rate_at(t)
            && arrivals.last().is_none_or(|&last| t > last)
        {
            arrivals.push(t);
        }
    }
    arrivals
}

/// One parking duration in whole seconds: pick a component by weight, draw
/// from its Gaussian and redraw while below the minimum. After
/// [`MAX_DURATION_RESAMPLES`] redraws the minimum itself is returned.
pub fn sample_duration<R: Rng + ?Sized>(mixture: &DurationMixture, rng: &mut R) -> u64 {
    let total_weight: f64 = mixture.components.iter().map(|c| c.weight).sum();
    let pick: f64 = rng.random::<f64>() * total_weight;
    let mut acc = 0.0;
    let mut component = mixture.components[mixture.components.len() - 1];
    for c in &mixture.components {
        acc += c.weight;
        if pick < acc {
            component = *c;
            break;
        }
    }

    let min_minutes = mixture.min_duration_minutes;
    let min_s = ((min_minutes * 60.0).ceil() as u64).max(1);
    let mut minutes = min_minutes;
    for _ in 0..=MAX_DURATION_RESAMPLES {
        let z: f64 = StandardNormal.sample(rng);
        let draw = component.mean_minutes + component.stddev_minutes * z;
        if draw >= min_minutes {
            minutes = draw;
            break;
        }
    }
    ((minutes * 60.0).round() as u64).max(min_s)
}

/// Runs the lot for the scenario horizon.
pub fn simulate(scenario: &ValidatedScenario) -> Simulation {
    let config = scenario.config();
    let capacities = config.capacities;
    let arrivals = sample_arrivals(
        &config.arrivals,
        config.horizon_days,
        scenario.stream_seed(Stream::Arrivals),
    );
    let mut duration_rng = ChaCha8Rng::seed_from_u64(scenario.stream_seed(Stream::Durations));

    let mut parked = [0u32; 3];
    let mut departures: BinaryHeap<Reverse<(u64, usize)>> = BinaryHeap::new();
    let mut events = Vec::with_capacity(arrivals.len());
    let mut rejected = 0u64;

    for t in arrivals {
        let arrival_s = t.floor() as u64;
        let stay_s = sample_duration(&config.durations, &mut duration_rng);

        while let Some(&Reverse((dep, zone))) = departures.peek() {
            if dep > arrival_s {
                break;
            }
            departures.pop();
            parked[zone] -= 1;
        }

        let free = ZoneId::ALL
            .into_iter()
            .find(|z| parked[z.index()] < capacities.get(*z));
        match free {
            Some(zone) => {
                let departure_s = arrival_s + stay_s;
                parked[zone.index()] += 1;
                departures.push(Reverse((departure_s, zone.index())));
                events.push(ParkingEvent {
                    truck_id: events.len() as u64,
                    arrival_s,
                    departure_s,
                    zone,
                });
            }
            None => rejected += 1,
        }
    }

    let log = EventLog {
        events,
        scenario_fingerprint: scenario.fingerprint().to_owned(),
    };
    let grid = Grid::covering(scenario.horizon_s(), scenario.grid_step_s());
    let occupancy =
        occupancy_from_events(&log.events, grid, capacities).expect("simulated events are sorted");
    Simulation {
        log,
        occupancy,
        rejected,
    }
}

/// Counts, at every grid point `t`, the events with `arrival_s <= t < departure_s`.
pub fn occupancy_from_events(
    events: &[ParkingEvent],
    grid: Grid,
    capacities: ZoneCapacities,
) -> Result<OccupancySeries> {
    check_sorted(events)?;
    let mut zones = [
        vec![0i64; grid.len + 1],
        vec![0i64; grid.len + 1],
        vec![0i64; grid.len + 1],
    ];
    for e in events {
        let lo = grid.ceil_index(e.arrival_s);
        let hi = grid.ceil_index(e.departure_s);
        if lo < hi {
            let diff = &mut zones[e.zone.index()];
            diff[lo] += 1;
            diff[hi] -= 1;
        }
    }
    let [green, yellow, red] = zones.map(|diff| {
        let mut running = 0i64;
        diff[..grid.len]
            .iter()
            .map(|d| {
                running += d;
                running as u32
            })
            .collect::<Vec<u32>>()
    });
    let total = (0..grid.len)
        .map(|i| green[i] + yellow[i] + red[i])
        .collect();
    Ok(OccupancySeries {
        grid,
        green,
        yellow,
        red,
        total,
        green_capacity: capacities.green,
    })
}
