use parkstate::estimate::{estimate_labels_naive, ground_truth_labels, ThresholdGrid, Thresholds};
use parkstate::eval::{extract_transitions, match_transitions, MatchWindows, TransitionKind};
use parkstate::experiment::{run_experiment, EstimationSettings, Method};
use parkstate::observe::observe;
use parkstate::scenario::{PenetrationRate, ScenarioConfig, ZoneCapacities, ZoneId};
use parkstate::series::Grid;
use parkstate::sim::{occupancy_from_events, simulate, EventLog, OccupancySeries, ParkingEvent};

/// z-test per grid point, Bonferroni over all points: each count is
/// Binomial(true count, p), so the mean of the scaled ratio over seeds has a
/// known standard error.
#[test]
fn scaled_ratio_is_unbiased() {
    let scenario = ScenarioConfig::default_scenario().validate().unwrap();
    let sim = simulate(&scenario);
    let grid = sim.occupancy.grid;
    let p = 0.2;
    let seeds = 200u64;
    let mut sums = vec![0.0; grid.len];
    for s in 0..seeds {
        let (_, obs) = observe(
            &sim.log,
            grid,
            PenetrationRate::new(p).unwrap(),
            100,
            1000 + s,
        )
        .unwrap();
        for (acc, v) in sums.iter_mut().zip(&obs.scaled_ratio) {
            *acc += v;
        }
    }
    let mut worst: f64 = 0.0;
    let mut tested = 0;
    for i in 0..grid.len {
        let n = f64::from(sim.occupancy.total[i]);
        if n < 20.0 {
            continue;
        }
        tested += 1;
        let mean = sums[i] / seeds as f64;
        let truth = sim.occupancy.ratio(i);
        let se = (n * (1.0 - p) / p).sqrt() / 100.0 / (seeds as f64).sqrt();
        worst = worst.max(((mean - truth) / se).abs());
    }
    assert!(tested > 10_000);
    // two-sided 1e-3 family-wise level over ~3e4 points
    assert!(worst < 5.5, "max |z| = {worst}");
}

#[test]
fn perfect_observation_reproduces_truth() {
    let scenario = ScenarioConfig::default_scenario().validate().unwrap();
    let settings = EstimationSettings {
        window_s: scenario.grid_step_s(),
        hysteresis: 0.0,
        ..Default::default()
    };
    let exp = run_experiment(
        &scenario,
        &[PenetrationRate::new(1.0).unwrap()],
        &[Method::Naive],
        &settings,
    )
    .unwrap();
    let m = &exp.runs[0].methods[0];
    assert!(m.outcome.missed.is_empty());
    assert!(m.outcome.false_alarms.is_empty());
    assert!(!m.outcome.matches.is_empty());
    assert!(m.outcome.matches.iter().all(|x| x.delay_s == 0));
    assert!(m.days.iter().all(|d| d.thresholds == Thresholds::REFERENCE));
}

#[test]
fn experiment_is_deterministic() {
    let mut config = ScenarioConfig::default_scenario();
    config.horizon_days = 4;
    let scenario = config.validate().unwrap();
    let rates = [
        PenetrationRate::new(0.1).unwrap(),
        PenetrationRate::new(0.2).unwrap(),
    ];
    let methods = [Method::Naive, Method::MeanDay];
    let settings = EstimationSettings::default();
    let a = run_experiment(&scenario, &rates, &methods, &settings).unwrap();
    let b = run_experiment(&scenario, &rates, &methods, &settings).unwrap();
    assert_eq!(a, b);
}

#[test]
fn calibrated_thresholds_lie_on_the_grid() {
    let mut config = ScenarioConfig::default_scenario();
    config.horizon_days = 4;
    let scenario = config.validate().unwrap();
    let grid = ThresholdGrid::default();
    let exp = run_experiment(
        &scenario,
        &[PenetrationRate::new(0.1).unwrap()],
        &[Method::Naive],
        &EstimationSettings::default(),
    )
    .unwrap();
    for d in &exp.runs[0].methods[0].days {
        let t = d.thresholds;
        assert!(t.filled < t.full);
        assert!(grid.filled.contains(&t.filled) && grid.full.contains(&t.full));
    }
}

/// 150 trucks arrive every 4 minutes from 06:00 and stay 16 hours.
fn ramp() -> (EventLog, OccupancySeries) {
    let events: Vec<ParkingEvent> = (0..150u64)
        .map(|i| ParkingEvent {
            truck_id: i,
            arrival_s: 21_600 + i * 240,
            departure_s: 21_600 + i * 240 + 57_600,
            zone: ZoneId::Green,
        })
        .collect();
    let caps = ZoneCapacities {
        green: 1000,
        yellow: 0,
        red: 0,
    };
    let mut occ = occupancy_from_events(&events, Grid::new(0, 60, 1440), caps).unwrap();
    occ.green_capacity = 100;
    (
        EventLog {
            events,
            scenario_fingerprint: String::new(),
        },
        occ,
    )
}

#[test]
fn fill_up_ramp_detection_delays_are_pinned() {
    let (log, occ) = ramp();
    let eval = occ.grid.decimate(5);
    let truth =
        extract_transitions(&ground_truth_labels(&occ, Thresholds::REFERENCE, &eval).unwrap());
    let p = PenetrationRate::new(0.2).unwrap();
    let mut delays_min = Vec::new();
    for seed in 0..10 {
        let (_, obs) = observe(&log, occ.grid, p, 100, seed).unwrap();
        let labels =
            estimate_labels_naive(&obs.ratios(), Thresholds::REFERENCE, 1800, 0.02, &eval).unwrap();
        let out = match_transitions(
            &truth,
            &extract_transitions(&labels),
            MatchWindows::default(),
        );
        delays_min.push(
            out.matches
                .iter()
                .find(|m| m.truth.kind() == TransitionKind::SlightlyFilledToFull)
                .map(|m| m.delay_s / 60),
        );
    }
    assert_eq!(
        delays_min,
        [
            Some(155),
            Some(70),
            None,
            Some(60),
            None,
            Some(50),
            Some(75),
            Some(-20),
            Some(40),
            Some(75)
        ]
    );
    let within = delays_min
        .iter()
        .flatten()
        .filter(|d| d.abs() <= 90)
        .count();
    assert_eq!(within, 7);
}

#[test]
fn app_sampling_does_not_change_the_simulation() {
    let scenario = ScenarioConfig::default_scenario().validate().unwrap();
    let a = run_experiment(
        &scenario,
        &[PenetrationRate::new(0.1).unwrap()],
        &[Method::Naive],
        &EstimationSettings::default(),
    )
    .unwrap();
    assert_eq!(a.simulation, simulate(&scenario));
}
