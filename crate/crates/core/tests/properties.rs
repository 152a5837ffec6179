use parkstate::estimate::{
    classify, label_curve, label_point, meanday_curve, naive_curve, DailyProfile, LabelSeries,
    MeanDaySettings, StateLabel, Thresholds, WarpFitter, WarpParams, WarpSearch,
};
use parkstate::eval::{
    delay_table, extract_transitions, match_transitions, MatchWindows, TransitionKind,
};
use parkstate::observe::{assign_app_users, observed_count_series};
use parkstate::scenario::{PenetrationRate, ScenarioConfig, ZoneCapacities, ZoneId};
use parkstate::series::{Grid, RatioSeries};
use parkstate::sim::{occupancy_from_events, simulate, EventLog, ParkingEvent};
use proptest::prelude::*;

fn label() -> impl Strategy<Value = StateLabel> {
    prop_oneof![
        Just(StateLabel::Empty),
        Just(StateLabel::SlightlyFilled),
        Just(StateLabel::Full)
    ]
}

fn thresholds() -> impl Strategy<Value = Thresholds> {
    (0.1f64..1.0, 0.01f64..0.5).prop_map(|(a, gap)| Thresholds::new(a, (a + gap).min(1.5)).unwrap())
}

fn label_series(max_len: usize) -> impl Strategy<Value = LabelSeries> {
    prop::collection::vec(label(), 1..max_len)
        .prop_map(|labels| LabelSeries::new(Grid::new(0, 300, labels.len()), labels))
}

fn random_log(max_events: usize, horizon: u64) -> impl Strategy<Value = Vec<ParkingEvent>> {
    prop::collection::vec((0..horizon, 1..horizon / 2), 0..max_events).prop_map(|pairs| {
        let mut raw: Vec<(u64, u64)> = pairs;
        raw.sort();
        raw.into_iter()
            .enumerate()
            .map(|(i, (a, d))| ParkingEvent {
                truck_id: i as u64,
                arrival_s: a,
                departure_s: a + d,
                zone: ZoneId::Green,
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn label_point_is_monotone_in_ratio(
        a in 0.0f64..1.6, b in 0.0f64..1.6, th in thresholds(), band in 0.0f64..0.1, prev in label()
    ) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(label_point(lo, th, band, prev) <= label_point(hi, th, band, prev));
    }

    #[test]
    fn zero_band_ignores_previous_label(ratio in 0.0f64..1.6, th in thresholds()) {
        let expected = classify(ratio, th);
        for prev in [StateLabel::Empty, StateLabel::SlightlyFilled, StateLabel::Full] {
            prop_assert_eq!(label_point(ratio, th, 0.0, prev), expected);
        }
    }

    #[test]
    fn scaling_ratios_and_thresholds_keeps_labels(
        values in prop::collection::vec(0.0f64..1.5, 1..200),
        th in thresholds(),
        band in 0.0f64..0.05,
        k in -3i32..4,
    ) {
        // powers of two keep every product exact
        let c = 2f64.powi(k);
        let grid = Grid::new(0, 300, values.len());
        let curve = RatioSeries::new(grid, values.clone());
        let scaled = RatioSeries::new(grid, values.iter().map(|v| v * c).collect());
        let th_scaled = Thresholds { filled: th.filled * c, full: th.full * c };
        prop_assert_eq!(
            label_curve(&curve, th, band).labels,
            label_curve(&scaled, th_scaled, band * c).labels
        );
    }

    #[test]
    fn transitions_are_adjacent_label_changes(series in label_series(300)) {
        let transitions = extract_transitions(&series);
        let expected_steps: usize = series
            .labels
            .windows(2)
            .map(|w| (w[0].level() as i32 - w[1].level() as i32).unsigned_abs() as usize)
            .sum();
        prop_assert_eq!(transitions.len(), expected_steps);
        for t in &transitions {
            prop_assert_eq!((t.from.level() as i32 - t.to.level() as i32).abs(), 1);
            prop_assert!(TransitionKind::of(t.from, t.to).is_some());
        }
        prop_assert!(transitions.windows(2).all(|w| w[0].time_s <= w[1].time_s));
    }

    #[test]
    fn matching_bookkeeping_holds(truth in label_series(300), est in label_series(300)) {
        let n = truth.labels.len().min(est.labels.len());
        let truth = truth.slice(0..n);
        let est = est.slice(0..n);
        let tt = extract_transitions(&truth);
        let et = extract_transitions(&est);
        let table = delay_table(&match_transitions(&tt, &et, MatchWindows::default()));
        for kind in TransitionKind::ALL {
            let s = table.get(kind);
            prop_assert_eq!(s.matched + s.missed, tt.iter().filter(|t| t.kind() == kind).count());
            prop_assert_eq!(s.matched + s.false_alarms, et.iter().filter(|t| t.kind() == kind).count());
        }
    }

    #[test]
    fn matching_ignores_input_order(
        truth in label_series(200), est in label_series(200), seed in any::<u64>()
    ) {
        let n = truth.labels.len().min(est.labels.len());
        let tt = extract_transitions(&truth.slice(0..n));
        let et = extract_transitions(&est.slice(0..n));
        let reference = match_transitions(&tt, &et, MatchWindows::default());
        let mut tt_rev = tt.clone();
        let mut et_rot = et.clone();
        tt_rev.reverse();
        if !et_rot.is_empty() {
            let k = (seed as usize) % et_rot.len();
            et_rot.rotate_left(k);
        }
        prop_assert_eq!(match_transitions(&tt_rev, &et_rot, MatchWindows::default()), reference);
    }

    #[test]
    fn common_time_shift_keeps_delays(truth in label_series(200), est in label_series(200), shift in 1u64..50) {
        let n = truth.labels.len().min(est.labels.len());
        let base = (truth.slice(0..n), est.slice(0..n));
        let moved = |s: &LabelSeries| LabelSeries::new(Grid::new(shift * 300, 300, n), s.labels.clone());
        let delays = |t: &LabelSeries, e: &LabelSeries| {
            match_transitions(&extract_transitions(t), &extract_transitions(e), MatchWindows::default())
                .matches
                .iter()
                .map(|m| m.delay_s)
                .collect::<Vec<_>>()
        };
        prop_assert_eq!(delays(&base.0, &base.1), delays(&moved(&base.0), &moved(&base.1)));
    }

    #[test]
    fn perfect_estimate_has_no_errors(series in label_series(300)) {
        let t = extract_transitions(&series);
        let out = match_transitions(&t, &t, MatchWindows::default());
        prop_assert!(out.missed.is_empty() && out.false_alarms.is_empty());
        prop_assert!(out.matches.iter().all(|m| m.delay_s == 0));
    }

    #[test]
    fn observed_counts_never_exceed_true_counts(events in random_log(60, 20_000), p in 0.05f64..1.0, seed in any::<u64>()) {
        let log = EventLog { events, scenario_fingerprint: String::new() };
        let grid = Grid::new(0, 60, 400);
        let caps = ZoneCapacities { green: 1000, yellow: 0, red: 0 };
        let truth = occupancy_from_events(&log.events, grid, caps).unwrap();
        let flagged = assign_app_users(&log, PenetrationRate::new(p).unwrap(), seed);
        let obs = observed_count_series(&flagged, grid).unwrap();
        prop_assert!(obs.counts.iter().zip(&truth.total).all(|(o, t)| o <= t));
    }

    #[test]
    fn nested_sampling_is_monotone(events in random_log(60, 20_000), seed in any::<u64>()) {
        let log = EventLog { events, scenario_fingerprint: String::new() };
        let grid = Grid::new(0, 60, 400);
        let low = assign_app_users(&log, PenetrationRate::new(0.1).unwrap(), seed);
        let high = assign_app_users(&log, PenetrationRate::new(0.2).unwrap(), seed);
        prop_assert!(low.app_user.iter().zip(&high.app_user).all(|(l, h)| !l || *h));
        let a = observed_count_series(&low, grid).unwrap();
        let b = observed_count_series(&high, grid).unwrap();
        prop_assert!(a.counts.iter().zip(&b.counts).all(|(x, y)| x <= y));
    }

    #[test]
    fn warp_fit_never_worse_than_identity(
        profile in prop::collection::vec(0.0f64..1.5, 288),
        obs in prop::collection::vec(0.0f64..1.5, 1..288),
        lambda in 0.0f64..30.0,
    ) {
        let profile = DailyProfile::new(300, profile).unwrap();
        let mut fitter = WarpFitter::new(&profile, WarpSearch::default());
        for (i, y) in obs.iter().enumerate() {
            fitter.push(i as f64 * 300.0, *y);
        }
        let fit = fitter.fit(lambda, lambda);
        let identity = fitter.objective_at(WarpParams::IDENTITY, lambda, lambda);
        prop_assert!(fit.objective <= identity + 1e-9);
        let p = fit.params;
        prop_assert!((0.5..=2.0).contains(&p.beta) && p.tau_s.abs() <= 14_400.0 && p.alpha >= 0.0);
    }
}

fn small_scenario(seed: u64) -> parkstate::scenario::ValidatedScenario {
    let mut config = ScenarioConfig::default_scenario();
    config.horizon_days = 2;
    config.master_seed = seed;
    config.validate().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn zones_respect_capacity_and_overflow_order(seed in any::<u64>()) {
        let scenario = small_scenario(seed);
        let sim = simulate(&scenario);
        let caps = scenario.capacities();
        let occ = &sim.occupancy;
        for zone in ZoneId::ALL {
            prop_assert!(occ.zone(zone).iter().all(|c| *c <= caps.get(zone)));
        }
        // replay: a truck goes to yellow or red only when every earlier zone is full
        let events = &sim.log.events;
        for (i, e) in events.iter().enumerate() {
            for earlier in ZoneId::ALL.iter().filter(|z| **z < e.zone) {
                let busy = events[..i]
                    .iter()
                    .filter(|o| o.zone == *earlier && o.is_parked_at(e.arrival_s))
                    .count() as u32;
                prop_assert_eq!(busy, caps.get(*earlier), "truck {} in {:?}", e.truck_id, e.zone);
            }
        }
    }

    #[test]
    fn sampling_stream_does_not_touch_the_event_log(seed in any::<u64>(), other in any::<u64>()) {
        let scenario = small_scenario(seed);
        let log = simulate(&scenario).log;
        let p = PenetrationRate::new(0.2).unwrap();
        let a = assign_app_users(&log, p, seed);
        let b = assign_app_users(&log, p, other);
        prop_assert_eq!(&a.log, &b.log);
        prop_assert_eq!(simulate(&scenario).log, log);
    }

    #[test]
    fn estimators_are_causal(seed in any::<u64>(), cut in 1usize..288) {
        let scenario = small_scenario(seed);
        let sim = simulate(&scenario);
        let grid = sim.occupancy.grid;
        let eval = grid.decimate(5);
        let flagged = assign_app_users(&sim.log, PenetrationRate::new(0.2).unwrap(), seed);
        let counts = observed_count_series(&flagged, grid).unwrap();
        let scaled = parkstate::observe::scale_series(&counts, PenetrationRate::new(0.2).unwrap(), 100).ratios();
        let th = Thresholds::REFERENCE;

        let full = label_curve(&naive_curve(&scaled, 1800, &eval).unwrap(), th, 0.02);
        let prefix_scaled = scaled.truncated(cut * 5);
        let prefix_eval = Grid::new(0, 300, cut);
        let part = label_curve(&naive_curve(&prefix_scaled, 1800, &prefix_eval).unwrap(), th, 0.02);
        prop_assert_eq!(&part.labels[..], &full.labels[..cut]);

        // mean day on day 1 with the day-0 profile
        let profile = parkstate::estimate::daily_mean_profile(&scaled, &[0], 300).unwrap();
        let today_idx = eval.day_range(1);
        let today_all = scaled.sample_on(&eval).unwrap();
        let naive_all = naive_curve(&scaled, 1800, &eval).unwrap();
        let day = |s: &RatioSeries, n: usize| {
            RatioSeries::new(Grid::new(eval.time(today_idx.start), 300, n), s.values[today_idx.start..today_idx.start + n].to_vec())
        };
        let settings = MeanDaySettings::default();
        let whole = meanday_curve(&profile, &day(&today_all, 288), &day(&naive_all, 288), &settings).unwrap();
        let prefix = meanday_curve(&profile, &day(&today_all, cut), &day(&naive_all, cut), &settings).unwrap();
        prop_assert_eq!(
            &label_curve(&prefix.curve, th, 0.02).labels[..],
            &label_curve(&whole.curve, th, 0.02).labels[..cut]
        );
    }
}
