use std::path::Path;

use anyhow::Context;
use parkstate::estimate::{naive_curve, smooth_centered, Thresholds};
use parkstate::eval::{
    delay_table, extract_transitions, match_transitions, render_delay_table, DelayStat, DelayTable,
    MatchWindows,
};
use parkstate::experiment::{
    run_experiment, EstimationSettings, Experiment, Method, MethodResult, PenetrationRun,
};
use parkstate::io::{
    encode_event_log, encode_flagged_log, encode_labels, encode_observed, encode_occupancy,
    encode_plot_bundle, read_labels, PlotBundle,
};
use parkstate::observe;
use parkstate::scenario::{PenetrationRate, Stream, ValidatedScenario};
use parkstate::series::Grid;
use parkstate::sim;
use serde::Serialize;

use crate::run_dir::RunDir;
use crate::TuningArgs;

pub fn settings(tuning: &TuningArgs) -> EstimationSettings {
    EstimationSettings {
        window_s: tuning.window_s,
        hysteresis: tuning.hysteresis,
        calibrate: !tuning.no_calibrate,
        recalibrate_meanday: tuning.recalibrate_meanday,
        ..EstimationSettings::default()
    }
}

fn tag(p: PenetrationRate) -> String {
    format!("p{:.2}", p.get())
}

fn record_scenario(dir: &mut RunDir, scenario: &ValidatedScenario) -> anyhow::Result<()> {
    dir.manifest.config_fingerprint = Some(scenario.fingerprint().to_owned());
    dir.manifest.master_seed = Some(scenario.master_seed());
    let mut config = scenario.config().to_json_pretty();
    config.push('\n');
    dir.write("config.json", &config)
}

pub fn simulate(dir: &mut RunDir, scenario: &ValidatedScenario) -> anyhow::Result<()> {
    record_scenario(dir, scenario)?;
    let sim = sim::simulate(scenario);
    dir.write("events.csv", &encode_event_log(&sim.log))?;
    dir.write(
        "occupancy.csv",
        &encode_occupancy(&sim.occupancy, scenario.fingerprint()),
    )
}

pub fn observe(
    dir: &mut RunDir,
    scenario: &ValidatedScenario,
    rates: &[PenetrationRate],
) -> anyhow::Result<()> {
    record_scenario(dir, scenario)?;
    dir.manifest.penetrations = rates.iter().map(|p| p.get()).collect();
    let sim = sim::simulate(scenario);
    for &p in rates {
        let (flagged, observed) = observe::observe(
            &sim.log,
            sim.occupancy.grid,
            p,
            scenario.capacities().green,
            scenario.stream_seed(Stream::AppUsers),
        )?;
        dir.write(
            &format!("flagged_{}.csv", tag(p)),
            &encode_flagged_log(&flagged, p.get()),
        )?;
        dir.write(
            &format!("observed_{}.csv", tag(p)),
            &encode_observed(&observed, scenario.fingerprint(), p.get()),
        )?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct DaySummary {
    day: usize,
    thresholds: Thresholds,
    matched: usize,
    missed: usize,
    false_alarms: usize,
}

#[derive(Debug, Serialize)]
struct MethodSummary {
    method: Method,
    critical_mean_abs_delay_min: Option<f64>,
    matched: usize,
    missed: usize,
    false_alarms: usize,
    table: DelayTable,
    days: Vec<DaySummary>,
}

#[derive(Debug, Serialize)]
struct RunSummary {
    penetration: f64,
    app_users: usize,
    methods: Vec<MethodSummary>,
}

#[derive(Debug, Serialize)]
struct Results {
    config_fingerprint: String,
    master_seed: u64,
    settings: EstimationSettings,
    runs: Vec<RunSummary>,
}

fn summarize(m: &MethodResult) -> MethodSummary {
    MethodSummary {
        method: m.method,
        critical_mean_abs_delay_min: m.table.critical_mean_abs_delay_min(),
        matched: m.table.total_matched(),
        missed: m.table.total_missed(),
        false_alarms: m.table.total_false_alarms(),
        table: m.table.clone(),
        days: m
            .days
            .iter()
            .map(|d| DaySummary {
                day: d.day,
                thresholds: d.thresholds,
                matched: d.outcome.matches.len(),
                missed: d.outcome.missed.len(),
                false_alarms: d.outcome.false_alarms.len(),
            })
            .collect(),
    }
}

fn table_title(p: PenetrationRate, method: Method) -> String {
    format!("Delay of state estimation, p = {:.2}, {method}", p.get())
}

fn plot_bundle(
    exp: &Experiment,
    run: &PenetrationRun,
    method: &MethodResult,
    settings: &EstimationSettings,
    centered: bool,
) -> anyhow::Result<PlotBundle> {
    let grid = exp.eval_grid;
    let scaled = run.observed.ratios();
    let smoothed = if centered {
        smooth_centered(&scaled, settings.window_s).sample_on(&grid)?
    } else {
        naive_curve(&scaled, settings.window_s, &grid)?
    };
    Ok(PlotBundle {
        true_ratio: exp.simulation.occupancy.ratios().sample_on(&grid)?,
        scaled_obs: scaled.sample_on(&grid)?,
        smoothed,
        fitted: (method.method == Method::MeanDay).then(|| method.curve.clone()),
        true_labels: exp.truth_labels.clone(),
        est_labels: method.labels.clone(),
    })
}

/// `estimate` writes the label series; `run-all` adds the observations,
/// plot bundles, delay tables and the results document.
pub fn estimate(
    dir: &mut RunDir,
    scenario: &ValidatedScenario,
    rates: &[PenetrationRate],
    methods: &[Method],
    settings: &EstimationSettings,
    full: bool,
) -> anyhow::Result<()> {
    record_scenario(dir, scenario)?;
    dir.manifest.penetrations = rates.iter().map(|p| p.get()).collect();
    let exp = run_experiment(scenario, rates, methods, settings)?;
    let fp = scenario.fingerprint();

    if full {
        dir.write("events.csv", &encode_event_log(&exp.simulation.log))?;
        dir.write(
            "occupancy.csv",
            &encode_occupancy(&exp.simulation.occupancy, fp),
        )?;
    }
    dir.write("truth_labels.csv", &encode_labels(&exp.truth_labels, fp))?;

    let mut tables = String::new();
    let mut runs = Vec::new();
    for run in &exp.runs {
        let p = run.penetration;
        if full {
            dir.write(
                &format!("observed_{}.csv", tag(p)),
                &encode_observed(&run.observed, fp, p.get()),
            )?;
        }
        for m in &run.methods {
            let stem = format!("{}_{}", m.method, tag(p));
            dir.write(&format!("labels_{stem}.csv"), &encode_labels(&m.labels, fp))?;
            if full {
                let bundle = plot_bundle(&exp, run, m, settings, false)?;
                dir.write(
                    &format!("plot_{stem}.csv"),
                    &encode_plot_bundle(&bundle, fp)?,
                )?;
                let rendered =
                    render_delay_table(&m.table, &table_title(p, m.method), DelayStat::Signed);
                dir.write(&format!("table_{stem}.md"), &rendered)?;
                tables.push_str(&rendered);
                tables.push('\n');
            }
        }
        runs.push(RunSummary {
            penetration: p.get(),
            app_users: run.flagged.flagged_count(),
            methods: run.methods.iter().map(summarize).collect(),
        });
    }

    if full {
        let results = Results {
            config_fingerprint: fp.to_owned(),
            master_seed: scenario.master_seed(),
            settings: settings.clone(),
            runs,
        };
        let mut json = serde_json::to_string_pretty(&results)?;
        json.push('\n');
        dir.write("results.json", &json)?;
        print!("{tables}");
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct EvaluationResults {
    grid: Grid,
    truth_transitions: usize,
    estimated_transitions: usize,
    matched: usize,
    missed: usize,
    false_alarms: usize,
    critical_mean_abs_delay_min: Option<f64>,
    table: DelayTable,
}

/// Matches the transitions of two label files over their whole span.
pub fn evaluate(
    dir: Option<&mut RunDir>,
    truth_path: &Path,
    estimate_path: &Path,
    json: bool,
) -> anyhow::Result<()> {
    let truth =
        read_labels(truth_path).with_context(|| format!("reading {}", truth_path.display()))?;
    let est = read_labels(estimate_path)
        .with_context(|| format!("reading {}", estimate_path.display()))?;
    truth.grid.ensure_same(&est.grid, "estimated labels")?;

    let tt = extract_transitions(&truth);
    let et = extract_transitions(&est);
    let outcome = match_transitions(&tt, &et, MatchWindows::default());
    let table = delay_table(&outcome);
    let results = EvaluationResults {
        grid: truth.grid,
        truth_transitions: tt.len(),
        estimated_transitions: et.len(),
        matched: table.total_matched(),
        missed: table.total_missed(),
        false_alarms: table.total_false_alarms(),
        critical_mean_abs_delay_min: table.critical_mean_abs_delay_min(),
        table,
    };
    let mut doc = serde_json::to_string_pretty(&results)?;
    doc.push('\n');
    let rendered = render_delay_table(
        &results.table,
        "Delay of state estimation",
        DelayStat::Signed,
    );

    if json {
        print!("{doc}");
    } else {
        print!("{rendered}");
        println!(
            "matched {}, missed {}, false alarms {}",
            results.matched, results.missed, results.false_alarms
        );
    }
    if let Some(dir) = dir {
        dir.write("results.json", &doc)?;
        dir.write("table.md", &rendered)?;
    }
    Ok(())
}

pub fn export_plot(
    dir: &mut RunDir,
    scenario: &ValidatedScenario,
    rate: PenetrationRate,
    method: Method,
    settings: &EstimationSettings,
    centered: bool,
) -> anyhow::Result<()> {
    record_scenario(dir, scenario)?;
    dir.manifest.penetrations = vec![rate.get()];
    let exp = run_experiment(scenario, &[rate], &[method], settings)?;
    let run = &exp.runs[0];
    let m = &run.methods[0];
    let bundle = plot_bundle(&exp, run, m, settings, centered)?;
    dir.write(
        &format!("plot_{}_{}.csv", method, tag(rate)),
        &encode_plot_bundle(&bundle, scenario.fingerprint())?,
    )
}
