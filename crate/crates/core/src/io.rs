//! Text formats for every artifact.
//!
//! All files are comma-separated, newline-terminated and header-first.
//! Files written here start with one metadata line,
//!
//! ```text
//! # format=event_log version=1 fingerprint=<scenario sha256>
//! ```
//!
//! followed by the column header. Readers accept files without the metadata
//! line (for example event logs converted from another tool), but a
//! metadata line naming another format or version is an error. Ratios are
//! written with exactly six fractional digits, so equal values always
//! produce equal bytes.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::estimate::{DailyProfile, LabelSeries, StateLabel};
use crate::observe::{FlaggedEventLog, ObservedSeries};
use crate::scenario::{ZoneCapacities, ZoneId};
use crate::series::{Grid, RatioSeries};
use crate::sim::{EventLog, OccupancySeries, ParkingEvent};

pub const FORMAT_VERSION: u32 = 1;

pub const EVENT_LOG_HEADER: &str = "truck_id,arrival_s,departure_s,zone";
pub const FLAGGED_LOG_HEADER: &str = "truck_id,arrival_s,departure_s,zone,app_user";
pub const OCCUPANCY_HEADER: &str = "t_s,green,yellow,red,total,ratio";
pub const OBSERVED_HEADER: &str = "t_s,observed_count,scaled_ratio";
pub const LABELS_HEADER: &str = "t_s,label";
pub const PROFILE_HEADER: &str = "bin_start_s,mean_ratio";
pub const PLOT_HEADER: &str = "true_ratio,scaled_obs,smoothed,fitted,true_label,est_label";

/// Contents of the metadata line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileHeader {
    pub format_name: String,
    pub format_version: u32,
    pub scenario_fingerprint: String,
    /// Any further `key=value` pairs.
    pub extra: BTreeMap<String, String>,
}

impl FileHeader {
    pub fn new(format_name: &str, scenario_fingerprint: &str) -> Self {
        Self {
            format_name: format_name.to_owned(),
            format_version: FORMAT_VERSION,
            scenario_fingerprint: scenario_fingerprint.to_owned(),
            extra: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.extra.insert(key.to_owned(), value.to_string());
        self
    }

    fn render(&self) -> String {
        let mut line = format!(
            "# format={} version={} fingerprint={}",
            self.format_name, self.format_version, self.scenario_fingerprint
        );
        for (k, v) in &self.extra {
            write!(line, " {k}={v}").unwrap();
        }
        line
    }

    fn parse(line: &str, file: &str, expected: &'static str) -> Result<FileHeader> {
        let body = line.trim_start_matches('#').trim();
        let mut fields: BTreeMap<String, String> = body
            .split_whitespace()
            .filter_map(|kv| kv.split_once('='))
            .map(|(k, v)| (k.to_owned(), v.to_owned()))
            .collect();
        let name = fields.remove("format").unwrap_or_default();
        let version = fields.remove("version").unwrap_or_default();
        if name != expected || version != FORMAT_VERSION.to_string() {
            return Err(Error::FormatMismatch {
                file: file.to_owned(),
                expected,
                expected_version: FORMAT_VERSION,
                found: format!("{name} version {version}"),
            });
        }
        Ok(FileHeader {
            format_name: name,
            format_version: FORMAT_VERSION,
            scenario_fingerprint: fields.remove("fingerprint").unwrap_or_default(),
            extra: fields,
        })
    }
}

/// Splits a document into its optional metadata, checks the column header,
/// and returns the data rows with their 1-based line numbers.
fn split_document<'a>(
    text: &'a str,
    file: &str,
    format: &'static str,
    columns: &str,
) -> Result<(Option<FileHeader>, Vec<(usize, &'a str)>)> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut meta = None;
    let mut header = lines.next();
    if let Some((_, l)) = header {
        if l.starts_with('#') {
            meta = Some(FileHeader::parse(l, file, format)?);
            header = lines.next();
        }
    }
    match header {
        Some((_, l)) if l.trim_end() == columns => {}
        Some((n, l)) => {
            return Err(Error::parse(
                file,
                n,
                format!("expected header `{columns}`, found `{l}`"),
            ))
        }
        None => return Err(Error::parse(file, 1, format!("missing header `{columns}`"))),
    }
    let rows = lines.filter(|(_, l)| !l.trim().is_empty()).collect();
    Ok((meta, rows))
}

fn field<T: std::str::FromStr>(raw: &str, name: &str, file: &str, line: usize) -> Result<T> {
    raw.trim()
        .parse()
        .map_err(|_| Error::parse(file, line, format!("invalid {name} `{raw}`")))
}

fn split_row<'a>(row: &'a str, n: usize, file: &str, line: usize) -> Result<Vec<&'a str>> {
    let cells: Vec<&str> = row.split(',').collect();
    if cells.len() != n {
        return Err(Error::parse(
            file,
            line,
            format!("expected {n} fields, found {}", cells.len()),
        ));
    }
    Ok(cells)
}

fn parse_event(cells: &[&str], file: &str, line: usize) -> Result<ParkingEvent> {
    let truck_id = field(cells[0], "truck_id", file, line)?;
    let arrival_s = field(cells[1], "arrival_s", file, line)?;
    let departure_s = field(cells[2], "departure_s", file, line)?;
    let zone = cells[3]
        .trim()
        .parse::<ZoneId>()
        .map_err(|e| Error::parse(file, line, e))?;
    if departure_s <= arrival_s {
        return Err(Error::NonPositiveStay {
            truck_id,
            arrival_s,
            departure_s,
        });
    }
    Ok(ParkingEvent {
        truck_id,
        arrival_s,
        departure_s,
        zone,
    })
}

fn write_event_row(out: &mut String, e: &ParkingEvent) {
    write!(
        out,
        "{},{},{},{}",
        e.truck_id, e.arrival_s, e.departure_s, e.zone
    )
    .unwrap();
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Writes `contents` to `path`, creating parent directories.
pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn file_name(path: &Path) -> String {
    path.display().to_string()
}

// ---- event logs ----

pub fn encode_event_log(log: &EventLog) -> String {
    let mut out = FileHeader::new("event_log", &log.scenario_fingerprint).render();
    out.push('\n');
    out.push_str(EVENT_LOG_HEADER);
    out.push('\n');
    for e in &log.events {
        write_event_row(&mut out, e);
        out.push('\n');
    }
    out
}

fn decode_events(text: &str, file: &str) -> Result<(Option<FileHeader>, Vec<ParkingEvent>)> {
    let (meta, rows) = split_document(text, file, "event_log", EVENT_LOG_HEADER)?;
    let events = rows
        .into_iter()
        .map(|(n, row)| parse_event(&split_row(row, 4, file, n)?, file, n))
        .collect::<Result<_>>()?;
    Ok((meta, events))
}

/// Parses an event log and checks every [`EventLog`] invariant.
pub fn decode_event_log(text: &str, file: &str) -> Result<EventLog> {
    let (meta, events) = decode_events(text, file)?;
    let log = EventLog {
        events,
        scenario_fingerprint: meta.map(|m| m.scenario_fingerprint).unwrap_or_default(),
    };
    log.validate()?;
    Ok(log)
}

pub fn write_event_log(path: impl AsRef<Path>, log: &EventLog) -> Result<()> {
    write_file(path.as_ref(), &encode_event_log(log))
}

pub fn read_event_log(path: impl AsRef<Path>) -> Result<EventLog> {
    let path = path.as_ref();
    decode_event_log(&read_text(path)?, &file_name(path))
}

/// Reads an event log of any origin: rows are sorted by arrival (then
/// truck id), ids must be unique and are renumbered `0..n` in that order,
/// and the zone capacities are checked by replaying the log. Violations are
/// reported, never repaired.
pub fn import_external_events(
    path: impl AsRef<Path>,
    capacities: ZoneCapacities,
) -> Result<EventLog> {
    let path = path.as_ref();
    let file = file_name(path);
    let (meta, mut events) = decode_events(&read_text(path)?, &file)?;
    let mut seen = HashSet::with_capacity(events.len());
    for e in &events {
        if !seen.insert(e.truck_id) {
            return Err(Error::parse(
                &file,
                0,
                format!("duplicate truck_id {}", e.truck_id),
            ));
        }
    }
    events.sort_by_key(|e| (e.arrival_s, e.truck_id));
    for (i, e) in events.iter_mut().enumerate() {
        e.truck_id = i as u64;
    }
    check_capacities(&events, capacities)?;
    Ok(EventLog {
        events,
        scenario_fingerprint: meta
            .map(|m| m.scenario_fingerprint)
            .unwrap_or_else(|| "external".to_owned()),
    })
}

/// Replays the log in time order (departures before arrivals at the same
/// second) and reports the first instant a zone holds more trucks than it
/// has spaces.
pub fn check_capacities(events: &[ParkingEvent], capacities: ZoneCapacities) -> Result<()> {
    // (time, 0 = departure / 1 = arrival, zone)
    let mut changes: Vec<(u64, u8, ZoneId)> = Vec::with_capacity(events.len() * 2);
    for e in events {
        changes.push((e.arrival_s, 1, e.zone));
        changes.push((e.departure_s, 0, e.zone));
    }
    changes.sort();
    let mut parked = [0u32; 3];
    for (t, kind, zone) in changes {
        let slot = &mut parked[zone.index()];
        if kind == 0 {
            *slot -= 1;
        } else {
            *slot += 1;
            if *slot > capacities.get(zone) {
                return Err(Error::CapacityViolation {
                    time_s: t,
                    zone,
                    count: *slot,
                    capacity: capacities.get(zone),
                });
            }
        }
    }
    Ok(())
}

// ---- flagged event logs ----

pub fn encode_flagged_log(flagged: &FlaggedEventLog, penetration: f64) -> String {
    let header = FileHeader::new("flagged_event_log", &flagged.log.scenario_fingerprint)
        .with("penetration", penetration);
    let mut out = header.render();
    out.push('\n');
    out.push_str(FLAGGED_LOG_HEADER);
    out.push('\n');
    for (e, f) in flagged.log.events.iter().zip(&flagged.app_user) {
        write_event_row(&mut out, e);
        out.push_str(if *f { ",1\n" } else { ",0\n" });
    }
    out
}

pub fn decode_flagged_log(text: &str, file: &str) -> Result<FlaggedEventLog> {
    let (meta, rows) = split_document(text, file, "flagged_event_log", FLAGGED_LOG_HEADER)?;
    let mut events = Vec::with_capacity(rows.len());
    let mut app_user = Vec::with_capacity(rows.len());
    for (n, row) in rows {
        let cells = split_row(row, 5, file, n)?;
        events.push(parse_event(&cells[..4], file, n)?);
        app_user.push(match cells[4].trim() {
            "0" => false,
            "1" => true,
            other => return Err(Error::parse(file, n, format!("invalid app_user `{other}`"))),
        });
    }
    let log = EventLog {
        events,
        scenario_fingerprint: meta.map(|m| m.scenario_fingerprint).unwrap_or_default(),
    };
    log.validate()?;
    Ok(FlaggedEventLog { log, app_user })
}

pub fn read_flagged_log(path: impl AsRef<Path>) -> Result<FlaggedEventLog> {
    let path = path.as_ref();
    decode_flagged_log(&read_text(path)?, &file_name(path))
}

// ---- series ----

pub fn encode_occupancy(series: &OccupancySeries, fingerprint: &str) -> String {
    let header =
        FileHeader::new("occupancy", fingerprint).with("green_capacity", series.green_capacity);
    let mut out = header.render();
    out.push('\n');
    out.push_str(OCCUPANCY_HEADER);
    out.push('\n');
    for i in 0..series.grid.len {
        writeln!(
            out,
            "{},{},{},{},{},{:.6}",
            series.grid.time(i),
            series.green[i],
            series.yellow[i],
            series.red[i],
            series.total[i],
            series.ratio(i)
        )
        .unwrap();
    }
    out
}

pub fn encode_observed(series: &ObservedSeries, fingerprint: &str, penetration: f64) -> String {
    let header = FileHeader::new("observed", fingerprint).with("penetration", penetration);
    let mut out = header.render();
    out.push('\n');
    out.push_str(OBSERVED_HEADER);
    out.push('\n');
    for i in 0..series.grid.len {
        writeln!(
            out,
            "{},{},{:.6}",
            series.grid.time(i),
            series.counts[i],
            series.scaled_ratio[i]
        )
        .unwrap();
    }
    out
}

// ---- labels ----

pub fn encode_labels(labels: &LabelSeries, fingerprint: &str) -> String {
    let header = FileHeader::new("labels", fingerprint).with("step_s", labels.grid.step_s);
    let mut out = header.render();
    out.push('\n');
    out.push_str(LABELS_HEADER);
    out.push('\n');
    for (i, l) in labels.labels.iter().enumerate() {
        writeln!(out, "{},{}", labels.grid.time(i), l).unwrap();
    }
    out
}

/// Parses a label file. Timestamps must form a regular grid.
pub fn decode_labels(text: &str, file: &str) -> Result<(LabelSeries, String)> {
    let (meta, rows) = split_document(text, file, "labels", LABELS_HEADER)?;
    let mut times = Vec::with_capacity(rows.len());
    let mut labels = Vec::with_capacity(rows.len());
    for (n, row) in &rows {
        let cells = split_row(row, 2, file, *n)?;
        times.push(field::<u64>(cells[0], "t_s", file, *n)?);
        labels.push(
            cells[1]
                .trim()
                .parse::<StateLabel>()
                .map_err(|e| Error::parse(file, *n, e))?,
        );
    }
    let meta_step = meta
        .as_ref()
        .and_then(|m| m.extra.get("step_s"))
        .and_then(|s| s.parse::<u64>().ok());
    let step = match times.as_slice() {
        [a, b, ..] if b > a => b - a,
        [_, _, ..] => return Err(Error::parse(file, rows[1].0, "timestamps must increase")),
        _ => meta_step.unwrap_or(1),
    };
    let start = times.first().copied().unwrap_or(0);
    let grid = Grid::new(start, step, times.len());
    for (i, t) in times.iter().enumerate() {
        if *t != grid.time(i) {
            return Err(Error::parse(
                file,
                rows[i].0,
                format!("t_s {t} breaks the regular {step} s grid"),
            ));
        }
    }
    let fingerprint = meta.map(|m| m.scenario_fingerprint).unwrap_or_default();
    Ok((LabelSeries::new(grid, labels), fingerprint))
}

pub fn read_labels(path: impl AsRef<Path>) -> Result<LabelSeries> {
    let path = path.as_ref();
    Ok(decode_labels(&read_text(path)?, &file_name(path))?.0)
}

// ---- profiles ----

pub fn encode_profile(profile: &DailyProfile, fingerprint: &str) -> String {
    let mut out = FileHeader::new("profile", fingerprint).render();
    out.push('\n');
    out.push_str(PROFILE_HEADER);
    out.push('\n');
    for (b, v) in profile.values.iter().enumerate() {
        writeln!(out, "{},{:.6}", b as u64 * profile.bin_s, v).unwrap();
    }
    out
}

pub fn decode_profile(text: &str, file: &str) -> Result<DailyProfile> {
    let (_, rows) = split_document(text, file, "profile", PROFILE_HEADER)?;
    let mut starts = Vec::with_capacity(rows.len());
    let mut values = Vec::with_capacity(rows.len());
    for (n, row) in &rows {
        let cells = split_row(row, 2, file, *n)?;
        starts.push(field::<u64>(cells[0], "bin_start_s", file, *n)?);
        values.push(field::<f64>(cells[1], "mean_ratio", file, *n)?);
    }
    let bin_s = match starts.as_slice() {
        [0, b, ..] => *b,
        _ => {
            return Err(Error::parse(
                file,
                2,
                "profile must start at bin 0 and have 2+ bins",
            ))
        }
    };
    for (i, s) in starts.iter().enumerate() {
        if *s != i as u64 * bin_s {
            return Err(Error::parse(file, rows[i].0, "irregular bin starts"));
        }
    }
    DailyProfile::new(bin_s, values)
}

// ---- plot bundle ----

/// The layered curves of one run, aligned on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotBundle {
    pub true_ratio: RatioSeries,
    pub scaled_obs: RatioSeries,
    pub smoothed: RatioSeries,
    /// Stretch-fit curve; absent cells are written empty.
    pub fitted: Option<RatioSeries>,
    pub true_labels: LabelSeries,
    pub est_labels: LabelSeries,
}

/// Six columns, one row per grid point; labels as 0/1/2. The grid is in the
/// metadata line.
pub fn encode_plot_bundle(bundle: &PlotBundle, fingerprint: &str) -> Result<String> {
    let grid = bundle.true_ratio.grid;
    bundle
        .scaled_obs
        .grid
        .ensure_same(&grid, "scaled observations")?;
    bundle.smoothed.grid.ensure_same(&grid, "smoothed curve")?;
    if let Some(f) = &bundle.fitted {
        f.grid.ensure_same(&grid, "fitted curve")?;
    }
    bundle.true_labels.grid.ensure_same(&grid, "true labels")?;
    bundle
        .est_labels
        .grid
        .ensure_same(&grid, "estimated labels")?;

    let header = FileHeader::new("plot_bundle", fingerprint)
        .with("start_s", grid.start_s)
        .with("step_s", grid.step_s);
    let mut out = header.render();
    out.push('\n');
    out.push_str(PLOT_HEADER);
    out.push('\n');
    for i in 0..grid.len {
        let fitted = bundle
            .fitted
            .as_ref()
            .map(|f| format!("{:.6}", f.values[i]))
            .unwrap_or_default();
        writeln!(
            out,
            "{:.6},{:.6},{:.6},{},{},{}",
            bundle.true_ratio.values[i],
            bundle.scaled_obs.values[i],
            bundle.smoothed.values[i],
            fitted,
            bundle.true_labels.labels[i].level(),
            bundle.est_labels.labels[i].level()
        )
        .unwrap();
    }
    Ok(out)
}

pub fn export_plot_data(
    path: impl AsRef<Path>,
    bundle: &PlotBundle,
    fingerprint: &str,
) -> Result<()> {
    write_file(path.as_ref(), &encode_plot_bundle(bundle, fingerprint)?)
}

/// Hex SHA-256 of a file's bytes.
pub fn sha256_file(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}
