//! Transition extraction, matching and delay tables.
//!
//! A true transition is matched to the earliest still-unmatched estimated
//! transition of the same kind inside `[t_true - early, t_true + late]`,
//! walking the true transitions in time order. Delays are signed:
//! `t_estimate - t_true`, negative when the estimate was early.

use std::fmt::Write as _;

use serde::Serialize;

use crate::estimate::{LabelSeries, StateLabel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Transition {
    pub time_s: u64,
    pub from: StateLabel,
    pub to: StateLabel,
}

/// The four single-level transition kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum TransitionKind {
    FullToSlightlyFilled,
    SlightlyFilledToFull,
    SlightlyFilledToEmpty,
    EmptyToSlightlyFilled,
}

impl TransitionKind {
    pub const ALL: [TransitionKind; 4] = [
        TransitionKind::FullToSlightlyFilled,
        TransitionKind::SlightlyFilledToFull,
        TransitionKind::SlightlyFilledToEmpty,
        TransitionKind::EmptyToSlightlyFilled,
    ];

    pub fn of(from: StateLabel, to: StateLabel) -> Option<TransitionKind> {
        use StateLabel::*;
        match (from, to) {
            (Full, SlightlyFilled) => Some(TransitionKind::FullToSlightlyFilled),
            (SlightlyFilled, Full) => Some(TransitionKind::SlightlyFilledToFull),
            (SlightlyFilled, Empty) => Some(TransitionKind::SlightlyFilledToEmpty),
            (Empty, SlightlyFilled) => Some(TransitionKind::EmptyToSlightlyFilled),
            _ => None,
        }
    }

    pub fn endpoints(self) -> (StateLabel, StateLabel) {
        use StateLabel::*;
        match self {
            TransitionKind::FullToSlightlyFilled => (Full, SlightlyFilled),
            TransitionKind::SlightlyFilledToFull => (SlightlyFilled, Full),
            TransitionKind::SlightlyFilledToEmpty => (SlightlyFilled, Empty),
            TransitionKind::EmptyToSlightlyFilled => (Empty, SlightlyFilled),
        }
    }

    /// The transitions between slightly filled and full matter most for
    /// recommending a lot.
    pub fn is_critical(self) -> bool {
        matches!(
            self,
            TransitionKind::FullToSlightlyFilled | TransitionKind::SlightlyFilledToFull
        )
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl Transition {
    pub fn kind(&self) -> TransitionKind {
        TransitionKind::of(self.from, self.to).expect("transitions are single-level")
    }
}

/// A transition wherever the label changes, stamped at the later tick. Jumps
/// over two levels are split into two single-level transitions at the same
/// instant, passing through slightly filled.
pub fn extract_transitions(labels: &LabelSeries) -> Vec<Transition> {
    let mut out = Vec::new();
    for (i, pair) in labels.labels.windows(2).enumerate() {
        let (from, to) = (pair[0], pair[1]);
        if from == to {
            continue;
        }
        let time_s = labels.grid.time(i + 1);
        if from.level().abs_diff(to.level()) == 2 {
            let mid = StateLabel::SlightlyFilled;
            out.push(Transition {
                time_s,
                from,
                to: mid,
            });
            out.push(Transition {
                time_s,
                from: mid,
                to,
            });
        } else {
            out.push(Transition { time_s, from, to });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MatchWindows {
    pub early_s: u64,
    pub late_s: u64,
}

impl MatchWindows {
    pub fn late_min(&self) -> f64 {
        self.late_s as f64 / 60.0
    }
}

impl Default for MatchWindows {
    fn default() -> Self {
        Self {
            early_s: 1800,
            late_s: 21_600,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Match {
    pub truth: Transition,
    pub estimate: Transition,
    pub delay_s: i64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct MatchOutcome {
    pub matches: Vec<Match>,
    pub missed: Vec<Transition>,
    pub false_alarms: Vec<Transition>,
}

impl MatchOutcome {
    pub fn extend(&mut self, other: MatchOutcome) {
        self.matches.extend(other.matches);
        self.missed.extend(other.missed);
        self.false_alarms.extend(other.false_alarms);
    }
}

/// Greedy chronological matching. Inputs need not be sorted.
pub fn match_transitions(
    truth: &[Transition],
    estimate: &[Transition],
    windows: MatchWindows,
) -> MatchOutcome {
    let mut truth = truth.to_vec();
    let mut estimate = estimate.to_vec();
    truth.sort();
    estimate.sort();

    let mut used = vec![false; estimate.len()];
    let mut outcome = MatchOutcome::default();
    for t in &truth {
        let lo = t.time_s.saturating_sub(windows.early_s);
        let hi = t.time_s.saturating_add(windows.late_s);
        let found = estimate.iter().enumerate().position(|(j, e)| {
            !used[j] && e.from == t.from && e.to == t.to && (lo..=hi).contains(&e.time_s)
        });
        match found {
            Some(j) => {
                used[j] = true;
                let e = estimate[j];
                outcome.matches.push(Match {
                    truth: *t,
                    estimate: e,
                    delay_s: e.time_s as i64 - t.time_s as i64,
                });
            }
            None => outcome.missed.push(*t),
        }
    }
    outcome.false_alarms = estimate
        .iter()
        .zip(&used)
        .filter_map(|(e, u)| (!u).then_some(*e))
        .collect();
    outcome
}

/// Aggregated statistics of one transition kind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairStats {
    pub kind: TransitionKind,
    pub from: StateLabel,
    pub to: StateLabel,
    pub matched: usize,
    pub missed: usize,
    pub false_alarms: usize,
    pub mean_signed_delay_min: Option<f64>,
    pub mean_abs_delay_min: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DelayTable {
    pub pairs: [PairStats; 4],
}

impl DelayTable {
    pub fn get(&self, kind: TransitionKind) -> &PairStats {
        &self.pairs[kind.index()]
    }

    /// Mean of the two critical cells' mean absolute delay, over the cells
    /// that have matches.
    pub fn critical_mean_abs_delay_min(&self) -> Option<f64> {
        let cells: Vec<f64> = TransitionKind::ALL
            .iter()
            .filter(|k| k.is_critical())
            .filter_map(|k| self.get(*k).mean_abs_delay_min)
            .collect();
        (!cells.is_empty()).then(|| cells.iter().sum::<f64>() / cells.len() as f64)
    }

    pub fn total_matched(&self) -> usize {
        self.pairs.iter().map(|p| p.matched).sum()
    }

    pub fn total_missed(&self) -> usize {
        self.pairs.iter().map(|p| p.missed).sum()
    }

    pub fn total_false_alarms(&self) -> usize {
        self.pairs.iter().map(|p| p.false_alarms).sum()
    }
}

/// Per-kind aggregation of a matching outcome.
pub fn delay_table(outcome: &MatchOutcome) -> DelayTable {
    let pairs = TransitionKind::ALL.map(|kind| {
        let (from, to) = kind.endpoints();
        let delays: Vec<i64> = outcome
            .matches
            .iter()
            .filter(|m| m.truth.kind() == kind)
            .map(|m| m.delay_s)
            .collect();
        let n = delays.len();
        let mean = |f: fn(i64) -> i64| {
            (n > 0).then(|| delays.iter().map(|d| f(*d)).sum::<i64>() as f64 / n as f64 / 60.0)
        };
        PairStats {
            kind,
            from,
            to,
            matched: n,
            missed: outcome.missed.iter().filter(|t| t.kind() == kind).count(),
            false_alarms: outcome
                .false_alarms
                .iter()
                .filter(|t| t.kind() == kind)
                .count(),
            mean_signed_delay_min: mean(|d| d),
            mean_abs_delay_min: mean(i64::abs),
        }
    });
    DelayTable { pairs }
}

/// Which mean a rendered table shows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DelayStat {
    Signed,
    Absolute,
}

fn cell_text(table: &DelayTable, from: StateLabel, to: StateLabel, stat: DelayStat) -> String {
    let Some(kind) = TransitionKind::of(from, to) else {
        return "-".to_owned();
    };
    let stats = table.get(kind);
    let value = match stat {
        DelayStat::Signed => stats.mean_signed_delay_min,
        DelayStat::Absolute => stats.mean_abs_delay_min,
    };
    match value {
        None => "-".to_owned(),
        Some(v) if kind.is_critical() => format!("**{v:.1}'**"),
        Some(v) => format!("{v:.1}'"),
    }
}

/// Text table with rows = from, columns = to, in the order full, slightly
/// filled, empty. Critical cells are wrapped in `**`.
pub fn render_delay_table(table: &DelayTable, title: &str, stat: DelayStat) -> String {
    const ORDER: [StateLabel; 3] = [
        StateLabel::Full,
        StateLabel::SlightlyFilled,
        StateLabel::Empty,
    ];
    let mut rows = vec![vec!["from \\ to".to_owned()]];
    rows[0].extend(ORDER.iter().map(|l| l.display_name().to_owned()));
    for from in ORDER {
        let mut row = vec![from.display_name().to_owned()];
        row.extend(ORDER.iter().map(|to| cell_text(table, from, *to, stat)));
        rows.push(row);
    }
    let widths: Vec<usize> = (0..4)
        .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0))
        .collect();

    let mut out = String::new();
    writeln!(out, "{title}").unwrap();
    for (i, row) in rows.iter().enumerate() {
        let mut line = format!("{:<w$} |", row[0], w = widths[0]);
        for c in 1..4 {
            write!(line, " {:>w$}", row[c], w = widths[c]).unwrap();
        }
        writeln!(out, "{}", line.trim_end()).unwrap();
        if i == 0 {
            let rule: usize = widths.iter().sum::<usize>() + 5;
            writeln!(out, "{}", "-".repeat(rule)).unwrap();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::Grid;
    use StateLabel::*;

    fn tr(time_s: u64, from: StateLabel, to: StateLabel) -> Transition {
        Transition { time_s, from, to }
    }

    #[test]
    fn constant_series_has_no_transitions() {
        let labels = LabelSeries::new(Grid::new(0, 300, 5), vec![Full; 5]);
        assert!(extract_transitions(&labels).is_empty());
    }

    #[test]
    fn two_level_jump_is_decomposed() {
        let labels = LabelSeries::new(Grid::new(0, 300, 3), vec![Empty, Empty, Full]);
        assert_eq!(
            extract_transitions(&labels),
            vec![
                tr(600, Empty, SlightlyFilled),
                tr(600, SlightlyFilled, Full)
            ]
        );
    }

    #[test]
    fn identical_lists_match_with_zero_delay() {
        let ts = vec![
            tr(100, Empty, SlightlyFilled),
            tr(900, SlightlyFilled, Full),
        ];
        let out = match_transitions(&ts, &ts, MatchWindows::default());
        assert_eq!(out.matches.len(), 2);
        assert!(out.matches.iter().all(|m| m.delay_s == 0));
        assert!(out.missed.is_empty() && out.false_alarms.is_empty());
    }

    #[test]
    fn late_detection_delay() {
        let out = match_transitions(
            &[tr(1000, Full, SlightlyFilled)],
            &[tr(4000, Full, SlightlyFilled)],
            MatchWindows::default(),
        );
        assert_eq!(out.matches[0].delay_s, 3000);
        let table = delay_table(&out);
        assert_eq!(
            table
                .get(TransitionKind::FullToSlightlyFilled)
                .mean_signed_delay_min,
            Some(50.0)
        );
    }

    #[test]
    fn window_bounds_and_kind_must_agree() {
        let w = MatchWindows::default();
        let truth = [tr(10_000, SlightlyFilled, Full)];
        // Too early, wrong kind, too late.
        let est = [
            tr(10_000 - 1801, SlightlyFilled, Full),
            tr(10_100, SlightlyFilled, Empty),
            tr(10_000 + 21_601, SlightlyFilled, Full),
        ];
        let out = match_transitions(&truth, &est, w);
        assert!(out.matches.is_empty());
        assert_eq!(out.missed.len(), 1);
        assert_eq!(out.false_alarms.len(), 3);
        // Inclusive at both edges.
        let out = match_transitions(&truth, &[tr(10_000 - 1800, SlightlyFilled, Full)], w);
        assert_eq!(out.matches[0].delay_s, -1800);
    }

    #[test]
    fn mean_of_three_delays() {
        let truth: Vec<_> = (0..3)
            .map(|i| tr(i * 50_000, Empty, SlightlyFilled))
            .collect();
        let est: Vec<_> = (0..3)
            .map(|i| tr(i * 50_000 + 600 * (i + 1), Empty, SlightlyFilled))
            .collect();
        let table = delay_table(&match_transitions(&truth, &est, MatchWindows::default()));
        let stats = table.get(TransitionKind::EmptyToSlightlyFilled);
        assert_eq!(stats.matched, 3);
        assert_eq!(stats.mean_abs_delay_min, Some(20.0));
    }

    #[test]
    fn empty_table_renders_dashes() {
        let table = delay_table(&MatchOutcome::default());
        let text = render_delay_table(&table, "t", DelayStat::Signed);
        for row in text.lines().skip(3) {
            let cells: Vec<&str> = row.split('|').nth(1).unwrap().split_whitespace().collect();
            assert_eq!(cells, ["-", "-", "-"], "{text}");
        }
    }

    #[test]
    fn critical_cell_rendering() {
        let out = match_transitions(
            &[tr(0, Full, SlightlyFilled)],
            &[tr(56 * 60, Full, SlightlyFilled)],
            MatchWindows::default(),
        );
        let text = render_delay_table(&delay_table(&out), "Delay", DelayStat::Signed);
        let full_row = text.lines().find(|l| l.starts_with("full")).unwrap();
        assert!(full_row.contains("**56.0'**"), "{text}");
    }
}
