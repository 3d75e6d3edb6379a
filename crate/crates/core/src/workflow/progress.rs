use std::collections::BTreeMap;

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};

use super::task::{Task, TaskStatus};
use crate::tagschema::{CsTag, Genre, Unit};

/// Gaps between activity events longer than this are not work time.
pub const IDLE_CUTOFF_MINUTES: i64 = 10;

/// A client-reported work session. `activity` holds optional heartbeat
/// timestamps; without them the whole session counts as active.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkSession {
    pub annotator: String,
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
    #[serde(default)]
    pub activity: Vec<DateTime<Utc>>,
}

impl WorkSession {
    pub fn active_intervals(&self) -> Vec<(DateTime<Utc>, DateTime<Utc>)> {
        if self.end <= self.start {
            return Vec::new();
        }
        if self.activity.is_empty() {
            return vec![(self.start, self.end)];
        }
        let mut points: Vec<DateTime<Utc>> = self
            .activity
            .iter()
            .copied()
            .filter(|t| *t > self.start && *t < self.end)
            .collect();
        points.sort();
        points.insert(0, self.start);
        points.push(self.end);
        let cutoff = Duration::minutes(IDLE_CUTOFF_MINUTES);
        points
            .windows(2)
            .filter(|w| w[1] - w[0] <= cutoff && w[1] > w[0])
            .map(|w| (w[0], w[1]))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "id")]
pub enum ProgressScope {
    Annotator(String),
    Global,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgressStats {
    pub tokens_annotated: u64,
    pub units_annotated: u64,
    pub hours: f64,
    pub tokens_per_hour: f64,
    pub per_genre: BTreeMap<Genre, u64>,
    pub per_tag: BTreeMap<CsTag, u64>,
}

/// Total length of the union of intervals, clipped to `[from, to)`.
fn union_hours(
    mut intervals: Vec<(DateTime<Utc>, DateTime<Utc>)>,
    from: DateTime<Utc>,
    to: DateTime<Utc>,
) -> f64 {
    intervals = intervals
        .into_iter()
        .map(|(a, b)| (a.max(from), b.min(to)))
        .filter(|(a, b)| a < b)
        .collect();
    intervals.sort();
    let mut total = Duration::zero();
    let mut current: Option<(DateTime<Utc>, DateTime<Utc>)> = None;
    for (a, b) in intervals {
        match current {
            Some((s, e)) if a <= e => current = Some((s, e.max(b))),
            Some((s, e)) => {
                total += e - s;
                current = Some((a, b));
            }
            None => current = Some((a, b)),
        }
    }
    if let Some((s, e)) = current {
        total += e - s;
    }
    total.num_milliseconds() as f64 / 3_600_000.0
}

/// Aggregates handed-in work over `[from, to)`.
///
/// Counts units of submitted and accepted tasks whose latest submission falls
/// in the period. The rate divides by logged active time; for the global
/// scope overlapping sessions of different annotators are pooled as one
/// stretch of time.
pub fn progress_report(
    scope: &ProgressScope,
    from: DateTime<Utc>,
    to: DateTime<Utc>,
    tasks: &BTreeMap<String, Task>,
    units: &BTreeMap<String, Unit>,
    sessions: &[WorkSession],
) -> ProgressStats {
    let in_scope = |annotator: &str| match scope {
        ProgressScope::Annotator(a) => a == annotator,
        ProgressScope::Global => true,
    };
    let mut stats = ProgressStats {
        tokens_annotated: 0,
        units_annotated: 0,
        hours: 0.0,
        tokens_per_hour: 0.0,
        per_genre: BTreeMap::new(),
        per_tag: BTreeMap::new(),
    };
    for task in tasks.values() {
        if !matches!(task.status, TaskStatus::Submitted | TaskStatus::Accepted)
            || !in_scope(&task.annotator)
        {
            continue;
        }
        if !task.submitted_at().is_some_and(|t| t >= from && t < to) {
            continue;
        }
        for uid in &task.unit_ids {
            let Some(unit) = units.get(uid) else { continue };
            let n = unit.tokens.len() as u64;
            stats.units_annotated += 1;
            stats.tokens_annotated += n;
            *stats.per_genre.entry(unit.genre).or_default() += n;
            for tag in task
                .work
                .get(uid)
                .into_iter()
                .flatten()
                .flatten()
                .filter_map(|a| a.cs)
            {
                *stats.per_tag.entry(tag).or_default() += 1;
            }
        }
    }
    let intervals = sessions
        .iter()
        .filter(|s| in_scope(&s.annotator))
        .flat_map(WorkSession::active_intervals)
        .collect();
    stats.hours = union_hours(intervals, from, to);
    if stats.hours > 0.0 {
        stats.tokens_per_hour = stats.tokens_annotated as f64 / stats.hours;
    }
    stats
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn t(min: i64) -> DateTime<Utc> {
        Utc.timestamp_opt(1_700_000_000 + min * 60, 0).unwrap()
    }

    #[test]
    fn idle_gaps_are_dropped() {
        let s = WorkSession {
            annotator: "a".into(),
            start: t(0),
            end: t(60),
            activity: vec![t(5), t(10), t(45), t(50)],
        };
        let total: i64 = s
            .active_intervals()
            .iter()
            .map(|(a, b)| (*b - *a).num_minutes())
            .sum();
        // 0-5-10 kept, 10-45 idle, 45-50-60 kept
        assert_eq!(total, 25);
    }

    #[test]
    fn union_pools_overlaps() {
        let hours = union_hours(
            vec![(t(0), t(60)), (t(30), t(90)), (t(120), t(150))],
            t(0),
            t(1000),
        );
        assert_eq!(hours, 2.0);
        assert_eq!(union_hours(vec![(t(0), t(60))], t(30), t(45)), 0.25);
    }

    #[test]
    fn empty_scope_is_zero() {
        let s = progress_report(
            &ProgressScope::Global,
            t(0),
            t(60),
            &BTreeMap::new(),
            &BTreeMap::new(),
            &[],
        );
        assert_eq!(s.tokens_annotated, 0);
        assert_eq!(s.tokens_per_hour, 0.0);
    }
}
