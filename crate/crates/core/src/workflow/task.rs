use std::collections::BTreeMap;
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tagschema::{validate_annotation, CsTag, PosTag, TokenAnnotation, TypoTag, Unit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskStatus {
    Assigned,
    InProgress,
    Submitted,
    Accepted,
    Rejected,
}

impl TaskStatus {
    pub const ALL: &'static [TaskStatus] = &[
        TaskStatus::Assigned,
        TaskStatus::InProgress,
        TaskStatus::Submitted,
        TaskStatus::Accepted,
        TaskStatus::Rejected,
    ];

    pub fn can_move_to(self, to: TaskStatus) -> bool {
        use TaskStatus::*;
        matches!(
            (self, to),
            (Assigned, InProgress)
                | (InProgress, Submitted)
                | (Submitted, Accepted)
                | (Submitted, Rejected)
                | (Rejected, InProgress)
        )
    }

    /// Work on the task has been handed in (and possibly reviewed).
    pub fn is_handed_in(self) -> bool {
        matches!(
            self,
            TaskStatus::Submitted | TaskStatus::Accepted | TaskStatus::Rejected
        )
    }
}

impl fmt::Display for TaskStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TaskStatus::Assigned => "assigned",
            TaskStatus::InProgress => "in-progress",
            TaskStatus::Submitted => "submitted",
            TaskStatus::Accepted => "accepted",
            TaskStatus::Rejected => "rejected",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub status: TaskStatus,
    pub at: DateTime<Utc>,
}

/// Per-unit token annotations, one slot per token.
pub type UnitWork = BTreeMap<String, Vec<Option<TokenAnnotation>>>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task {
    pub id: String,
    pub batch_id: String,
    pub annotator: String,
    pub unit_ids: Vec<String>,
    pub status: TaskStatus,
    pub work: UnitWork,
    pub feedback: Vec<String>,
    /// Lead grade, 0 to 100.
    pub grade: Option<u8>,
    pub history: Vec<Transition>,
    /// Annotators the task was reassigned away from.
    pub previous_annotators: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SubmitMode {
    Save,
    Submit,
}

impl Task {
    pub fn new(
        id: String,
        batch_id: String,
        annotator: String,
        unit_ids: Vec<String>,
        at: DateTime<Utc>,
    ) -> Self {
        Task {
            id,
            batch_id,
            annotator,
            unit_ids,
            status: TaskStatus::Assigned,
            work: BTreeMap::new(),
            feedback: Vec::new(),
            grade: None,
            history: vec![Transition {
                status: TaskStatus::Assigned,
                at,
            }],
            previous_annotators: Vec::new(),
        }
    }

    pub fn assigned_at(&self) -> DateTime<Utc> {
        self.history[0].at
    }

    pub fn last_change(&self) -> DateTime<Utc> {
        self.history
            .last()
            .map(|t| t.at)
            .unwrap_or_else(|| self.assigned_at())
    }

    /// When the task was last handed in, if it has been.
    pub fn submitted_at(&self) -> Option<DateTime<Utc>> {
        self.history
            .iter()
            .rev()
            .find(|t| t.status == TaskStatus::Submitted)
            .map(|t| t.at)
    }

    pub fn transition(&mut self, to: TaskStatus, at: DateTime<Utc>) -> Result<()> {
        if !self.status.can_move_to(to) {
            return Err(Error::IllegalTransition {
                from: self.status.to_string(),
                to: to.to_string(),
            });
        }
        if at < self.last_change() {
            return Err(Error::State(format!(
                "timestamp for task {} goes backwards",
                self.id
            )));
        }
        self.status = to;
        self.history.push(Transition { status: to, at });
        Ok(())
    }

    fn check_actor(&self, user: &str) -> Result<()> {
        if self.annotator == user {
            Ok(())
        } else if self.previous_annotators.iter().any(|p| p == user) {
            Err(Error::StaleTask {
                user: user.into(),
                task: self.id.clone(),
            })
        } else {
            Err(Error::Unauthorized {
                user: user.into(),
                task: self.id.clone(),
            })
        }
    }

    /// Token ids (`unit:index`) that do not yet count as annotated.
    pub fn missing_tokens(&self, units: &BTreeMap<String, Unit>) -> Vec<String> {
        let mut missing = Vec::new();
        for uid in &self.unit_ids {
            let n = units.get(uid).map_or(0, |u| u.tokens.len());
            let slots = self.work.get(uid);
            for i in 0..n {
                let done = slots
                    .and_then(|s| s.get(i))
                    .and_then(Option::as_ref)
                    .is_some_and(TokenAnnotation::is_complete);
                if !done {
                    missing.push(format!("{uid}:{i}"));
                }
            }
        }
        missing
    }

    /// The CS tags this task assigned to one unit, if complete.
    pub fn cs_tags(&self, unit_id: &str) -> Option<Vec<CsTag>> {
        self.work
            .get(unit_id)?
            .iter()
            .map(|a| a.as_ref().and_then(|a| a.cs))
            .collect()
    }

    pub fn reassign(&mut self, to: &str) -> Result<()> {
        if !matches!(
            self.status,
            TaskStatus::Assigned | TaskStatus::InProgress | TaskStatus::Rejected
        ) {
            return Err(Error::State(format!(
                "task {} is {} and cannot be reassigned",
                self.id, self.status
            )));
        }
        let prev = std::mem::replace(&mut self.annotator, to.to_string());
        self.previous_annotators.retain(|p| p != to);
        self.previous_annotators.push(prev);
        Ok(())
    }

    pub fn set_grade(&mut self, grade: u8, comment: Option<String>) -> Result<()> {
        if grade > 100 {
            return Err(Error::State("grades run from 0 to 100".into()));
        }
        if !self.status.is_handed_in() {
            return Err(Error::State(format!(
                "task {} has not been submitted",
                self.id
            )));
        }
        self.grade = Some(grade);
        self.feedback.extend(comment);
        Ok(())
    }
}

/// Stores annotations on a task and, in submit mode, hands it in.
///
/// Saves keep the task in progress. Submission requires every token of every
/// unit to be complete; machine tags only count once confirmed. A rejected
/// task is reopened first.
pub fn submit_task(
    task: &Task,
    user: &str,
    annotations: &UnitWork,
    mode: SubmitMode,
    units: &BTreeMap<String, Unit>,
    at: DateTime<Utc>,
) -> Result<Task> {
    task.check_actor(user)?;
    if !matches!(
        task.status,
        TaskStatus::Assigned | TaskStatus::InProgress | TaskStatus::Rejected
    ) {
        return Err(Error::IllegalTransition {
            from: task.status.to_string(),
            to: "in-progress".into(),
        });
    }
    let mut next = task.clone();
    for (uid, slots) in annotations {
        if !task.unit_ids.contains(uid) {
            return Err(Error::NotFound(format!("unit {uid} in task {}", task.id)));
        }
        let unit = units
            .get(uid)
            .ok_or_else(|| Error::NotFound(format!("unit {uid}")))?;
        if slots.len() != unit.tokens.len() {
            return Err(Error::InvalidUnit {
                unit: uid.clone(),
                reason: format!(
                    "{} annotation slots for {} tokens",
                    slots.len(),
                    unit.tokens.len()
                ),
            });
        }
        for (tok, ann) in unit.tokens.iter().zip(slots) {
            if let Some(ann) = ann {
                if let Some(v) = validate_annotation(tok, ann).first() {
                    return Err(Error::InvalidAnnotation {
                        path: format!("{uid}:{}", tok.index),
                        reason: v.message.clone(),
                    });
                }
            }
        }
        next.work.insert(uid.clone(), slots.clone());
    }
    if next.status != TaskStatus::InProgress {
        next.transition(TaskStatus::InProgress, at)?;
    }
    if mode == SubmitMode::Submit {
        let missing = next.missing_tokens(units);
        if !missing.is_empty() {
            return Err(Error::Incomplete { missing });
        }
        next.transition(TaskStatus::Submitted, at)?;
    }
    Ok(next)
}

/// Annotator-facing token record. Every field is always present.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenPayload {
    pub index: usize,
    pub surface: String,
    pub machine_tag: Option<CsTag>,
    pub annotation: Option<TokenAnnotation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitPayload {
    pub unit_id: String,
    pub genre: String,
    pub dialect: String,
    pub text: String,
    pub tokens: Vec<TokenPayload>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagMenus {
    pub cs: Vec<CsTag>,
    pub pos: Vec<PosTag>,
    pub typo: Vec<TypoTag>,
}

impl Default for TagMenus {
    fn default() -> Self {
        TagMenus {
            cs: CsTag::ALL.to_vec(),
            pos: PosTag::ALL.to_vec(),
            typo: TypoTag::ALL.to_vec(),
        }
    }
}

/// What an annotator sees of a task. Carries nothing about overlap.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskPayload {
    pub task_id: String,
    pub status: TaskStatus,
    pub feedback: Vec<String>,
    pub grade: Option<u8>,
    pub units: Vec<UnitPayload>,
    pub menus: TagMenus,
}

pub fn unit_payload(
    unit: &Unit,
    pretags: Option<&Vec<Option<TokenAnnotation>>>,
    work: Option<&Vec<Option<TokenAnnotation>>>,
) -> UnitPayload {
    let tokens = unit
        .tokens
        .iter()
        .map(|t| TokenPayload {
            index: t.index,
            surface: t.surface.clone(),
            machine_tag: pretags
                .and_then(|p| p.get(t.index))
                .and_then(Option::as_ref)
                .and_then(|a| a.cs),
            annotation: work.and_then(|w| w.get(t.index)).cloned().flatten(),
        })
        .collect();
    UnitPayload {
        unit_id: unit.id.clone(),
        genre: unit.genre.to_string(),
        dialect: unit.dialect.clone(),
        text: unit.text.clone(),
        tokens,
    }
}

pub fn task_payload(
    task: &Task,
    units: &BTreeMap<String, Unit>,
    pretags: &BTreeMap<String, Vec<Option<TokenAnnotation>>>,
) -> TaskPayload {
    TaskPayload {
        task_id: task.id.clone(),
        status: task.status,
        feedback: task.feedback.clone(),
        grade: task.grade,
        units: task
            .unit_ids
            .iter()
            .filter_map(|uid| {
                units
                    .get(uid)
                    .map(|u| unit_payload(u, pretags.get(uid), task.work.get(uid)))
            })
            .collect(),
        menus: TagMenus::default(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pretag::{build_unit, NormalizationTable};
    use crate::tagschema::Genre;
    use chrono::TimeZone;

    fn t(min: i64) -> DateTime<Utc> {
        Utc.timestamp_opt(1_700_000_000 + min * 60, 0).unwrap()
    }

    fn fixture() -> (Task, BTreeMap<String, Unit>) {
        let table = NormalizationTable::default();
        let mut units = BTreeMap::new();
        units.insert(
            "u1".to_string(),
            build_unit("u1", Genre::Tweet, "EGY", "ولكن مش خيال", &table),
        );
        units.insert(
            "u2".to_string(),
            build_unit("u2", Genre::Tweet, "EGY", "علمي .", &table),
        );
        let task = Task::new(
            "t1".into(),
            "b1".into(),
            "ann1".into(),
            vec!["u1".into(), "u2".into()],
            t(0),
        );
        (task, units)
    }

    fn full(units: &BTreeMap<String, Unit>) -> UnitWork {
        units
            .iter()
            .map(|(id, u)| {
                (
                    id.clone(),
                    u.tokens
                        .iter()
                        .map(|_| Some(TokenAnnotation::human(CsTag::Msa, PosTag::Noun)))
                        .collect(),
                )
            })
            .collect()
    }

    #[test]
    fn lifecycle_edges() {
        use TaskStatus::*;
        let legal: Vec<_> = TaskStatus::ALL
            .iter()
            .flat_map(|a| TaskStatus::ALL.iter().map(move |b| (*a, *b)))
            .filter(|(a, b)| a.can_move_to(*b))
            .collect();
        assert_eq!(
            legal,
            vec![
                (Assigned, InProgress),
                (InProgress, Submitted),
                (Submitted, Accepted),
                (Submitted, Rejected),
                (Rejected, InProgress)
            ]
        );
    }

    #[test]
    fn full_submission() {
        let (task, units) = fixture();
        let done = submit_task(
            &task,
            "ann1",
            &full(&units),
            SubmitMode::Submit,
            &units,
            t(5),
        )
        .unwrap();
        assert_eq!(done.status, TaskStatus::Submitted);
        assert_eq!(done.submitted_at(), Some(t(5)));
    }

    #[test]
    fn missing_cs_is_named() {
        let (task, units) = fixture();
        let mut work = full(&units);
        work.get_mut("u1").unwrap()[1].as_mut().unwrap().cs = None;
        let err = submit_task(&task, "ann1", &work, SubmitMode::Submit, &units, t(5)).unwrap_err();
        match err {
            Error::Incomplete { missing } => assert_eq!(missing, vec!["u1:1".to_string()]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unconfirmed_machine_tags_do_not_count() {
        let (task, units) = fixture();
        let mut work = full(&units);
        let slot = work.get_mut("u2").unwrap()[1].as_mut().unwrap();
        slot.origin = crate::tagschema::Origin::Machine;
        slot.cs = Some(CsTag::Punctuation);
        assert!(submit_task(&task, "ann1", &work, SubmitMode::Submit, &units, t(5)).is_err());
        work.get_mut("u2").unwrap()[1].as_mut().unwrap().confirmed = true;
        assert!(submit_task(&task, "ann1", &work, SubmitMode::Submit, &units, t(5)).is_ok());
    }

    #[test]
    fn partial_save_is_resumable() {
        let (task, units) = fixture();
        let mut work = full(&units);
        work.remove("u2");
        work.get_mut("u1").unwrap()[2] = None;
        let saved = submit_task(&task, "ann1", &work, SubmitMode::Save, &units, t(1)).unwrap();
        assert_eq!(saved.status, TaskStatus::InProgress);
        let json = serde_json::to_string(&saved).unwrap();
        let reloaded: Task = serde_json::from_str(&json).unwrap();
        assert_eq!(reloaded, saved);
        assert_eq!(reloaded.work["u1"], work["u1"]);
    }

    #[test]
    fn wrong_user_and_stale_user() {
        let (mut task, units) = fixture();
        let err = submit_task(
            &task,
            "mallory",
            &full(&units),
            SubmitMode::Save,
            &units,
            t(1),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Unauthorized { .. }));
        task.reassign("ann2").unwrap();
        let err =
            submit_task(&task, "ann1", &full(&units), SubmitMode::Save, &units, t(1)).unwrap_err();
        assert!(matches!(err, Error::StaleTask { .. }));
    }

    #[test]
    fn rejected_tasks_reopen() {
        let (task, units) = fixture();
        let mut done = submit_task(
            &task,
            "ann1",
            &full(&units),
            SubmitMode::Submit,
            &units,
            t(5),
        )
        .unwrap();
        done.transition(TaskStatus::Rejected, t(6)).unwrap();
        let again = submit_task(
            &done,
            "ann1",
            &full(&units),
            SubmitMode::Submit,
            &units,
            t(7),
        )
        .unwrap();
        assert_eq!(again.status, TaskStatus::Submitted);
        let statuses: Vec<_> = again.history.iter().map(|h| h.status).collect();
        use TaskStatus::*;
        assert_eq!(
            statuses,
            vec![Assigned, InProgress, Submitted, Rejected, InProgress, Submitted]
        );
    }

    #[test]
    fn timestamps_are_monotone() {
        let (mut task, _) = fixture();
        task.transition(TaskStatus::InProgress, t(3)).unwrap();
        assert!(task.transition(TaskStatus::Submitted, t(2)).is_err());
    }
}
