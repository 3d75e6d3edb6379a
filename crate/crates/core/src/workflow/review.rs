use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::assign::{OverlapEntry, QcPolicy};
use super::task::{Task, TaskStatus};
use crate::agreement::{
    disagreement_report, matrix_from_units, AgreementReport, DisagreementRecord, OverlapUnit,
};
use crate::error::{Error, Result};
use crate::tagschema::{CsTag, Unit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QcDecision {
    Accepted,
    RepeatAnnotation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QcOutcome {
    pub decision: QcDecision,
    /// Tags whose agreement fell below the per-tag threshold.
    pub guideline_flags: BTreeSet<CsTag>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Batch {
    pub id: String,
    /// Period label, e.g. an ISO week such as `2026-W42`.
    pub period: String,
    pub dialect: String,
    pub task_ids: Vec<String>,
    pub manifest: Vec<OverlapEntry>,
    pub created_at: DateTime<Utc>,
    pub report: Option<AgreementReport>,
    pub outcome: Option<QcOutcome>,
}

/// Applies the batch and per-tag gates to a report.
pub fn decide_outcome(report: &AgreementReport, policy: &QcPolicy) -> QcOutcome {
    let decision = if report.overall_percent < policy.batch_iaa_threshold {
        QcDecision::RepeatAnnotation
    } else {
        QcDecision::Accepted
    };
    let guideline_flags = report
        .per_tag
        .iter()
        .filter(|(_, t)| t.psa.is_some_and(|s| s < policy.tag_iaa_threshold))
        .map(|(tag, _)| *tag)
        .collect();
    QcOutcome {
        decision,
        guideline_flags,
    }
}

fn task_for<'a>(
    tasks: &'a BTreeMap<String, Task>,
    batch: &Batch,
    annotator: &str,
    unit: &str,
) -> Option<&'a Task> {
    batch
        .task_ids
        .iter()
        .filter_map(|id| tasks.get(id))
        .find(|t| t.annotator == annotator && t.unit_ids.iter().any(|u| u == unit))
}

/// Collects every annotator's CS tags for the batch's shared units.
pub fn overlap_units(
    batch: &Batch,
    tasks: &BTreeMap<String, Task>,
    units: &BTreeMap<String, Unit>,
) -> Result<Vec<OverlapUnit>> {
    let mut out = Vec::new();
    for entry in &batch.manifest {
        let unit = units
            .get(&entry.unit_id)
            .ok_or_else(|| Error::NotFound(format!("unit {}", entry.unit_id)))?;
        let mut ratings = Vec::new();
        for ann in &entry.annotators {
            let task = task_for(tasks, batch, ann, &entry.unit_id).ok_or_else(|| {
                Error::NotFound(format!("task of {ann} for unit {}", entry.unit_id))
            })?;
            if !task.status.is_handed_in() {
                return Err(Error::NotReady(batch.id.clone()));
            }
            let tags = task
                .cs_tags(&entry.unit_id)
                .ok_or_else(|| Error::Incomplete {
                    missing: vec![format!("{}:{}", task.id, entry.unit_id)],
                })?;
            ratings.push((ann.clone(), tags));
        }
        out.push(OverlapUnit {
            unit_id: unit.id.clone(),
            surfaces: unit.tokens.iter().map(|t| t.surface.clone()).collect(),
            ratings,
        });
    }
    Ok(out)
}

/// Scores the shared units of a batch and applies the gates.
///
/// Submitted tasks move to accepted, or to rejected with feedback when the
/// batch must be repeated. Tasks already reviewed are left alone, so running
/// the review again on an unchanged batch gives the same outcome. A batch
/// without shared units is accepted without a report.
pub fn review_batch(
    batch: &mut Batch,
    tasks: &mut BTreeMap<String, Task>,
    units: &BTreeMap<String, Unit>,
    policy: &QcPolicy,
    at: DateTime<Utc>,
) -> Result<QcOutcome> {
    let shared = overlap_units(batch, tasks, units)?;
    let (report, outcome) = if shared.is_empty() {
        (
            None,
            QcOutcome {
                decision: QcDecision::Accepted,
                guideline_flags: BTreeSet::new(),
            },
        )
    } else {
        let report = AgreementReport::from_matrix(&matrix_from_units(&shared)?)?;
        let outcome = decide_outcome(&report, policy);
        (Some(report), outcome)
    };

    for id in &batch.task_ids {
        let Some(task) = tasks.get_mut(id) else {
            continue;
        };
        if task.status != TaskStatus::Submitted {
            continue;
        }
        match outcome.decision {
            QcDecision::Accepted => task.transition(TaskStatus::Accepted, at)?,
            QcDecision::RepeatAnnotation => {
                task.transition(TaskStatus::Rejected, at)?;
                let overall = report.as_ref().map_or(0.0, |r| r.overall_percent);
                task.feedback.push(format!(
                    "batch {} agreement {:.2}% is below {:.2}%; please re-annotate",
                    batch.id,
                    overall * 100.0,
                    policy.batch_iaa_threshold * 100.0
                ));
            }
        }
    }
    batch.report = report;
    batch.outcome = Some(outcome.clone());
    Ok(outcome)
}

/// Disagreement listing over the batch's shared units.
pub fn batch_disagreements(
    batch: &Batch,
    tasks: &BTreeMap<String, Task>,
    units: &BTreeMap<String, Unit>,
) -> Result<Vec<DisagreementRecord>> {
    disagreement_report(&overlap_units(batch, tasks, units)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agreement::TagAgreement;

    fn report(overall: f64, tags: &[(CsTag, f64)]) -> AgreementReport {
        let per_tag = CsTag::ALL
            .iter()
            .map(|t| {
                let psa = tags.iter().find(|(x, _)| x == t).map(|(_, s)| *s);
                (
                    *t,
                    TagAgreement {
                        psa,
                        kappa: None,
                        percent: 1.0,
                        support: 0,
                    },
                )
            })
            .collect();
        AgreementReport {
            overall_percent: overall,
            kappa: None,
            per_tag,
            item_count: 1,
            rater_count: 2,
        }
    }

    #[test]
    fn batch_gate_is_strict() {
        let p = QcPolicy::default();
        assert_eq!(
            decide_outcome(&report(0.85, &[]), &p).decision,
            QcDecision::RepeatAnnotation
        );
        assert_eq!(
            decide_outcome(&report(0.899, &[]), &p).decision,
            QcDecision::RepeatAnnotation
        );
        assert_eq!(
            decide_outcome(&report(0.90, &[]), &p).decision,
            QcDecision::Accepted
        );
        assert_eq!(
            decide_outcome(&report(0.931, &[]), &p).decision,
            QcDecision::Accepted
        );
    }

    #[test]
    fn tag_flags() {
        let p = QcPolicy::default();
        let o = decide_outcome(
            &report(0.93, &[(CsTag::Ambiguous, 0.2844), (CsTag::Msa, 0.80)]),
            &p,
        );
        assert_eq!(o.decision, QcDecision::Accepted);
        assert_eq!(o.guideline_flags, BTreeSet::from([CsTag::Ambiguous]));
    }
}
