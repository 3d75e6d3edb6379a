use chrono::TimeZone;

use super::*;
use crate::pretag::{build_unit, NormalizationTable};
use crate::tagschema::{Genre, PosTag};

fn t(min: i64) -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2024, 3, 1, 9, 0, 0).unwrap() + chrono::Duration::minutes(min)
}

fn user(id: &str, role: Role, dialect: Option<&str>) -> Event {
    Event::RegisterUser {
        user: User {
            id: id.into(),
            role,
            dialect: dialect.map(str::to_string),
            credentials_ref: format!("cred-{id}"),
        },
        credential: "$argon2id$placeholder".into(),
    }
}

fn seeded() -> Platform {
    let mut p = Platform::new();
    for e in [
        user("root", Role::SuperUser, None),
        user("lead", Role::LeadAnnotator, Some("EGY")),
        user("a1", Role::Annotator, Some("EGY")),
        user("a2", Role::Annotator, Some("EGY")),
    ] {
        p.apply(&e, t(0)).unwrap();
    }
    let table = NormalizationTable::default();
    let units: Vec<Unit> = (0..10)
        .map(|i| build_unit(&format!("u{i}"), Genre::Tweet, "EGY", "ولكن مش", &table))
        .collect();
    p.apply(
        &Event::ImportUnits {
            units,
            pretags: BTreeMap::new(),
        },
        t(0),
    )
    .unwrap();
    p.apply(
        &Event::SetCorpus {
            id: "egy".into(),
            meta: DocumentMeta {
                source: "test".into(),
                languages: vec!["MSA".into(), "DA".into()],
                speaker: None,
                genre: Genre::Tweet,
            },
        },
        t(0),
    )
    .unwrap();
    p
}

fn batch(p: &mut Platform, id: &str, at: DateTime<Utc>) {
    p.apply(
        &Event::CreateBatch {
            batch_id: id.into(),
            period: "2024-W09".into(),
            dialect: "EGY".into(),
            unit_ids: (0..10).map(|i| format!("u{i}")).collect(),
            seed: 7,
            policy: QcPolicy::default(),
        },
        at,
    )
    .unwrap();
}

fn complete_work(p: &Platform, task: &str, tag: CsTag) -> UnitWork {
    p.tasks[task]
        .unit_ids
        .iter()
        .map(|u| {
            (
                u.clone(),
                p.units[u]
                    .tokens
                    .iter()
                    .map(|_| Some(TokenAnnotation::human(tag, PosTag::Noun)))
                    .collect(),
            )
        })
        .collect()
}

fn submit(
    p: &mut Platform,
    task: &str,
    user: &str,
    tag: CsTag,
    request: Option<&str>,
) -> Result<()> {
    let work = complete_work(p, task, tag);
    p.apply(
        &Event::SaveWork {
            task_id: task.into(),
            user: user.into(),
            work,
            mode: SubmitMode::Submit,
            request_id: request.map(Into::into),
        },
        t(5),
    )
}

#[test]
fn batch_creates_one_task_per_annotator() {
    let mut p = seeded();
    batch(&mut p, "b1", t(1));
    assert_eq!(
        p.batches["b1"].task_ids,
        vec!["b1.a1".to_string(), "b1.a2".to_string()]
    );
    assert_eq!(p.batches["b1"].manifest.len(), 1);
    let total: usize = p.tasks.values().map(|t| t.unit_ids.len()).sum();
    assert_eq!(total, 11);
}

#[test]
fn next_task_is_oldest() {
    let mut p = seeded();
    batch(&mut p, "b2", t(2));
    batch(&mut p, "b1", t(3));
    assert_eq!(p.next_task("a1").unwrap().id, "b2.a1");
    assert!(p.next_task("lead").is_none());
}

#[test]
fn review_accepts_agreeing_batch_and_exports() {
    let mut p = seeded();
    batch(&mut p, "b1", t(1));
    submit(&mut p, "b1.a1", "a1", CsTag::Msa, None).unwrap();
    assert!(matches!(
        p.apply(
            &Event::ReviewBatch {
                batch_id: "b1".into(),
                policy: QcPolicy::default()
            },
            t(6)
        ),
        Err(Error::NotReady(_))
    ));
    submit(&mut p, "b1.a2", "a2", CsTag::Msa, None).unwrap();
    p.apply(
        &Event::ReviewBatch {
            batch_id: "b1".into(),
            policy: QcPolicy::default(),
        },
        t(6),
    )
    .unwrap();
    assert_eq!(p.tasks["b1.a1"].status, TaskStatus::Accepted);
    let corpus = p.corpus().unwrap();
    let xml = crate::corpusstore::export_xml(&corpus, &crate::corpusstore::Selection::LeadAccepted)
        .unwrap();
    assert_eq!(
        String::from_utf8(xml).unwrap().matches("<unit ").count(),
        10
    );
}

#[test]
fn repeated_request_applies_once() {
    let mut p = seeded();
    batch(&mut p, "b1", t(1));
    submit(&mut p, "b1.a1", "a1", CsTag::Msa, Some("r1")).unwrap();
    let before = p.clone();
    submit(&mut p, "b1.a1", "a1", CsTag::Da, Some("r1")).unwrap();
    assert_eq!(p, before);
    assert_eq!(p.receipt("a1/r1").unwrap().status, "submitted");
}

#[test]
fn failed_event_leaves_state_alone() {
    let mut p = seeded();
    batch(&mut p, "b1", t(1));
    let before = p.clone();
    assert!(submit(&mut p, "b1.a1", "a2", CsTag::Msa, Some("r9")).is_err());
    assert!(p
        .apply(&user("lead2", Role::LeadAnnotator, Some("EGY")), t(2))
        .is_err());
    assert_eq!(p, before);
    assert!(p.receipt("a2/r9").is_none());
}

#[test]
fn reassigned_task_is_stale_for_previous_owner() {
    let mut p = seeded();
    p.apply(&user("a3", Role::Annotator, Some("EGY")), t(0))
        .unwrap();
    batch(&mut p, "b1", t(1));
    p.apply(
        &Event::ReassignTask {
            task_id: "b1.a1".into(),
            to: "a3".into(),
        },
        t(2),
    )
    .unwrap();
    assert!(matches!(
        submit(&mut p, "b1.a1", "a1", CsTag::Msa, None),
        Err(Error::StaleTask { .. })
    ));
    submit(&mut p, "b1.a1", "a3", CsTag::Msa, None).unwrap();
}

#[test]
fn crowd_flow() {
    let mut p = seeded();
    let items: Vec<GoldItem> = (0..25)
        .map(|i| GoldItem::new(&format!("كلمة{i} x"), 0, CsTag::Msa).unwrap())
        .collect();
    p.apply(&Event::LoadGoldPool { items }, t(0)).unwrap();
    let quiz = p.quiz_for("w1").unwrap();
    assert_eq!(quiz, p.quiz_for("w1").unwrap());
    let policy = CrowdPolicy::default();
    p.apply(
        &Event::QuizAttempt {
            worker: "w1".into(),
            quiz,
            responses: vec![CsTag::Msa; 20],
            policy,
        },
        t(1),
    )
    .unwrap();
    assert_eq!(p.workers["w1"].status, Qualification::Qualified);

    let work = vec![WorkItem {
        id: "x1".into(),
        text: "مش x".into(),
        target: 0,
    }];
    p.apply(
        &Event::CreateJobStream {
            stream_id: "s1".into(),
            worker: "w1".into(),
            work,
            rate: 0.5,
            seed: 3,
        },
        t(2),
    )
    .unwrap();
    let jobs = p.open_jobs("s1").unwrap();
    assert_eq!(jobs.len(), 2);
    for j in &jobs {
        let e = Event::JobAnswer {
            stream_id: "s1".into(),
            job_id: j.job_id.clone(),
            answer: CsTag::Da,
            policy,
            request_id: None,
        };
        p.apply(&e, t(3)).unwrap();
    }
    assert_eq!(
        p.work_answers(),
        vec![("w1".to_string(), "x1".to_string(), CsTag::Da)]
    );
    assert!(p.open_jobs("s1").unwrap().is_empty());
}

#[test]
fn store_replays() {
    let dir = tempfile::tempdir().unwrap();
    {
        let mut s = Store::open(dir.path()).unwrap();
        s.commit(user("root", Role::SuperUser, None), t(0)).unwrap();
        s.commit(user("a1", Role::Annotator, Some("EGY")), t(0))
            .unwrap();
        assert!(s.commit(user("root", Role::SuperUser, None), t(0)).is_err());
    }
    let s = Store::open(dir.path()).unwrap();
    assert_eq!(s.state().directory.iter().count(), 2);
}
