//! Event-sourced platform state shared by the HTTP service and the CLI.
//!
//! Every mutation is an [`Event`]. [`Platform::apply`] either applies an
//! event completely or leaves the state untouched, so a log of successfully
//! applied events replays to the same state.

mod credentials;
mod settings;
mod store;

use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Utc};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use credentials::{hash_secret, verify_secret, HashCost};
pub use settings::{Settings, CONFIG_FILE};
pub use store::{Store, LOG_FILE};

use crate::corpusstore::{AnnotationVersion, Corpus, ADJUDICATED, MACHINE_AUTHOR};
use crate::crowd::{
    build_job_stream, grade_quiz, record_gold_result, CrowdPolicy, GoldItem, JobPayload, JobSource,
    JobStream, Qualification, WorkItem, Worker, QUIZ_LENGTH,
};
use crate::error::{Error, Result};
use crate::tagschema::{validate_annotation, CsTag, DocumentMeta, TokenAnnotation, Unit};
use crate::workflow::{
    assign_with_overlap, review_batch, submit_task, Batch, Directory, QcOutcome, QcPolicy, Role,
    SubmitMode, Task, TaskStatus, UnitWork, User, WorkSession,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Event {
    RegisterUser {
        user: User,
        /// Password hash in PHC string format.
        credential: String,
    },
    SetCorpus {
        id: String,
        meta: DocumentMeta,
    },
    ImportUnits {
        units: Vec<Unit>,
        pretags: BTreeMap<String, Vec<Option<TokenAnnotation>>>,
    },
    CreateBatch {
        batch_id: String,
        period: String,
        dialect: String,
        unit_ids: Vec<String>,
        seed: u64,
        policy: QcPolicy,
    },
    SaveWork {
        task_id: String,
        user: String,
        work: UnitWork,
        mode: SubmitMode,
        request_id: Option<String>,
    },
    ReviewBatch {
        batch_id: String,
        policy: QcPolicy,
    },
    GradeTask {
        task_id: String,
        grade: u8,
        comment: Option<String>,
    },
    ReassignTask {
        task_id: String,
        to: String,
    },
    Adjudicate {
        unit_id: String,
        tokens: Vec<Option<TokenAnnotation>>,
    },
    LogSession {
        session: WorkSession,
    },
    LoadGoldPool {
        items: Vec<GoldItem>,
    },
    QuizAttempt {
        worker: String,
        quiz: Vec<usize>,
        responses: Vec<CsTag>,
        policy: CrowdPolicy,
    },
    CreateJobStream {
        stream_id: String,
        worker: String,
        work: Vec<WorkItem>,
        rate: f64,
        seed: u64,
    },
    JobAnswer {
        stream_id: String,
        job_id: String,
        answer: CsTag,
        policy: CrowdPolicy,
        request_id: Option<String>,
    },
    RevokeSession {
        token_id: String,
    },
}

impl Event {
    /// Idempotency key: the client-supplied request id scoped to its caller.
    pub fn request_key(&self) -> Option<String> {
        match self {
            Event::SaveWork {
                user,
                request_id: Some(r),
                ..
            } => Some(format!("{user}/{r}")),
            Event::JobAnswer {
                stream_id,
                request_id: Some(r),
                ..
            } => Some(format!("stream:{stream_id}/{r}")),
            _ => None,
        }
    }
}

/// What a request with an idempotency key produced, returned again on retry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Receipt {
    pub subject: String,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamState {
    pub worker: String,
    pub stream: JobStream,
    /// job id -> answer
    pub answers: BTreeMap<String, CsTag>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Platform {
    pub directory: Directory,
    /// credentials_ref -> PHC hash
    credentials: BTreeMap<String, String>,
    pub corpus_id: Option<String>,
    pub meta: Option<DocumentMeta>,
    pub units: BTreeMap<String, Unit>,
    /// Import order.
    pub unit_order: Vec<String>,
    pub pretags: BTreeMap<String, Vec<Option<TokenAnnotation>>>,
    pub adjudicated: BTreeMap<String, Vec<Option<TokenAnnotation>>>,
    pub tasks: BTreeMap<String, Task>,
    pub batches: BTreeMap<String, Batch>,
    pub sessions: Vec<WorkSession>,
    pub gold_pool: Vec<GoldItem>,
    pub workers: BTreeMap<String, Worker>,
    pub streams: BTreeMap<String, StreamState>,
    /// Request keys already applied.
    requests: BTreeMap<String, Receipt>,
    pub revoked: BTreeSet<String>,
}

pub fn task_id(batch_id: &str, annotator: &str) -> String {
    format!("{batch_id}.{annotator}")
}

impl Platform {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn credential(&self, user_id: &str) -> Option<&str> {
        let user = self.directory.get(user_id)?;
        self.credentials
            .get(&user.credentials_ref)
            .map(String::as_str)
    }

    pub fn receipt(&self, request_key: &str) -> Option<&Receipt> {
        self.requests.get(request_key)
    }

    /// Oldest actionable task of an annotator, by assignment time.
    pub fn next_task(&self, annotator: &str) -> Option<&Task> {
        self.tasks
            .values()
            .filter(|t| {
                t.annotator == annotator
                    && matches!(
                        t.status,
                        TaskStatus::Assigned | TaskStatus::InProgress | TaskStatus::Rejected
                    )
            })
            .min_by(|a, b| {
                a.assigned_at()
                    .cmp(&b.assigned_at())
                    .then_with(|| a.id.cmp(&b.id))
            })
    }

    /// Twenty gold items for a worker's qualifying quiz, fixed per worker.
    pub fn quiz_for(&self, worker: &str) -> Result<Vec<usize>> {
        if self.gold_pool.len() < QUIZ_LENGTH {
            return Err(Error::QuizLength {
                expected: QUIZ_LENGTH,
                got: self.gold_pool.len(),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(fnv1a(worker.as_bytes()));
        let mut idx: Vec<usize> = (0..self.gold_pool.len()).collect();
        idx.shuffle(&mut rng);
        idx.truncate(QUIZ_LENGTH);
        Ok(idx)
    }

    /// Snapshot of the corpus with every stored version: machine pre-tags,
    /// each annotator's work (accepted when the task was accepted) and
    /// adjudicated versions.
    pub fn corpus(&self) -> Result<Corpus> {
        let (Some(id), Some(meta)) = (&self.corpus_id, &self.meta) else {
            return Err(Error::NotReady("corpus metadata has not been set".into()));
        };
        let mut corpus = Corpus::new(id, meta.clone())?;
        for uid in &self.unit_order {
            corpus.add_unit(self.units[uid].clone())?;
            if let Some(p) = self.pretags.get(uid) {
                corpus.add_version(
                    uid,
                    AnnotationVersion {
                        author: MACHINE_AUTHOR.into(),
                        accepted: false,
                        tokens: p.clone(),
                    },
                )?;
            }
        }
        for task in self.tasks.values() {
            for (uid, tokens) in &task.work {
                corpus.add_version(
                    uid,
                    AnnotationVersion {
                        author: task.annotator.clone(),
                        accepted: task.status == TaskStatus::Accepted,
                        tokens: tokens.clone(),
                    },
                )?;
            }
        }
        for (uid, tokens) in &self.adjudicated {
            corpus.add_version(
                uid,
                AnnotationVersion {
                    author: ADJUDICATED.into(),
                    accepted: false,
                    tokens: tokens.clone(),
                },
            )?;
        }
        Ok(corpus)
    }

    fn task(&self, id: &str) -> Result<&Task> {
        self.tasks
            .get(id)
            .ok_or_else(|| Error::NotFound(format!("task {id}")))
    }

    fn unit_slots(&self, unit_id: &str, tokens: &[Option<TokenAnnotation>]) -> Result<()> {
        let unit = self
            .units
            .get(unit_id)
            .ok_or_else(|| Error::NotFound(format!("unit {unit_id}")))?;
        if tokens.len() != unit.tokens.len() {
            return Err(Error::InvalidUnit {
                unit: unit_id.into(),
                reason: format!(
                    "{} annotation slots for {} tokens",
                    tokens.len(),
                    unit.tokens.len()
                ),
            });
        }
        for (tok, ann) in unit.tokens.iter().zip(tokens) {
            if let Some(v) = ann
                .as_ref()
                .and_then(|a| validate_annotation(tok, a).into_iter().next())
            {
                return Err(Error::InvalidAnnotation {
                    path: format!("{unit_id}:{}", tok.index),
                    reason: v.message,
                });
            }
        }
        Ok(())
    }

    /// Applies one event. On error the state is unchanged.
    pub fn apply(&mut self, event: &Event, at: DateTime<Utc>) -> Result<()> {
        let key = event.request_key();
        if key.as_ref().is_some_and(|k| self.requests.contains_key(k)) {
            return Ok(());
        }
        match event {
            Event::RegisterUser { user, credential } => {
                if self.credentials.contains_key(&user.credentials_ref) {
                    return Err(Error::State(format!(
                        "credential {} already in use",
                        user.credentials_ref
                    )));
                }
                self.directory.register(user.clone())?;
                self.credentials
                    .insert(user.credentials_ref.clone(), credential.clone());
            }
            Event::SetCorpus { id, meta } => {
                meta.validate()?;
                self.corpus_id = Some(id.clone());
                self.meta = Some(meta.clone());
            }
            Event::ImportUnits { units, pretags } => {
                let mut seen = BTreeSet::new();
                for u in units {
                    if self.units.contains_key(&u.id) || !seen.insert(&u.id) {
                        return Err(Error::State(format!("duplicate unit id {}", u.id)));
                    }
                    u.check_tokens()?;
                }
                let mut next_units = self.units.clone();
                next_units.extend(units.iter().map(|u| (u.id.clone(), u.clone())));
                let staged = Platform {
                    units: next_units,
                    ..Platform::default()
                };
                for (uid, tags) in pretags {
                    if !seen.contains(uid) {
                        return Err(Error::NotFound(format!("unit {uid} in this import")));
                    }
                    staged.unit_slots(uid, tags)?;
                }
                self.units = staged.units;
                self.unit_order.extend(units.iter().map(|u| u.id.clone()));
                self.pretags.extend(pretags.clone());
            }
            Event::CreateBatch {
                batch_id,
                period,
                dialect,
                unit_ids,
                seed,
                policy,
            } => {
                if self.batches.contains_key(batch_id) {
                    return Err(Error::State(format!("batch {batch_id} already exists")));
                }
                if let Some(u) = unit_ids.iter().find(|u| !self.units.contains_key(*u)) {
                    return Err(Error::NotFound(format!("unit {u}")));
                }
                let annotators: Vec<String> = self
                    .directory
                    .annotators(dialect)
                    .into_iter()
                    .map(|u| u.id.clone())
                    .collect();
                let assignment = assign_with_overlap(unit_ids, &annotators, policy, *seed)?;
                let mut task_ids = Vec::new();
                for (ann, load) in &assignment.loads {
                    if load.is_empty() {
                        continue;
                    }
                    let id = task_id(batch_id, ann);
                    self.tasks.insert(
                        id.clone(),
                        Task::new(id.clone(), batch_id.clone(), ann.clone(), load.clone(), at),
                    );
                    task_ids.push(id);
                }
                self.batches.insert(
                    batch_id.clone(),
                    Batch {
                        id: batch_id.clone(),
                        period: period.clone(),
                        dialect: dialect.clone(),
                        task_ids,
                        manifest: assignment.manifest,
                        created_at: at,
                        report: None,
                        outcome: None,
                    },
                );
            }
            Event::SaveWork {
                task_id,
                user,
                work,
                mode,
                ..
            } => {
                let next = submit_task(self.task(task_id)?, user, work, *mode, &self.units, at)?;
                if let Some(k) = key {
                    self.requests.insert(
                        k,
                        Receipt {
                            subject: task_id.clone(),
                            status: next.status.to_string(),
                        },
                    );
                }
                self.tasks.insert(task_id.clone(), next);
            }
            Event::ReviewBatch { batch_id, policy } => {
                let mut batch = self
                    .batches
                    .get(batch_id)
                    .cloned()
                    .ok_or_else(|| Error::NotFound(format!("batch {batch_id}")))?;
                let mut tasks: BTreeMap<String, Task> = batch
                    .task_ids
                    .iter()
                    .filter_map(|id| self.tasks.get(id).map(|t| (id.clone(), t.clone())))
                    .collect();
                review_batch(&mut batch, &mut tasks, &self.units, policy, at)?;
                self.tasks.extend(tasks);
                self.batches.insert(batch_id.clone(), batch);
            }
            Event::GradeTask {
                task_id,
                grade,
                comment,
            } => {
                let mut t = self.task(task_id)?.clone();
                t.set_grade(*grade, comment.clone())?;
                self.tasks.insert(task_id.clone(), t);
            }
            Event::ReassignTask { task_id, to } => {
                let mut t = self.task(task_id)?.clone();
                let user = self
                    .directory
                    .get(to)
                    .ok_or_else(|| Error::NotFound(format!("user {to}")))?;
                if user.role != Role::Annotator {
                    return Err(Error::State(format!("{to} is not an annotator")));
                }
                t.reassign(to)?;
                self.tasks.insert(task_id.clone(), t);
            }
            Event::Adjudicate { unit_id, tokens } => {
                self.unit_slots(unit_id, tokens)?;
                self.adjudicated.insert(unit_id.clone(), tokens.clone());
            }
            Event::LogSession { session } => {
                if session.end < session.start {
                    return Err(Error::State("session ends before it starts".into()));
                }
                self.sessions.push(session.clone());
            }
            Event::LoadGoldPool { items } => {
                for item in items {
                    GoldItem::new(&item.text, item.target, item.tag)?;
                }
                self.gold_pool = items.clone();
            }
            Event::QuizAttempt {
                worker,
                quiz,
                responses,
                policy,
            } => {
                let items = quiz
                    .iter()
                    .map(|&i| {
                        self.gold_pool
                            .get(i)
                            .cloned()
                            .ok_or_else(|| Error::NotFound(format!("gold item {i}")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let mut w = self
                    .workers
                    .get(worker)
                    .cloned()
                    .unwrap_or_else(|| Worker::new(worker));
                grade_quiz(&mut w, responses, &items, policy)?;
                self.workers.insert(worker.clone(), w);
            }
            Event::CreateJobStream {
                stream_id,
                worker,
                work,
                rate,
                seed,
            } => {
                if self.streams.contains_key(stream_id) {
                    return Err(Error::State(format!("stream {stream_id} already exists")));
                }
                let stream = build_job_stream(work, &self.gold_pool, *rate, *seed)?;
                self.streams.insert(
                    stream_id.clone(),
                    StreamState {
                        worker: worker.clone(),
                        stream,
                        answers: BTreeMap::new(),
                    },
                );
            }
            Event::JobAnswer {
                stream_id,
                job_id,
                answer,
                policy,
                ..
            } => {
                let st = self
                    .streams
                    .get(stream_id)
                    .ok_or_else(|| Error::NotFound(format!("stream {stream_id}")))?;
                if st.answers.contains_key(job_id) {
                    return Err(Error::State(format!("job {job_id} already answered")));
                }
                let item = st
                    .stream
                    .items
                    .iter()
                    .find(|i| &i.payload.job_id == job_id)
                    .ok_or_else(|| Error::NotFound(format!("job {job_id}")))?;
                let worker = self
                    .workers
                    .get(&st.worker)
                    .cloned()
                    .unwrap_or_else(|| Worker::new(&st.worker));
                let worker = match item.source {
                    JobSource::Gold { pool_index } => {
                        record_gold_result(&worker, &self.gold_pool[pool_index], *answer, policy)?
                    }
                    JobSource::Work { .. } if worker.status != Qualification::Qualified => {
                        return Err(Error::State(format!(
                            "worker {} may not label work items",
                            worker.id
                        )));
                    }
                    JobSource::Work { .. } => worker,
                };
                if let Some(k) = key {
                    self.requests.insert(
                        k,
                        Receipt {
                            subject: job_id.clone(),
                            status: worker.status.to_string(),
                        },
                    );
                }
                self.workers.insert(worker.id.clone(), worker);
                self.streams
                    .get_mut(stream_id)
                    .expect("checked")
                    .answers
                    .insert(job_id.clone(), *answer);
            }
            Event::RevokeSession { token_id } => {
                self.revoked.insert(token_id.clone());
            }
        }
        Ok(())
    }

    /// Unanswered jobs of a stream as the worker sees them.
    pub fn open_jobs(&self, stream_id: &str) -> Result<Vec<JobPayload>> {
        let st = self
            .streams
            .get(stream_id)
            .ok_or_else(|| Error::NotFound(format!("stream {stream_id}")))?;
        Ok(st
            .stream
            .items
            .iter()
            .filter(|i| !st.answers.contains_key(&i.payload.job_id))
            .map(|i| i.payload.clone())
            .collect())
    }

    /// Answers to work items across all streams as `(worker, item, tag)`.
    pub fn work_answers(&self) -> Vec<(String, String, CsTag)> {
        let mut out = Vec::new();
        for st in self.streams.values() {
            for item in &st.stream.items {
                if let (JobSource::Work { item: id }, Some(tag)) =
                    (&item.source, st.answers.get(&item.payload.job_id))
                {
                    out.push((st.worker.clone(), id.clone(), *tag));
                }
            }
        }
        out
    }

    pub fn outcome(&self, batch_id: &str) -> Option<&QcOutcome> {
        self.batches.get(batch_id)?.outcome.as_ref()
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(0x100_0000_01b3)
    })
}

#[cfg(test)]
mod tests;
