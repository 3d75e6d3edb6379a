use std::collections::BTreeMap;
use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use csanno::agreement::{
    disagreement_report_with, AgreementReport, DisagreementRecord, Pseudonyms,
};
use csanno::corpusstore::{export_xml, Selection};
use csanno::crowd::{aggregate_labels, Aggregate, JobPayload, Qualification, WorkItem};
use csanno::platform::{verify_secret, Event};
use csanno::tagschema::CsTag;
use csanno::workflow::{
    overlap_units, task_payload, QcOutcome, Role, SubmitMode, TaskPayload, TaskStatus, UnitWork,
};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::access::Endpoint;
use crate::error::ApiError;
use crate::session::{sign, Claims, Session};
use crate::AppState;

type ApiResult<T> = Result<T, ApiError>;
type AppRef = State<Arc<AppState>>;

pub(crate) fn build(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/auth", post(login).delete(logout))
        .route("/tasks/next", get(next_task))
        .route("/tasks/{id}/annotations", post(submit_annotations))
        .route("/batches/{id}/report", get(batch_report))
        .route("/corpus/export", get(corpus_export))
        .route("/crowd/quiz", get(quiz).post(answer_quiz))
        .route("/crowd/jobs", post(create_jobs))
        .route("/crowd/jobs/{stream}", get(open_jobs))
        .route("/crowd/jobs/{stream}/answers", post(answer_job))
        .route("/crowd/labels", get(crowd_labels))
        .with_state(state)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LoginRequest {
    pub user: String,
    pub secret: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LoginResponse {
    pub token: String,
    pub user: String,
    pub role: Role,
    pub expires_at: chrono::DateTime<chrono::Utc>,
}

async fn login(
    State(app): AppRef,
    Json(req): Json<LoginRequest>,
) -> ApiResult<Json<LoginResponse>> {
    let (stored, role) = {
        let store = app.read()?;
        let p = store.state();
        (
            p.credential(&req.user).map(str::to_string),
            p.directory.get(&req.user).map(|u| u.role),
        )
    };
    let secret = req.secret;
    let ok = tokio::task::spawn_blocking(move || verify_secret(stored.as_deref(), &secret))
        .await
        .map_err(|_| ApiError::internal())?;
    let (true, Some(role)) = (ok, role) else {
        return Err(ApiError::invalid_credentials());
    };
    let expires_at = app.now() + app.session_ttl;
    let claims = Claims {
        sid: uuid::Uuid::new_v4().to_string(),
        sub: req.user.clone(),
        role,
        exp: expires_at.timestamp(),
    };
    Ok(Json(LoginResponse {
        token: sign(&app.session_key, &claims),
        user: req.user,
        role,
        expires_at,
    }))
}

async fn logout(State(app): AppRef, session: Session) -> ApiResult<StatusCode> {
    let claims = session.require(Endpoint::Logout)?;
    app.commit(Event::RevokeSession {
        token_id: claims.sid.clone(),
    })?;
    Ok(StatusCode::NO_CONTENT)
}

async fn next_task(State(app): AppRef, session: Session) -> ApiResult<Json<TaskPayload>> {
    let claims = session.require(Endpoint::NextTask)?;
    let store = app.read()?;
    let p = store.state();
    let task = p.next_task(&claims.sub).ok_or_else(|| {
        ApiError::new(
            StatusCode::NOT_FOUND,
            "no-task-available",
            "no task is waiting for you",
        )
    })?;
    Ok(Json(task_payload(task, &p.units, &p.pretags)))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubmitRequest {
    pub mode: SubmitMode,
    #[serde(default)]
    pub request_id: Option<String>,
    pub units: UnitWork,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubmitAck {
    pub task_id: String,
    pub status: String,
}

async fn submit_annotations(
    State(app): AppRef,
    session: Session,
    Path(id): Path<String>,
    Json(req): Json<SubmitRequest>,
) -> ApiResult<Json<SubmitAck>> {
    let claims = session.require(Endpoint::SubmitAnnotations)?;
    let event = Event::SaveWork {
        task_id: id.clone(),
        user: claims.sub.clone(),
        work: req.units,
        mode: req.mode,
        request_id: req.request_id,
    };
    let key = event.request_key();
    app.commit(event)?;
    let store = app.read()?;
    let p = store.state();
    let status = match key.as_deref().and_then(|k| p.receipt(k)) {
        Some(r) => r.status.clone(),
        None => p
            .tasks
            .get(&id)
            .map(|t| t.status.to_string())
            .ok_or_else(ApiError::internal)?,
    };
    Ok(Json(SubmitAck {
        task_id: id,
        status,
    }))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatchReport {
    pub batch_id: String,
    pub dialect: String,
    pub outcome: QcOutcome,
    /// Absent when the batch has no shared units.
    pub report: Option<AgreementReport>,
    pub disagreements: Vec<DisagreementRecord>,
    /// Pseudonym to annotator id; only for the batch's own lead and the
    /// super-user.
    pub pseudonyms: Option<Vec<(String, String)>>,
}

async fn batch_report(
    State(app): AppRef,
    session: Session,
    Path(id): Path<String>,
) -> ApiResult<Json<BatchReport>> {
    let claims = session.require(Endpoint::BatchReport)?;
    let (dialect, needs_review) = {
        let store = app.read()?;
        let p = store.state();
        let batch = p
            .batches
            .get(&id)
            .ok_or_else(|| ApiError::from(csanno::Error::NotFound(format!("batch {id}"))))?;
        let pending = batch.task_ids.iter().any(|t| {
            p.tasks
                .get(t)
                .is_some_and(|t| t.status == TaskStatus::Submitted)
        });
        (batch.dialect.clone(), batch.outcome.is_none() || pending)
    };
    let own = claims.role == Role::SuperUser || {
        let store = app.read()?;
        store
            .state()
            .directory
            .get(&claims.sub)
            .and_then(|u| u.dialect.as_deref())
            == Some(dialect.as_str())
    };
    if needs_review && own {
        app.commit(Event::ReviewBatch {
            batch_id: id.clone(),
            policy: app.settings.qc(),
        })?;
    }
    let store = app.read()?;
    let p = store.state();
    let batch = &p.batches[&id];
    let outcome = batch
        .outcome
        .clone()
        .ok_or_else(|| ApiError::from(csanno::Error::NotReady(id.clone())))?;
    let mut names = Pseudonyms::default();
    let disagreements =
        disagreement_report_with(&overlap_units(batch, &p.tasks, &p.units)?, &mut names)?;
    Ok(Json(BatchReport {
        batch_id: id.clone(),
        dialect,
        outcome,
        report: batch.report.clone(),
        disagreements,
        pseudonyms: own.then(|| names.key()),
    }))
}

#[derive(Debug, Clone, Deserialize)]
pub struct ExportQuery {
    /// `lead-accepted` (default), `adjudicated` or `annotator`.
    #[serde(default)]
    pub selection: Option<String>,
    #[serde(default)]
    pub annotator: Option<String>,
}

async fn corpus_export(
    State(app): AppRef,
    session: Session,
    Query(q): Query<ExportQuery>,
) -> ApiResult<Response> {
    session.require(Endpoint::CorpusExport)?;
    let selection =
        match (
            q.selection.as_deref().unwrap_or("lead-accepted"),
            q.annotator,
        ) {
            ("lead-accepted", None) => Selection::LeadAccepted,
            ("adjudicated", None) => Selection::Adjudicated,
            ("annotator", Some(a)) => Selection::Annotator(a),
            _ => return Err(ApiError::bad_request(
                "selection must be lead-accepted, adjudicated, or annotator with an annotator id",
            )),
        };
    let corpus = app.read()?.state().corpus()?;
    let xml = export_xml(&corpus, &selection)?;
    Ok((
        [(header::CONTENT_TYPE, "application/xml; charset=utf-8")],
        xml,
    )
        .into_response())
}

#[derive(Debug, Clone, Deserialize)]
pub struct WorkerQuery {
    pub worker: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuizItem {
    pub text: String,
    pub target: usize,
    pub choices: Vec<CsTag>,
}

fn crowd_choices() -> Vec<CsTag> {
    CsTag::ALL
        .iter()
        .copied()
        .filter(|t| t.is_crowd_label())
        .collect()
}

async fn quiz(
    State(app): AppRef,
    session: Session,
    Query(q): Query<WorkerQuery>,
) -> ApiResult<Json<Vec<QuizItem>>> {
    session.require(Endpoint::CrowdQuiz)?;
    let store = app.read()?;
    let p = store.state();
    let items = p
        .quiz_for(&q.worker)?
        .into_iter()
        .map(|i| QuizItem {
            text: p.gold_pool[i].text.clone(),
            target: p.gold_pool[i].target,
            choices: crowd_choices(),
        })
        .collect();
    Ok(Json(items))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuizAnswers {
    pub worker: String,
    pub responses: Vec<CsTag>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuizVerdict {
    pub worker: String,
    pub correct: usize,
    pub status: Qualification,
}

async fn answer_quiz(
    State(app): AppRef,
    session: Session,
    Json(req): Json<QuizAnswers>,
) -> ApiResult<Json<QuizVerdict>> {
    session.require(Endpoint::CrowdQuiz)?;
    let quiz = app.read()?.state().quiz_for(&req.worker)?;
    app.commit(Event::QuizAttempt {
        worker: req.worker.clone(),
        quiz: quiz.clone(),
        responses: req.responses.clone(),
        policy: app.settings.crowd(),
    })?;
    let store = app.read()?;
    let p = store.state();
    let correct = quiz
        .iter()
        .zip(&req.responses)
        .filter(|(i, r)| p.gold_pool[**i].tag == **r)
        .count();
    Ok(Json(QuizVerdict {
        worker: req.worker.clone(),
        correct,
        status: p.workers[&req.worker].status,
    }))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JobsRequest {
    pub worker: String,
    pub items: Vec<WorkItem>,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JobsResponse {
    pub stream_id: String,
    pub jobs: Vec<JobPayload>,
}

async fn create_jobs(
    State(app): AppRef,
    session: Session,
    Json(req): Json<JobsRequest>,
) -> ApiResult<Json<JobsResponse>> {
    session.require(Endpoint::CrowdJobs)?;
    let stream_id = uuid::Uuid::new_v4().to_string();
    app.commit(Event::CreateJobStream {
        stream_id: stream_id.clone(),
        worker: req.worker,
        work: req.items,
        rate: app.settings.gold_rate,
        seed: req.seed.unwrap_or_else(|| rand::thread_rng().gen()),
    })?;
    let jobs = app.read()?.state().open_jobs(&stream_id)?;
    Ok(Json(JobsResponse { stream_id, jobs }))
}

async fn open_jobs(
    State(app): AppRef,
    session: Session,
    Path(stream): Path<String>,
) -> ApiResult<Json<Vec<JobPayload>>> {
    session.require(Endpoint::CrowdJobs)?;
    Ok(Json(app.read()?.state().open_jobs(&stream)?))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JobAnswerRequest {
    pub job_id: String,
    pub answer: CsTag,
    #[serde(default)]
    pub request_id: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JobAnswerAck {
    pub job_id: String,
    pub worker_status: String,
}

async fn answer_job(
    State(app): AppRef,
    session: Session,
    Path(stream): Path<String>,
    Json(req): Json<JobAnswerRequest>,
) -> ApiResult<Json<JobAnswerAck>> {
    session.require(Endpoint::CrowdJobs)?;
    let event = Event::JobAnswer {
        stream_id: stream.clone(),
        job_id: req.job_id.clone(),
        answer: req.answer,
        policy: app.settings.crowd(),
        request_id: req.request_id,
    };
    let key = event.request_key();
    app.commit(event)?;
    let store = app.read()?;
    let p = store.state();
    let worker_status = match key.as_deref().and_then(|k| p.receipt(k)) {
        Some(r) => r.status.clone(),
        None => {
            let worker = &p.streams[&stream].worker;
            p.workers
                .get(worker)
                .map(|w| w.status.to_string())
                .ok_or_else(ApiError::internal)?
        }
    };
    Ok(Json(JobAnswerAck {
        job_id: req.job_id,
        worker_status,
    }))
}

async fn crowd_labels(
    State(app): AppRef,
    session: Session,
) -> ApiResult<Json<BTreeMap<String, Aggregate>>> {
    session.require(Endpoint::CrowdJobs)?;
    let store = app.read()?;
    let p = store.state();
    Ok(Json(aggregate_labels(&p.work_answers(), &p.workers)))
}
