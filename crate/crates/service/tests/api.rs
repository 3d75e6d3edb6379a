use std::collections::{BTreeMap, BTreeSet};
use std::sync::atomic::{AtomicI64, Ordering};
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use chrono::{DateTime, Duration, TimeZone, Utc};
use csanno::crowd::GoldItem;
use csanno::platform::{hash_secret, Event, HashCost, Settings, Store};
use csanno::pretag::{build_unit, NormalizationTable};
use csanno::tagschema::{CsTag, DocumentMeta, Genre};
use csanno::workflow::{QcPolicy, Role, User};
use csanno_service::access::{allowed, Endpoint};
use csanno_service::{router, AppState};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

struct Harness {
    app: Router,
    state: Arc<AppState>,
    clock: Arc<AtomicI64>,
    _dir: tempfile::TempDir,
}

fn base() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2024, 3, 4, 8, 0, 0).unwrap()
}

fn register(store: &mut Store, id: &str, role: Role, dialect: Option<&str>) {
    let credential = hash_secret(&format!("{id}-pw"), HashCost::TEST).unwrap();
    let user = User {
        id: id.into(),
        role,
        dialect: dialect.map(Into::into),
        credentials_ref: format!("c-{id}"),
    };
    store
        .commit(Event::RegisterUser { user, credential }, base())
        .unwrap();
}

fn batch_event(id: &str) -> Event {
    Event::CreateBatch {
        batch_id: id.into(),
        period: "2024-W10".into(),
        dialect: "EGY".into(),
        unit_ids: (0..10).map(|i| format!("u{i}")).collect(),
        seed: 11,
        policy: QcPolicy::default(),
    }
}

fn harness() -> Harness {
    let dir = tempfile::tempdir().unwrap();
    let mut store = Store::open(dir.path()).unwrap();
    register(&mut store, "root", Role::SuperUser, None);
    register(&mut store, "lead", Role::LeadAnnotator, Some("EGY"));
    register(&mut store, "lead-lev", Role::LeadAnnotator, Some("LEV"));
    register(&mut store, "a1", Role::Annotator, Some("EGY"));
    register(&mut store, "a2", Role::Annotator, Some("EGY"));
    let table = NormalizationTable::default();
    let units = (0..10)
        .map(|i| build_unit(&format!("u{i}"), Genre::Tweet, "EGY", "ولكن مش :)", &table))
        .collect();
    store
        .commit(
            Event::ImportUnits {
                units,
                pretags: BTreeMap::new(),
            },
            base(),
        )
        .unwrap();
    let meta = DocumentMeta {
        source: "fixture".into(),
        languages: vec!["MSA".into(), "DA".into()],
        speaker: None,
        genre: Genre::Tweet,
    };
    store
        .commit(
            Event::SetCorpus {
                id: "egy".into(),
                meta,
            },
            base(),
        )
        .unwrap();
    store.commit(batch_event("b1"), base()).unwrap();
    let items = (0..30)
        .map(|i| GoldItem::new(&format!("كلمة{i} x"), 0, CsTag::Msa).unwrap())
        .collect();
    store.commit(Event::LoadGoldPool { items }, base()).unwrap();

    let clock = Arc::new(AtomicI64::new(base().timestamp() + 60));
    let c = clock.clone();
    let state = Arc::new(AppState::with_clock(
        store,
        vec![7; 32],
        Duration::hours(1),
        Settings::default(),
        Arc::new(move || Utc.timestamp_opt(c.load(Ordering::SeqCst), 0).unwrap()),
    ));
    Harness {
        app: router(state.clone()),
        state,
        clock,
        _dir: dir,
    }
}

impl Harness {
    fn advance(&self, secs: i64) {
        self.clock.fetch_add(secs, Ordering::SeqCst);
    }

    async fn call(
        &self,
        method: Method,
        uri: &str,
        token: Option<&str>,
        body: Option<Value>,
    ) -> (StatusCode, Value) {
        let (status, bytes) = self.raw(method, uri, token, body).await;
        let v = if bytes.is_empty() {
            Value::Null
        } else {
            serde_json::from_slice(&bytes).unwrap_or(Value::Null)
        };
        (status, v)
    }

    async fn raw(
        &self,
        method: Method,
        uri: &str,
        token: Option<&str>,
        body: Option<Value>,
    ) -> (StatusCode, Vec<u8>) {
        let mut req = Request::builder().method(method).uri(uri);
        if let Some(t) = token {
            req = req.header("authorization", format!("Bearer {t}"));
        }
        let req = match body {
            Some(b) => req
                .header("content-type", "application/json")
                .body(Body::from(b.to_string()))
                .unwrap(),
            None => req.body(Body::empty()).unwrap(),
        };
        let resp = self.app.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        (
            status,
            resp.into_body()
                .collect()
                .await
                .unwrap()
                .to_bytes()
                .to_vec(),
        )
    }

    async fn login(&self, user: &str) -> String {
        let (s, v) = self
            .call(
                Method::POST,
                "/auth",
                None,
                Some(json!({"user": user, "secret": format!("{user}-pw")})),
            )
            .await;
        assert_eq!(s, StatusCode::OK, "{v}");
        v["token"].as_str().unwrap().to_string()
    }

    fn units_of(&self, task: &str) -> Vec<(String, usize)> {
        let store = self.state.read().unwrap();
        let p = store.state();
        p.tasks[task]
            .unit_ids
            .iter()
            .map(|u| (u.clone(), p.units[u].tokens.len()))
            .collect()
    }

    fn work(&self, task: &str, tag: &str) -> Value {
        let mut units = serde_json::Map::new();
        for (u, n) in self.units_of(task) {
            let toks: Vec<Value> = (0..n)
                .map(|_| json!({"cs": tag, "pos": "NOUN", "typo": "Correct", "origin": "human"}))
                .collect();
            units.insert(u, Value::Array(toks));
        }
        Value::Object(units)
    }

    fn log_len(&self) -> usize {
        let dir = self.state.read().unwrap().dir().to_path_buf();
        std::fs::read_to_string(dir.join(csanno::platform::LOG_FILE))
            .unwrap()
            .lines()
            .count()
    }
}

fn assert_error_body(v: &Value, code: &str) {
    assert_eq!(v["code"], code, "{v}");
    assert!(v["message"].as_str().is_some_and(|m| !m.is_empty()));
    assert!(v["correlation_id"].as_str().is_some_and(|m| m.len() == 36));
}

#[tokio::test]
async fn login_and_bad_credentials() {
    let h = harness();
    let (s, v) = h
        .call(
            Method::POST,
            "/auth",
            None,
            Some(json!({"user": "a1", "secret": "a1-pw"})),
        )
        .await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["role"], "annotator");

    let (s1, wrong) = h
        .call(
            Method::POST,
            "/auth",
            None,
            Some(json!({"user": "a1", "secret": "nope"})),
        )
        .await;
    let (s2, unknown) = h
        .call(
            Method::POST,
            "/auth",
            None,
            Some(json!({"user": "ghost", "secret": "nope"})),
        )
        .await;
    assert_eq!(
        (s1, s2),
        (StatusCode::UNAUTHORIZED, StatusCode::UNAUTHORIZED)
    );
    assert_error_body(&wrong, "invalid-credentials");
    assert_eq!(wrong["message"], unknown["message"]);
    assert_eq!(wrong["code"], unknown["code"]);
}

#[tokio::test]
async fn expired_and_revoked_sessions() {
    let h = harness();
    let tok = h.login("a1").await;
    assert_eq!(
        h.call(Method::GET, "/tasks/next", Some(&tok), None).await.0,
        StatusCode::OK
    );
    h.advance(3600);
    let (s, v) = h.call(Method::GET, "/tasks/next", Some(&tok), None).await;
    assert_eq!(s, StatusCode::UNAUTHORIZED);
    assert_error_body(&v, "unauthenticated");

    let tok = h.login("a1").await;
    assert_eq!(
        h.call(Method::DELETE, "/auth", Some(&tok), None).await.0,
        StatusCode::NO_CONTENT
    );
    assert_eq!(
        h.call(Method::GET, "/tasks/next", Some(&tok), None).await.0,
        StatusCode::UNAUTHORIZED
    );
    assert_eq!(
        h.call(Method::GET, "/tasks/next", Some("x.y"), None)
            .await
            .0,
        StatusCode::UNAUTHORIZED
    );
    assert_eq!(
        h.call(Method::GET, "/tasks/next", None, None).await.0,
        StatusCode::UNAUTHORIZED
    );
}

fn probe(endpoint: Endpoint) -> (Method, &'static str, Option<Value>) {
    match endpoint {
        Endpoint::Logout => (Method::DELETE, "/auth", None),
        Endpoint::NextTask => (Method::GET, "/tasks/next", None),
        Endpoint::SubmitAnnotations => (
            Method::POST,
            "/tasks/b1.a1/annotations",
            Some(json!({"mode": "save", "units": {}})),
        ),
        Endpoint::BatchReport => (Method::GET, "/batches/b1/report", None),
        Endpoint::CorpusExport => (Method::GET, "/corpus/export", None),
        Endpoint::CrowdQuiz => (Method::GET, "/crowd/quiz?worker=w1", None),
        Endpoint::CrowdJobs => (Method::GET, "/crowd/labels", None),
    }
}

#[tokio::test]
async fn authorization_matrix_is_exhaustive() {
    let h = harness();
    let users = [
        (Role::SuperUser, "root"),
        (Role::LeadAnnotator, "lead"),
        (Role::Annotator, "a1"),
    ];
    for &endpoint in Endpoint::ALL {
        for (role, user) in users {
            let tok = h.login(user).await;
            let (method, uri, body) = probe(endpoint);
            let (s, v) = h.call(method, uri, Some(&tok), body).await;
            let forbidden = s == StatusCode::FORBIDDEN && v["code"] == "role-forbidden";
            assert_eq!(
                forbidden,
                !allowed(endpoint, role),
                "{endpoint:?} as {role}: {s} {v}"
            );
        }
    }
}

#[tokio::test]
async fn next_task_is_fifo_and_role_checked() {
    let h = harness();
    h.state.commit(batch_event("b0")).unwrap();
    let tok = h.login("a1").await;
    let (_, v) = h.call(Method::GET, "/tasks/next", Some(&tok), None).await;
    assert_eq!(v["task_id"], "b1.a1");
    assert_eq!(v["menus"]["cs"].as_array().unwrap().len(), 16);
    assert_eq!(v["menus"]["pos"].as_array().unwrap().len(), 14);
    assert_eq!(v["menus"]["typo"].as_array().unwrap().len(), 2);

    let lead = h.login("lead").await;
    let (s, v) = h.call(Method::GET, "/tasks/next", Some(&lead), None).await;
    assert_eq!(s, StatusCode::FORBIDDEN);
    assert_error_body(&v, "role-forbidden");
}

fn shape(v: &Value) -> Value {
    match v {
        Value::Object(m) => Value::Object(m.iter().map(|(k, v)| (k.clone(), shape(v))).collect()),
        Value::Array(a) => Value::Array(a.first().map(shape).into_iter().collect()),
        _ => Value::Null,
    }
}

#[tokio::test]
async fn overlap_is_invisible_to_annotators() {
    let h = harness();
    let shared: BTreeSet<String> = {
        let store = h.state.read().unwrap();
        store.state().batches["b1"]
            .manifest
            .iter()
            .map(|e| e.unit_id.clone())
            .collect()
    };
    let tok = h.login("a1").await;
    let (_, v) = h.call(Method::GET, "/tasks/next", Some(&tok), None).await;
    let units = v["units"].as_array().unwrap();
    let (over, plain): (Vec<&Value>, Vec<&Value>) = units
        .iter()
        .partition(|u| shared.contains(u["unit_id"].as_str().unwrap()));
    assert!(!over.is_empty() && !plain.is_empty());
    for u in over.iter().chain(&plain) {
        assert_eq!(shape(u), shape(plain[0]));
    }
    let text = v.to_string();
    assert!(!text.contains("overlap") && !text.contains("manifest") && !text.contains("a2"));
}

#[tokio::test]
async fn save_submit_and_idempotency() {
    let h = harness();
    let tok = h.login("a1").await;
    let (s, v) = h
        .call(
            Method::POST,
            "/tasks/b1.a1/annotations",
            Some(&tok),
            Some(json!({"mode": "save", "units": {}})),
        )
        .await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["status"], "in-progress");

    let (s, v) = h
        .call(
            Method::POST,
            "/tasks/b1.a1/annotations",
            Some(&tok),
            Some(json!({"mode": "submit", "units": {}, "request_id": "r0"})),
        )
        .await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_error_body(&v, "incomplete");

    let body = json!({"mode": "submit", "units": h.work("b1.a1", "MSA"), "request_id": "r1"});
    let before = h.log_len();
    let (s1, first) = h
        .call(
            Method::POST,
            "/tasks/b1.a1/annotations",
            Some(&tok),
            Some(body.clone()),
        )
        .await;
    let (s2, second) = h
        .call(
            Method::POST,
            "/tasks/b1.a1/annotations",
            Some(&tok),
            Some(body),
        )
        .await;
    assert_eq!((s1, s2), (StatusCode::OK, StatusCode::OK));
    assert_eq!(first, second);
    assert_eq!(first["status"], "submitted");
    assert_eq!(h.log_len(), before + 1);

    let other = h.login("a2").await;
    let (s, v) = h
        .call(
            Method::POST,
            "/tasks/b1.a1/annotations",
            Some(&other),
            Some(json!({"mode": "save", "units": {}})),
        )
        .await;
    assert_eq!(s, StatusCode::FORBIDDEN);
    assert_error_body(&v, "not-task-owner");
}

#[tokio::test]
async fn report_rejection_and_resubmission() {
    let h = harness();
    let lead = h.login("lead").await;
    let a1 = h.login("a1").await;
    let a2 = h.login("a2").await;

    h.call(
        Method::POST,
        "/tasks/b1.a1/annotations",
        Some(&a1),
        Some(json!({"mode": "submit", "units": h.work("b1.a1", "MSA")})),
    )
    .await;
    let (s, v) = h
        .call(Method::GET, "/batches/b1/report", Some(&lead), None)
        .await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_error_body(&v, "not-ready");

    h.call(
        Method::POST,
        "/tasks/b1.a2/annotations",
        Some(&a2),
        Some(json!({"mode": "submit", "units": h.work("b1.a2", "DA")})),
    )
    .await;
    let (s, v) = h
        .call(Method::GET, "/batches/b1/report", Some(&lead), None)
        .await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert_eq!(v["outcome"]["decision"], "repeat-annotation");
    assert_eq!(v["report"]["overall_percent"], 0.0);
    assert!(v["report"]["per_tag"]["MSA"].is_object());
    assert!(!v["disagreements"].as_array().unwrap().is_empty());
    assert!(v["pseudonyms"].is_array());

    let (s, v) = h
        .call(Method::GET, "/batches/b1/report", Some(&a1), None)
        .await;
    assert_eq!(s, StatusCode::FORBIDDEN);
    assert_error_body(&v, "role-forbidden");

    let other_lead = h.login("lead-lev").await;
    let (s, v) = h
        .call(Method::GET, "/batches/b1/report", Some(&other_lead), None)
        .await;
    assert_eq!(s, StatusCode::OK);
    assert!(v["pseudonyms"].is_null());
    assert!(!v.to_string().contains("\"a1\""));

    let (_, task) = h.call(Method::GET, "/tasks/next", Some(&a2), None).await;
    assert_eq!(task["status"], "rejected");
    assert!(!task["feedback"].as_array().unwrap().is_empty());
    let (s, v) = h
        .call(
            Method::POST,
            "/tasks/b1.a2/annotations",
            Some(&a2),
            Some(json!({"mode": "submit", "units": h.work("b1.a2", "MSA")})),
        )
        .await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["status"], "submitted");
}

#[tokio::test]
async fn export_after_acceptance() {
    let h = harness();
    let lead = h.login("lead").await;
    let (s, v) = h
        .call(Method::GET, "/corpus/export", Some(&lead), None)
        .await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_error_body(&v, "incomplete");

    for a in ["a1", "a2"] {
        let tok = h.login(a).await;
        let task = format!("b1.{a}");
        let body = json!({"mode": "submit", "units": h.work(&task, "MSA")});
        assert_eq!(
            h.call(
                Method::POST,
                &format!("/tasks/{task}/annotations"),
                Some(&tok),
                Some(body)
            )
            .await
            .0,
            StatusCode::OK
        );
    }
    let (_, v) = h
        .call(Method::GET, "/batches/b1/report", Some(&lead), None)
        .await;
    assert_eq!(v["outcome"]["decision"], "accepted");
    let (s, body) = h
        .raw(Method::GET, "/corpus/export", Some(&lead), None)
        .await;
    assert_eq!(s, StatusCode::OK);
    let xml = String::from_utf8(body).unwrap();
    assert!(xml.starts_with("<?xml"));
    assert_eq!(xml.matches("<unit ").count(), 10);
    let (s, _) = h
        .call(
            Method::GET,
            "/corpus/export?selection=bogus",
            Some(&lead),
            None,
        )
        .await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn crowd_quiz_and_jobs() {
    let h = harness();
    let lead = h.login("lead").await;
    let (s, quiz) = h
        .call(Method::GET, "/crowd/quiz?worker=w1", Some(&lead), None)
        .await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(quiz.as_array().unwrap().len(), 20);
    assert!(!quiz.to_string().contains("\"tag\""));

    let (s, v) = h
        .call(
            Method::POST,
            "/crowd/quiz",
            Some(&lead),
            Some(json!({"worker": "w1", "responses": vec!["MSA"; 20]})),
        )
        .await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["correct"], 20);
    assert_eq!(v["status"], "qualified");

    let items = json!([{"id": "x1", "text": "مش x", "target": 0}, {"id": "x2", "text": "ولكن x", "target": 0}]);
    let (s, v) = h
        .call(
            Method::POST,
            "/crowd/jobs",
            Some(&lead),
            Some(json!({"worker": "w1", "items": items, "seed": 5})),
        )
        .await;
    assert_eq!(s, StatusCode::OK, "{v}");
    let stream = v["stream_id"].as_str().unwrap().to_string();
    let jobs = v["jobs"].as_array().unwrap().clone();
    for j in &jobs {
        let body = json!({"job_id": j["job_id"], "answer": "MSA", "request_id": j["job_id"]});
        let uri = format!("/crowd/jobs/{stream}/answers");
        let (s1, first) = h
            .call(Method::POST, &uri, Some(&lead), Some(body.clone()))
            .await;
        let (s2, again) = h.call(Method::POST, &uri, Some(&lead), Some(body)).await;
        assert_eq!((s1, s2), (StatusCode::OK, StatusCode::OK));
        assert_eq!(first, again);
    }
    let (_, open) = h
        .call(
            Method::GET,
            &format!("/crowd/jobs/{stream}"),
            Some(&lead),
            None,
        )
        .await;
    assert_eq!(open, json!([]));
    let (_, labels) = h
        .call(Method::GET, "/crowd/labels", Some(&lead), None)
        .await;
    assert_eq!(labels["x1"], json!({"kind": "resolved", "tag": "MSA"}));
}

#[tokio::test]
async fn unknown_task_is_not_found() {
    let h = harness();
    let tok = h.login("a1").await;
    let (s, v) = h
        .call(
            Method::POST,
            "/tasks/nope/annotations",
            Some(&tok),
            Some(json!({"mode": "save", "units": {}})),
        )
        .await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_error_body(&v, "not-found");
}
