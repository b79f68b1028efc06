use std::sync::{Arc, OnceLock};

use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use patland_cli::service::{router, AppState, LabelAck, QueueItem, StatsResponse, CLAIMS_EXCERPT_CHARS};
use patland_core::corpus::{CorpusStore, Label};
use patland_core::synth::{generate, Group, SynthConfig, SyntheticCorpus};
use serde_json::{json, Value};
use tower::ServiceExt;

const ORIGIN: &str = "http://localhost:5173";

fn synth() -> &'static SyntheticCorpus {
    static S: OnceLock<SyntheticCorpus> = OnceLock::new();
    S.get_or_init(|| {
        generate(&SynthConfig {
            patents: 300,
            seeds: 30,
            topic_vocabulary: 400,
            ..SynthConfig::default()
        })
        .unwrap()
    })
}

/// The synthetic corpus with claims long enough to need truncation.
fn corpus() -> Arc<CorpusStore> {
    let mut records = synth().corpus.records().to_vec();
    for r in &mut records {
        r.claims = r.claims.repeat(3);
    }
    Arc::new(CorpusStore::from_records(records, "service-test").unwrap())
}

fn seeds() -> Vec<String> {
    synth().seeds.iter().take(10).cloned().collect()
}

fn anti_seeds() -> Vec<String> {
    let s = synth();
    s.groups
        .iter()
        .filter(|(id, g)| **g == Group::CoreNegative && !s.seeds.contains(*id))
        .map(|(id, _)| id.clone())
        .take(10)
        .collect()
}

fn app(data_dir: Option<std::path::PathBuf>) -> (Router, Arc<AppState>) {
    let state = Arc::new(AppState::new(corpus(), data_dir).unwrap());
    (router(state.clone(), &[ORIGIN.to_string()]).unwrap(), state)
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(v) => {
            req = req.header(header::CONTENT_TYPE, "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    assert_eq!(resp.headers()[header::CONTENT_TYPE], "application/json", "{uri}");
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap())
}

async fn create(app: &Router, id: &str) -> Value {
    let (status, body) = call(
        app,
        Method::POST,
        "/api/v1/sessions",
        Some(json!({"session_id": id, "seeds": seeds(), "anti_seeds": anti_seeds(), "config": {"rng_seed": 3}})),
    )
    .await;
    assert_eq!(status, StatusCode::CREATED, "{body}");
    body
}

async fn queue(app: &Router, id: &str, k: usize) -> Vec<QueueItem> {
    let (status, body) = call(app, Method::GET, &format!("/api/v1/sessions/{id}/queue?k={k}"), None).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    serde_json::from_value(body).unwrap()
}

async fn label(app: &Router, id: &str, patent: &str, annotator: &str) -> (StatusCode, Value) {
    let gold = synth().gold(patent).unwrap();
    call(
        app,
        Method::POST,
        &format!("/api/v1/sessions/{id}/labels"),
        Some(json!({"patent_id": patent, "label": gold, "annotator_id": annotator})),
    )
    .await
}

async fn stats(app: &Router, id: &str) -> StatsResponse {
    let (status, body) = call(app, Method::GET, &format!("/api/v1/sessions/{id}/stats"), None).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    serde_json::from_value(body).unwrap()
}

/// Labels the queue head `n` times and returns the acks.
async fn label_head(app: &Router, id: &str, n: usize) -> Vec<LabelAck> {
    let mut acks = Vec::new();
    for _ in 0..n {
        let head = queue(app, id, 1).await.remove(0);
        let (status, body) = label(app, id, &head.patent_id, "ann-1").await;
        assert_eq!(status, StatusCode::OK, "{body}");
        acks.push(serde_json::from_value(body).unwrap());
    }
    acks
}

#[tokio::test]
async fn fresh_session_stats_match_seed_composition() {
    let (app, _) = app(None);
    let created = create(&app, "s1").await;
    assert_eq!(created["labels_total"], 20);
    let s = stats(&app, "s1").await;
    assert_eq!(s.stats.labels_total, 20);
    assert_eq!(s.stats.positives, 10);
    assert_eq!(s.stats.negatives, 10);
    assert_eq!(s.stats.pool_size, 280);
    assert_eq!(s.stats.retrain_count, 1);
    let by_source: Vec<usize> = s.stats.labels_by_source.values().copied().collect();
    assert_eq!(by_source, vec![10, 10]);
}

#[tokio::test]
async fn queue_is_ascending_and_truncates_claims() {
    let (app, _) = app(None);
    create(&app, "q").await;
    let items = queue(&app, "q", 3).await;
    assert_eq!(items.len(), 3);
    assert!(items.windows(2).all(|w| w[0].margin_distance <= w[1].margin_distance));
    for it in &items {
        assert!(it.claims_excerpt.chars().count() <= CLAIMS_EXCERPT_CHARS);
        assert!(it.claims_truncated);
        let full = synth().corpus.get(&it.patent_id).unwrap();
        assert_eq!(it.title, full.title);
        assert!(full.claims.repeat(3).starts_with(&it.claims_excerpt));
    }
    let (status, body) = call(&app, Method::GET, "/api/v1/sessions/q/queue?k=1001", None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["code"], "invalid_request");
}

#[tokio::test]
async fn empty_pool_gives_empty_queue() {
    let (app, _) = app(None);
    let all: Vec<String> = seeds().into_iter().chain(anti_seeds()).collect();
    let (status, body) = call(
        &app,
        Method::POST,
        "/api/v1/sessions",
        Some(json!({"session_id": "empty", "seeds": seeds(), "anti_seeds": anti_seeds(), "config": {"pool": all}})),
    )
    .await;
    assert_eq!(status, StatusCode::CREATED, "{body}");
    assert!(queue(&app, "empty", 5).await.is_empty());
}

#[tokio::test]
async fn unknown_ids_are_not_found() {
    let (app, _) = app(None);
    create(&app, "u").await;
    for uri in ["/api/v1/sessions/nope/queue?k=3", "/api/v1/sessions/nope/stats", "/api/v1/patents/NOPE", "/api/v1/nowhere"] {
        let (status, body) = call(&app, Method::GET, uri, None).await;
        assert_eq!(status, StatusCode::NOT_FOUND, "{uri}");
        assert_eq!(body["code"], "not_found", "{uri}");
        assert!(body["message"].is_string());
    }
    let (status, body) = call(
        &app,
        Method::POST,
        "/api/v1/sessions/u/labels",
        Some(json!({"patent_id": "NOPE", "label": "positive", "annotator_id": "a"})),
    )
    .await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["code"], "not_found");
}

#[tokio::test]
async fn patent_returns_the_full_record() {
    let (app, _) = app(None);
    let id = synth().corpus.ids().next().unwrap().to_string();
    let (status, body) = call(&app, Method::GET, &format!("/api/v1/patents/{id}"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["patent_id"], id);
    assert_eq!(body["claims"].as_str().unwrap(), synth().corpus.get(&id).unwrap().claims.repeat(3));
}

#[tokio::test]
async fn tenth_label_retrains_and_stats_follow_cadence() {
    let (app, _) = app(None);
    create(&app, "c").await;
    let acks = label_head(&app, "c", 12).await;
    assert!(!acks[2].retrained);
    let fired: Vec<usize> = acks.iter().enumerate().filter(|(_, a)| a.retrained).map(|(i, _)| i + 1).collect();
    assert_eq!(fired, vec![10]);
    assert_eq!(acks[11].labels_total, 32);
    let s = stats(&app, "c").await;
    assert_eq!(s.stats.retrain_count, 2);
    assert_eq!(s.stats.labels_since_retrain, 2);
    assert_eq!(s.stats.labels_total, 32);
}

#[tokio::test]
async fn relabel_is_a_conflict_echoing_the_prior_label() {
    let (app, _) = app(None);
    create(&app, "r").await;
    let head = queue(&app, "r", 1).await.remove(0);
    let gold = synth().gold(&head.patent_id).unwrap();
    let (status, _) = label(&app, "r", &head.patent_id, "ann-1").await;
    assert_eq!(status, StatusCode::OK);
    let (status, body) = call(
        &app,
        Method::POST,
        "/api/v1/sessions/r/labels",
        Some(json!({"patent_id": head.patent_id, "label": gold.flip(), "annotator_id": "ann-2"})),
    )
    .await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["code"], "conflict");
    assert_eq!(body["detail"]["existing_label"], json!(gold));
    assert_eq!(body["detail"]["existing_annotator"], "ann-1");
    // The rejected judgment still counts toward agreement.
    let s = stats(&app, "r").await;
    assert_eq!(s.stats.kappa.len(), 1);
    assert_eq!(s.stats.rejected_judgments, 1);
    // Labeled items leave the queue.
    assert!(queue(&app, "r", 300).await.iter().all(|c| c.patent_id != head.patent_id));
}

#[tokio::test]
async fn concurrent_labels_for_one_patent_have_one_winner() {
    let (app, _) = app(None);
    create(&app, "race").await;
    for round in 0..5 {
        let head = queue(&app, "race", 1).await.remove(0);
        let posts = (0..4).map(|i| {
            let app = app.clone();
            let pid = head.patent_id.clone();
            tokio::spawn(async move {
                let body = json!({"patent_id": pid, "label": Label::Positive, "annotator_id": format!("a{i}")});
                call(&app, Method::POST, "/api/v1/sessions/race/labels", Some(body)).await.0
            })
        });
        let mut codes = Vec::new();
        for h in posts {
            codes.push(h.await.unwrap());
        }
        let ok = codes.iter().filter(|c| **c == StatusCode::OK).count();
        let conflicts = codes.iter().filter(|c| **c == StatusCode::CONFLICT).count();
        assert_eq!((ok, conflicts), (1, 3), "round {round}: {codes:?}");
    }
}

#[tokio::test]
async fn served_items_are_tracked_per_annotator() {
    let (app, _) = app(None);
    create(&app, "sv").await;
    let (status, _) = call(&app, Method::GET, "/api/v1/sessions/sv/queue?k=4&annotator_id=ann-a", None).await;
    assert_eq!(status, StatusCode::OK);
    call(&app, Method::GET, "/api/v1/sessions/sv/queue?k=2&annotator_id=ann-b", None).await;
    let s = stats(&app, "sv").await;
    assert_eq!(s.served_by_annotator["ann-a"], 4);
    assert_eq!(s.served_by_annotator["ann-b"], 2);
    // Serving an item to one annotator does not stop another labeling it first.
    let head = queue(&app, "sv", 1).await.remove(0);
    let (status, _) = label(&app, "sv", &head.patent_id, "ann-b").await;
    assert_eq!(status, StatusCode::OK);
}

#[tokio::test]
async fn sessions_survive_a_restart() {
    let dir = tempfile::tempdir().unwrap();
    let before = {
        let (app, _) = app(Some(dir.path().to_path_buf()));
        create(&app, "p").await;
        label_head(&app, "p", 13).await;
        let head = queue(&app, "p", 1).await.remove(0);
        let first = synth().corpus.ids().find(|id| seeds().contains(&id.to_string())).unwrap().to_string();
        label(&app, "p", &first, "ann-2").await;
        (stats(&app, "p").await, queue(&app, "p", 20).await, head)
    };
    assert!(dir.path().join("p.events.jsonl").exists());
    let (app, state) = app(Some(dir.path().to_path_buf()));
    assert_eq!(state.session_ids(), vec!["p".to_string()]);
    let after = stats(&app, "p").await;
    assert_eq!(after.stats, before.0.stats);
    assert_eq!(queue(&app, "p", 20).await, before.1);
    // Duplicate ids are refused, in memory and on disk.
    let (status, body) = call(
        &app,
        Method::POST,
        "/api/v1/sessions",
        Some(json!({"session_id": "p", "seeds": seeds()})),
    )
    .await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["code"], "conflict");
}

#[tokio::test]
async fn bad_bodies_are_rejected_with_error_objects() {
    let (app, _) = app(None);
    create(&app, "b").await;
    for body in [
        json!({"patent_id": "x"}),
        json!({"patent_id": "x", "label": "maybe", "annotator_id": "a"}),
        json!({"patent_id": "x", "label": "positive", "annotator_id": "a", "extra": 1}),
    ] {
        let (status, resp) = call(&app, Method::POST, "/api/v1/sessions/b/labels", Some(body.clone())).await;
        assert!(status.is_client_error(), "{body}");
        assert_eq!(resp["code"], "invalid_request", "{body}");
    }
    let (status, resp) = call(
        &app,
        Method::POST,
        "/api/v1/sessions",
        Some(json!({"session_id": "../evil", "seeds": seeds()})),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(resp["code"], "invalid_request");
    let (status, resp) = call(&app, Method::POST, "/api/v1/sessions/b/stats", Some(json!({}))).await;
    assert_eq!(status, StatusCode::METHOD_NOT_ALLOWED);
    assert_eq!(resp["code"], "method_not_allowed");
}

#[tokio::test]
async fn cors_allows_the_configured_origin() {
    let (app, _) = app(None);
    let preflight = |origin: &str| {
        Request::builder()
            .method(Method::OPTIONS)
            .uri("/api/v1/sessions")
            .header(header::ORIGIN, origin)
            .header(header::ACCESS_CONTROL_REQUEST_METHOD, "POST")
            .header(header::ACCESS_CONTROL_REQUEST_HEADERS, "content-type")
            .body(Body::empty())
            .unwrap()
    };
    let resp = app.clone().oneshot(preflight(ORIGIN)).await.unwrap();
    assert_eq!(resp.headers()[header::ACCESS_CONTROL_ALLOW_ORIGIN], ORIGIN);
    let resp = app.clone().oneshot(preflight("http://elsewhere.example")).await.unwrap();
    assert!(resp.headers().get(header::ACCESS_CONTROL_ALLOW_ORIGIN).is_none());
}
