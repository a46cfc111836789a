//! Survey service driven over HTTP with scripted participants.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use axum::body::Body;
use axum::http::{header, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use emoaudit::dataset::Sample;
use emoaudit::stats::{parse_ratings_jsonl, subjective_analysis, GroupSpec, PairFamily, RatingVariant};
use emoaudit::survey::{audit_log, create_survey, router, Event, Survey, SurveyConfig};
use emoaudit::synthetic::{synthetic_corpus, CorpusConfig};
use emoaudit::EmotionTaxonomy;

const CAM_SUFFIX: &str = " Added context here.";

fn variants() -> (Vec<Sample>, Vec<Sample>) {
    let tax = EmotionTaxonomy::goemotions();
    let ca = synthetic_corpus(
        &tax,
        &CorpusConfig {
            n: 200,
            seed: 12,
            ..CorpusConfig::default()
        },
    );
    let cam = ca
        .iter()
        .map(|s| Sample {
            text: format!("{}{CAM_SUFFIX}", s.text),
            ..s.clone()
        })
        .collect();
    (ca, cam)
}

fn open(dir: &std::path::Path) -> Arc<Survey> {
    let (ca, cam) = variants();
    let bank = create_survey(&ca, &cam, &EmotionTaxonomy::goemotions(), &GroupSpec::default()).unwrap();
    Arc::new(
        Survey::open(
            dir,
            bank,
            SurveyConfig {
                seed: 3,
                ..SurveyConfig::default()
            },
        )
        .unwrap(),
    )
}

async fn call(app: &Router, req: Request<Body>) -> (StatusCode, Vec<u8>) {
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    (status, res.into_body().collect().await.unwrap().to_bytes().to_vec())
}

async fn session(app: &Router) -> String {
    let (_, body) = call(app, Request::post("/api/session").body(Body::empty()).unwrap()).await;
    serde_json::from_slice::<Value>(&body).unwrap()["participant_id"]
        .as_str()
        .unwrap()
        .to_string()
}

async fn try_batch(app: &Router, pid: &str) -> Result<Vec<Value>, StatusCode> {
    let (st, body) = call(
        app,
        Request::get(format!("/api/survey/batch?participant={pid}"))
            .body(Body::empty())
            .unwrap(),
    )
    .await;
    if st != StatusCode::OK {
        return Err(st);
    }
    Ok(serde_json::from_slice::<Value>(&body).unwrap()["items"]
        .as_array()
        .unwrap()
        .clone())
}

async fn batch(app: &Router, pid: &str) -> Vec<Value> {
    try_batch(app, pid).await.expect("batch issued")
}

async fn respond(app: &Router, pid: &str, item_id: &str, rating: i64) -> StatusCode {
    let body = json!({"participant_id": pid, "item_id": item_id, "rating": rating}).to_string();
    let req = Request::post("/api/survey/response")
        .header(header::CONTENT_TYPE, "application/json")
        .body(Body::from(body))
        .unwrap();
    call(app, req).await.0
}

async fn export(app: &Router) -> Vec<u8> {
    let req = Request::get("/api/export")
        .header(header::AUTHORIZATION, "Bearer admin")
        .body(Body::empty())
        .unwrap();
    let (st, body) = call(app, req).await;
    assert_eq!(st, StatusCode::OK);
    body
}

#[tokio::test]
async fn completed_batch_exports_twenty_records_with_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let survey = open(dir.path());
    let app = router(survey.clone(), Some("admin".into()), None);
    assert!(export(&app).await.is_empty(), "empty survey exports nothing");

    let pid = session(&app).await;
    let items = batch(&app, &pid).await;
    assert_eq!(items.len(), 20);
    let mut shown: HashMap<String, (String, String)> = HashMap::new();
    for (i, item) in items.iter().enumerate() {
        let id = item["item_id"].as_str().unwrap();
        shown.insert(
            id.into(),
            (
                item["emotion"].as_str().unwrap().into(),
                item["text"].as_str().unwrap().into(),
            ),
        );
        assert_eq!(respond(&app, &pid, id, 1 + (i as i64 % 5)).await, StatusCode::OK);
    }
    let bytes = export(&app).await;
    let records = parse_ratings_jsonl(&bytes[..]).unwrap();
    assert_eq!(records.len(), 20);
    for r in &records {
        let (emotion, text) = &shown[&r.item_id];
        assert_eq!(&r.emotion, emotion);
        assert_eq!(r.participant_id, pid);
        // the rater never saw the variant, but the export carries the right one
        assert_eq!(
            r.variant == RatingVariant::Cam,
            text.ends_with(CAM_SUFFIX),
            "{}",
            r.item_id
        );
        assert!(r.item_id.ends_with(&format!("#{}", r.emotion)));
    }
    assert_eq!(export(&app).await, bytes, "repeated export is byte-identical");
}

#[tokio::test]
async fn overlapping_participants_never_see_both_versions() {
    let dir = tempfile::tempdir().unwrap();
    let survey = open(dir.path());
    let app = router(survey.clone(), Some("admin".into()), None);
    let mut seen: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
    for _ in 0..6 {
        let pid = session(&app).await;
        // several batches each, forcing overlap with earlier participants
        for round in 0..4 {
            let items = match try_batch(&app, &pid).await {
                Ok(items) => items,
                Err(st) => {
                    // the participant has run out of unseen item ids
                    assert_eq!(st, StatusCode::CONFLICT);
                    assert!(round > 0);
                    break;
                }
            };
            for item in items {
                let id = item["item_id"].as_str().unwrap().to_string();
                let text = item["text"].as_str().unwrap().to_string();
                let prev = seen.entry(pid.clone()).or_default().insert(id.clone(), text);
                assert!(prev.is_none(), "{pid} got {id} twice");
                assert_eq!(respond(&app, &pid, &id, 3).await, StatusCode::OK);
            }
        }
    }
    // across participants the same item id shows up in both versions
    let mut versions: HashMap<&str, std::collections::HashSet<&str>> = HashMap::new();
    for items in seen.values() {
        for (id, text) in items {
            versions.entry(id).or_default().insert(text);
        }
    }
    assert!(versions.values().any(|v| v.len() == 2));
    assert!(audit_log(&survey.log_path(), survey.bank()).unwrap() > 0);
}

#[test]
fn concurrent_batches_for_one_participant_share_items() {
    let dir = tempfile::tempdir().unwrap();
    let survey = open(dir.path());
    let pids: Vec<String> = (0..4).map(|_| survey.create_session().unwrap()).collect();
    std::thread::scope(|scope| {
        for t in 0..16 {
            let (survey, pid) = (&survey, &pids[t % 4]);
            scope.spawn(move || {
                for _ in 0..3 {
                    let a = survey.next_batch(pid).unwrap();
                    for (id, _) in &a.items {
                        // racing threads may answer the same item; both outcomes are fine
                        let _ = survey.submit_response(pid, id, 4);
                    }
                }
            });
        }
    });
    survey.audit().unwrap();
    let text = std::fs::read_to_string(survey.log_path()).unwrap();
    let mut assigned: HashMap<(String, String), RatingVariant> = HashMap::new();
    let mut responses = 0;
    for line in text.lines() {
        match serde_json::from_str::<Event>(line).unwrap() {
            Event::Assignment(a) => {
                for (id, v) in a.items {
                    assert!(assigned.insert((a.participant_id.clone(), id), v).is_none());
                }
            }
            Event::Response { .. } => responses += 1,
            Event::Session { .. } => {}
        }
    }
    assert_eq!(survey.export_records().len(), responses);
}

#[tokio::test]
async fn export_feeds_the_statistics_unchanged() {
    let dir = tempfile::tempdir().unwrap();
    let survey = open(dir.path());
    let app = router(survey.clone(), Some("admin".into()), None);
    for p in 0..10 {
        let pid = session(&app).await;
        for item in batch(&app, &pid).await {
            let id = item["item_id"].as_str().unwrap();
            let cam = item["text"].as_str().unwrap().ends_with(CAM_SUFFIX);
            let rating = if cam { 4 + (p % 2) } else { 2 + (p % 2) };
            respond(&app, &pid, id, rating).await;
        }
    }
    let records = parse_ratings_jsonl(&export(&app).await[..]).unwrap();
    assert_eq!(records.len(), 200);
    let report = subjective_analysis(&records, &GroupSpec::default(), 0.05, PairFamily::WithinEmotion).unwrap();
    assert_eq!(report.n, 200);
    let omnibus = report.omnibus.unwrap();
    assert!(omnibus.p_value < 1e-6, "{omnibus:?}");
}

#[test]
fn restart_resumes_bank_and_assignments() {
    let dir = tempfile::tempdir().unwrap();
    let (pid, first) = {
        let survey = open(dir.path());
        let pid = survey.create_session().unwrap();
        let a = survey.next_batch(&pid).unwrap();
        survey.submit_response(&pid, &a.items[0].0, 2).unwrap();
        (pid, a)
    };
    let survey = open(dir.path());
    assert_eq!(survey.next_batch(&pid).unwrap(), first);
    assert_eq!(survey.export_records().len(), 1);
}
