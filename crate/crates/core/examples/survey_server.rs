//! Start the survey service on a synthetic CA/CAM bank, walk one simulated
//! participant through a batch over HTTP, and print the export.
//!
//! cargo run --example survey_server

use std::sync::Arc;

use emoaudit::dataset::Sample;
use emoaudit::stats::GroupSpec;
use emoaudit::survey::{create_survey, serve, Survey, SurveyConfig};
use emoaudit::synthetic::{synthetic_corpus, CorpusConfig};
use emoaudit::EmotionTaxonomy;
use serde_json::{json, Value};

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tax = EmotionTaxonomy::goemotions();
    let ca = synthetic_corpus(
        &tax,
        &CorpusConfig {
            n: 300,
            seed: 4,
            ..CorpusConfig::default()
        },
    );
    let cam: Vec<Sample> = ca
        .iter()
        .map(|s| Sample {
            text: format!("{} That says it all.", s.text),
            ..s.clone()
        })
        .collect();
    let bank = create_survey(&ca, &cam, &tax, &GroupSpec::default())?;
    let dir = tempfile::tempdir()?;
    let survey = Arc::new(Survey::open(dir.path(), bank, SurveyConfig::default())?);
    println!("bank: {} items", survey.bank().len());

    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await?;
    let base = format!("http://{}", listener.local_addr()?);
    let (stop, stopped) = tokio::sync::oneshot::channel::<()>();
    let server = tokio::spawn(serve(listener, survey.clone(), None, async {
        let _ = stopped.await;
    }));

    // reqwest's blocking client must stay off the async runtime threads
    let records = tokio::task::spawn_blocking(move || -> Result<usize, Box<dyn std::error::Error + Send + Sync>> {
        let http = reqwest::blocking::Client::new();
        let session: Value = serde_json::from_str(&http.post(format!("{base}/api/session")).send()?.text()?)?;
        let pid = session["participant_id"].as_str().unwrap_or_default().to_string();
        let batch: Value = serde_json::from_str(
            &http
                .get(format!("{base}/api/survey/batch?participant={pid}"))
                .send()?
                .text()?,
        )?;
        let items = batch["items"].as_array().cloned().unwrap_or_default();
        println!(
            "participant {pid} got {} items, first: {}",
            items.len(),
            items[0]["text"]
        );
        for (i, item) in items.iter().enumerate() {
            let body = json!({"participant_id": pid, "item_id": item["item_id"], "rating": 1 + i % 5});
            http.post(format!("{base}/api/survey/response"))
                .header("content-type", "application/json")
                .body(body.to_string())
                .send()?
                .error_for_status()?;
        }
        Ok(items.len())
    })
    .await?
    .map_err(|e| e.to_string())?;

    let export = survey.export_records();
    println!("stored {records} responses, export has {}", export.len());
    for r in export.iter().take(3) {
        println!("  {} {} {} -> {}", r.item_id, r.variant, r.emotion, r.rating);
    }
    let _ = stop.send(());
    server.await??;
    Ok(())
}
