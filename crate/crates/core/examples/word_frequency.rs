//! Most frequent words in the original and appended text of CAM samples for
//! one emotion. Builds a tiny CAM set with the generative mock.
//!
//! cargo run --example word_frequency -- [emotion]

use std::sync::Arc;

use emoaudit::llm::{ContextAuditor, GenerativeParams, MockBackend, ResponseCache, Scenario};
use emoaudit::pipeline::{build_cam, FailurePolicy};
use emoaudit::stats::{word_frequency_analysis, Segment, Stopwords};
use emoaudit::synthetic::{synthetic_corpus, CorpusConfig};
use emoaudit::EmotionTaxonomy;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let emotion = std::env::args().nth(1).unwrap_or_else(|| "admiration".into());
    let tax = EmotionTaxonomy::goemotions();
    let corpus = synthetic_corpus(
        &tax,
        &CorpusConfig {
            n: 600,
            seed: 9,
            ..CorpusConfig::default()
        },
    );
    let backend = MockBackend::new(Scenario::generative(
        "words",
        GenerativeParams {
            seed: 9,
            ..GenerativeParams::default()
        },
    ));
    let auditor = ContextAuditor::new(
        Arc::new(backend),
        Arc::new(ResponseCache::in_memory()),
        tax.clone(),
        "mock",
    );
    let cam = build_cam(&corpus, &auditor, &FailurePolicy::default(), 4)?.samples;

    let stop = Stopwords::bundled();
    for segment in [Segment::Original, Segment::Appended] {
        println!("{emotion}, {segment:?} text");
        for (rank, w) in word_frequency_analysis(&cam, &tax, &emotion, 8, &stop, segment)?
            .iter()
            .enumerate()
        {
            println!("  {:>2}. {:<14} {:>4} {:>6.2}%", rank + 1, w.word, w.count, w.percent);
        }
    }
    Ok(())
}
