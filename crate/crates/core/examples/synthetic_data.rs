//! Write the synthetic toy dataset, a label-uninformative corpus and a
//! phrase-built DailyDialog-style evaluation set.
//!
//! cargo run --example synthetic_data -- [out_dir]

use std::path::PathBuf;

use emoaudit::dataset::{save_dataset, LabelMapping};
use emoaudit::llm::MockBackend;
use emoaudit::synthetic::{phrase_eval_set, synthetic_corpus, toy_dataset, CorpusConfig};
use emoaudit::EmotionTaxonomy;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("emoaudit-synthetic"));
    std::fs::create_dir_all(&out)?;
    let tax = EmotionTaxonomy::goemotions();

    let toy = toy_dataset();
    save_dataset(&toy, &tax, &out.join("toy200.jsonl"))?;

    let corpus = synthetic_corpus(
        &tax,
        &CorpusConfig {
            seed: 1,
            ..CorpusConfig::default()
        },
    );
    save_dataset(&corpus, &tax, &out.join("corpus1000.jsonl"))?;

    let mapping = LabelMapping::bundled("dailydialog").expect("bundled").resolve(&tax)?;
    let eval = phrase_eval_set(&mapping, &tax, &MockBackend::bundled_phrases(), 40, 2);
    save_dataset(&eval, mapping.extended(), &out.join("dailydialog.eval.jsonl"))?;

    println!("toy: {} samples", toy.len());
    println!("corpus: {} samples", corpus.len());
    println!("eval: {} samples over {} classes", eval.len(), mapping.target().len());
    println!("written to {}", out.display());
    Ok(())
}
