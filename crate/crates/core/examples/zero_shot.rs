//! Train on GoEmotions-labeled text and evaluate zero-shot on each bundled
//! target mapping and on sentiment.

use emoaudit::classifier::{sentiment_eval, train, zero_shot_eval, Aggregation, FeatureExtractor, TrainConfig};
use emoaudit::dataset::{LabelMapping, SentimentMapping, BUNDLED_MAPPINGS};
use emoaudit::llm::MockBackend;
use emoaudit::synthetic::phrase_eval_set;
use emoaudit::{EmotionTaxonomy, Sample, Split};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tax = EmotionTaxonomy::goemotions();
    let phrases = MockBackend::bundled_phrases();
    let identity = LabelMapping::identity(&tax).resolve(&tax)?;
    let training = phrase_eval_set(&identity, &tax, &phrases, 30, 1);
    let fx = FeatureExtractor::default();
    let config = TrainConfig {
        epochs: 15,
        learning_rate: 0.05,
        ..TrainConfig::default()
    };
    let model = train(&training, &tax, &fx, &config)?.model;
    println!("trained on {} phrase samples", training.len());

    for (name, _) in BUNDLED_MAPPINGS {
        let mapping = LabelMapping::bundled(name).expect("bundled").resolve(&tax)?;
        let eval = phrase_eval_set(&mapping, &tax, &phrases, 20, 2);
        let m = zero_shot_eval(&model, &fx, &eval, &mapping, config.threshold, Aggregation::Max)?;
        println!("{name:<14} n={:<4} macro-F1 {:.3}", eval.len(), m.macro_f1);
    }

    let sentiment = SentimentMapping::bundled();
    let sent_tax = SentimentMapping::sentiment_taxonomy();
    let table = sentiment.table(&tax)?;
    let eval: Vec<Sample> = training
        .iter()
        .map(|s| {
            let label = table[*s.labels.iter().next().expect("labeled")];
            let idx = sent_tax.index_of(label.as_str()).expect("sentiment class");
            Sample::new(format!("sent-{}", s.id), s.text.clone(), [idx], Split::Test)
        })
        .collect();
    let m = sentiment_eval(&model, &fx, &eval, &sentiment, &tax, config.threshold, Aggregation::Max)?;
    println!("{:<14} n={:<4} macro-F1 {:.3}", "sentiment", eval.len(), m.macro_f1);
    Ok(())
}
