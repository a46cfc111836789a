//! Cross-validate the linear classifier on a synthetic corpus and print the
//! per-class report and fold scores.
//!
//! cargo run --release --example train_eval

use emoaudit::classifier::{cross_validate, CvOptions, FeatureExtractor, TrainConfig};
use emoaudit::synthetic::{synthetic_corpus, CorpusConfig};
use emoaudit::EmotionTaxonomy;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // A small taxonomy keeps the run quick; labels become words in the text
    // so there is something to learn.
    let tax = EmotionTaxonomy::new("mini", ["joy", "anger", "fear", "neutral"], Some("neutral"))?;
    let mut samples = synthetic_corpus(
        &tax,
        &CorpusConfig {
            n: 400,
            seed: 5,
            ..CorpusConfig::default()
        },
    );
    for s in &mut samples {
        let cue: Vec<&str> = s.labels.iter().map(|&i| tax.label(i)).collect();
        s.text = format!("{} {}", s.text, cue.join(" "));
    }

    let fx = FeatureExtractor::hashed(4096)?;
    let config = TrainConfig {
        epochs: 15,
        learning_rate: 0.05,
        ..TrainConfig::default()
    };
    let report = cross_validate(
        &samples,
        &tax,
        &fx,
        &config,
        &CvOptions {
            stratify: true,
            ..CvOptions::default()
        },
    )?;

    let m = &report.in_domain;
    println!(
        "{:<10} {:>9} {:>7} {:>6} {:>8}",
        "class", "precision", "recall", "f1", "support"
    );
    for (class, c) in &m.per_class {
        println!(
            "{class:<10} {:>9.3} {:>7.3} {:>6.3} {:>8}",
            c.precision, c.recall, c.f1, c.support
        );
    }
    let folds: Vec<String> = m.fold_scores.iter().flatten().map(|f| format!("{f:.3}")).collect();
    println!("fold macro-F1 [{}]", folds.join(", "));
    println!(
        "mean {:.3} ± {:.3}, pooled {:.3}",
        m.mean.unwrap_or(f64::NAN),
        m.std.unwrap_or(f64::NAN),
        m.macro_f1
    );
    Ok(())
}
