use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use indexmap::IndexMap;
use serde::Serialize;

use super::{parse_named_path, taxonomy, CliError, Result};
use crate::classifier::{
    cross_validate_with_evals, train, Aggregation, CvOptions, CvReport, EvalSet, FeatureExtractor, Metrics, TrainConfig,
};
use crate::dataset::{load_dataset, EmotionTaxonomy, LabelMapping, SentimentMapping};

#[derive(Debug, Args)]
pub struct TrainEvalArgs {
    /// Training variant, as PATH or NAME=PATH. Repeat to compare variants.
    #[arg(long = "in", value_name = "[NAME=]PATH", required = true)]
    pub inputs: Vec<String>,
    /// Taxonomy of the variant files; defaults to GoEmotions.
    #[arg(long)]
    pub taxonomy: Option<PathBuf>,
    /// External dataset evaluated zero-shot. NAME selects the bundled mapping
    /// of that name unless --mapping gives one.
    #[arg(long = "eval", value_name = "NAME=PATH", value_parser = parse_named_path)]
    pub evals: Vec<(String, PathBuf)>,
    /// Label mapping file for an external dataset.
    #[arg(long = "mapping", value_name = "NAME=PATH", value_parser = parse_named_path)]
    pub mappings: Vec<(String, PathBuf)>,
    /// Sentiment-labeled dataset (positive/negative/neutral) evaluated zero-shot.
    #[arg(long = "sentiment", value_name = "NAME=PATH", value_parser = parse_named_path)]
    pub sentiments: Vec<(String, PathBuf)>,
    /// Emotion-to-sentiment table; defaults to the bundled one.
    #[arg(long)]
    pub sentiment_map: Option<PathBuf>,
    /// How source probabilities combine into a target class: max or sum.
    #[arg(long, default_value = "max")]
    pub aggregation: Aggregation,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    /// Deal folds within primary-label strata.
    #[arg(long)]
    pub stratify: bool,
    /// Keep samples with identical normalized text in one fold.
    #[arg(long)]
    pub group_duplicates: bool,
    #[arg(long, default_value_t = TrainConfig::default().epochs)]
    pub epochs: usize,
    #[arg(long, default_value_t = TrainConfig::default().batch_size)]
    pub batch_size: usize,
    #[arg(long, default_value_t = TrainConfig::default().learning_rate)]
    pub lr: f64,
    #[arg(long, default_value_t = TrainConfig::default().weight_decay)]
    pub weight_decay: f64,
    /// Decision threshold on class probabilities.
    #[arg(long, default_value_t = TrainConfig::default().threshold)]
    pub threshold: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Hashed n-gram dimension.
    #[arg(long, default_value_t = 8192)]
    pub dim: usize,
    /// Precomputed embeddings (JSONL of {id, vector}) instead of hashed n-grams.
    #[arg(long, conflicts_with = "dim")]
    pub embeddings: Option<PathBuf>,
    #[arg(long, default_value = "train-eval")]
    pub out: PathBuf,
    /// Also train one model per variant on all of its samples and save it.
    #[arg(long)]
    pub save_models: bool,
}

#[derive(Debug, Serialize)]
struct VariantResult {
    name: String,
    path: PathBuf,
    samples: usize,
    report: CvReport,
}

#[derive(Debug, Serialize)]
struct TrainEvalReport {
    emotion_sets: Vec<String>,
    sentiment_sets: Vec<String>,
    variants: Vec<VariantResult>,
}

fn named_input(s: &str) -> (String, PathBuf) {
    match parse_named_path(s) {
        Ok(pair) => pair,
        Err(_) => {
            let path = PathBuf::from(s);
            let stem = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| s.to_string());
            // `{run_id}.ca` names a variant by its tag
            let name = stem.rsplit('.').next().unwrap_or(&stem).to_uppercase();
            (name, path)
        }
    }
}

fn eval_sets(args: &TrainEvalArgs, tax: &EmotionTaxonomy) -> Result<Vec<EvalSet>> {
    let mut sets = Vec::new();
    for (name, path) in &args.evals {
        let mapping = match args.mappings.iter().find(|(n, _)| n == name) {
            Some((_, p)) => LabelMapping::load(p)?,
            None => LabelMapping::bundled(name)
                .ok_or_else(|| CliError::Data(format!("no mapping for {name:?}: pass --mapping {name}=PATH")))?,
        }
        .resolve(tax)?;
        let samples = load_dataset(path, mapping.extended())?;
        sets.push(EvalSet {
            name: name.clone(),
            samples,
            mapping,
            aggregation: args.aggregation,
        });
    }
    if let Some((name, _)) = args
        .mappings
        .iter()
        .find(|(n, _)| !args.evals.iter().any(|(e, _)| e == n))
    {
        return Err(CliError::Config(format!("--mapping {name} has no matching --eval")));
    }
    if !args.sentiments.is_empty() {
        let table = match &args.sentiment_map {
            Some(p) => SentimentMapping::load(p)?,
            None => SentimentMapping::bundled(),
        };
        for (name, path) in &args.sentiments {
            let mapping = table.to_label_mapping(tax)?.resolve(tax)?;
            let samples = load_dataset(path, mapping.extended())?;
            sets.push(EvalSet {
                name: format!("sentiment:{name}"),
                samples,
                mapping,
                aggregation: args.aggregation,
            });
        }
    }
    Ok(sets)
}

fn cell(m: &Metrics) -> String {
    match (m.mean, m.std) {
        (Some(mean), Some(std)) => format!("{mean:.3} ± {std:.3}"),
        _ => format!("{:.3}", m.macro_f1),
    }
}

/// Emotion results, one row per (dataset, variant); then, when sentiment
/// sets exist, one row per variant with a column per sentiment set.
fn render(report: &TrainEvalReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<24} {:<10} {:>15}", "dataset", "variant", "macro-F1");
    let datasets = std::iter::once("in-domain".to_string()).chain(report.emotion_sets.iter().cloned());
    for d in datasets {
        for v in &report.variants {
            let m = if d == "in-domain" {
                &v.report.in_domain
            } else {
                &v.report.external[&d]
            };
            let _ = writeln!(out, "{:<24} {:<10} {:>15}", d, v.name, cell(m));
        }
    }
    if !report.sentiment_sets.is_empty() {
        let _ = writeln!(out);
        let _ = write!(out, "{:<10}", "variant");
        for s in &report.sentiment_sets {
            let _ = write!(out, " {:>15}", s);
        }
        let _ = writeln!(out);
        for v in &report.variants {
            let _ = write!(out, "{:<10}", v.name);
            for s in &report.sentiment_sets {
                let _ = write!(out, " {:>15}", cell(&v.report.external[&format!("sentiment:{s}")]));
            }
            let _ = writeln!(out);
        }
    }
    out
}

pub(super) fn run(args: TrainEvalArgs) -> Result<()> {
    let tax = taxonomy(args.taxonomy.as_deref())?;
    let extractor = match &args.embeddings {
        Some(p) => FeatureExtractor::external(p)?,
        None => FeatureExtractor::hashed(args.dim)?,
    };
    let config = TrainConfig {
        epochs: args.epochs,
        batch_size: args.batch_size,
        learning_rate: args.lr,
        weight_decay: args.weight_decay,
        threshold: args.threshold,
        seed: args.seed,
        ..TrainConfig::default()
    };
    config.validate()?;
    let options = CvOptions {
        k: args.folds,
        stratify: args.stratify,
        group_duplicates: args.group_duplicates,
    };
    let evals = eval_sets(&args, &tax)?;
    super::create_dir(&args.out)?;

    let mut variants = Vec::new();
    let mut seen = IndexMap::new();
    for input in &args.inputs {
        let (name, path) = named_input(input);
        if seen.insert(name.clone(), ()).is_some() {
            return Err(CliError::Config(format!(
                "variant name {name:?} given twice; use NAME=PATH"
            )));
        }
        let samples = load_dataset(&path, &tax)?;
        log::info!("{name}: {} samples, {}-fold CV", samples.len(), options.k);
        let report = cross_validate_with_evals(&samples, &tax, &extractor, &config, &options, &evals)?;
        if args.save_models {
            let model = train(&samples, &tax, &extractor, &config)?.model;
            let model_path = args.out.join(format!("{}.model.json", name.to_lowercase()));
            model.save(&model_path)?;
            log::info!("saved {}", model_path.display());
        }
        variants.push(VariantResult {
            name,
            path,
            samples: samples.len(),
            report,
        });
    }
    let report = TrainEvalReport {
        emotion_sets: args.evals.iter().map(|(n, _)| n.clone()).collect(),
        sentiment_sets: args.sentiments.iter().map(|(n, _)| n.clone()).collect(),
        variants,
    };
    let table = render(&report);
    super::write_json(&args.out.join("train_eval.json"), &report)?;
    super::write_text(&args.out.join("train_eval.txt"), &table)?;
    print!("{table}");
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variant_names_from_paths() {
        assert_eq!(
            named_input("runs/run-7-abc.cam.jsonl"),
            ("CAM".into(), PathBuf::from("runs/run-7-abc.cam.jsonl"))
        );
        assert_eq!(named_input("mine=x.jsonl"), ("mine".into(), PathBuf::from("x.jsonl")));
        assert_eq!(named_input("plain.jsonl").0, "PLAIN");
    }
}
