use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::Serialize;

use super::{taxonomy, CliError, Result};
use crate::dataset::load_dataset;
use crate::stats::{
    load_ratings, subjective_analysis, word_frequency_analysis, GroupSpec, PairFamily, Segment, Stopwords,
    SubjectiveReport, WordFrequency, DEFAULT_EMOTIONS,
};

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Family {
    /// CA vs CAM within each emotion.
    WithinEmotion,
    /// Every pair of groups.
    All,
}

impl From<Family> for PairFamily {
    fn from(f: Family) -> Self {
        match f {
            Family::WithinEmotion => PairFamily::WithinEmotion,
            Family::All => PairFamily::All,
        }
    }
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Ratings export (.jsonl or .csv).
    #[arg(long = "in", value_name = "PATH", required_unless_present = "words")]
    pub input: Option<PathBuf>,
    /// Significance level for the adjusted pairwise tests.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Comparison family adjusted together.
    #[arg(long, value_enum, default_value = "within-emotion")]
    pub family: Family,
    /// Survey emotions; each gets a CA and a CAM group.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_EMOTIONS.map(String::from))]
    pub emotions: Vec<String>,
    /// Also run the word-frequency analysis.
    #[arg(long, requires_all = ["dataset", "emotion"])]
    pub words: bool,
    /// Dataset variant scanned by --words (e.g. a CAM file).
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Taxonomy of --dataset; defaults to GoEmotions.
    #[arg(long)]
    pub taxonomy: Option<PathBuf>,
    #[arg(long)]
    pub emotion: Option<String>,
    /// original or appended.
    #[arg(long, default_value = "appended")]
    pub segment: Segment,
    #[arg(long, default_value_t = 10)]
    pub top_k: usize,
    /// Stopword list, one word per line; `none` keeps every token.
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
    #[arg(long, default_value = "stats")]
    pub out: PathBuf,
}

#[derive(Debug, Serialize)]
struct WordsReport {
    emotion: String,
    segment: Segment,
    top: Vec<WordFrequency>,
}

#[derive(Debug, Serialize)]
struct StatsReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    subjective: Option<SubjectiveReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    words: Option<WordsReport>,
}

fn render_words(w: &WordsReport) -> String {
    let mut out = String::new();
    let segment = match w.segment {
        Segment::Original => "original",
        Segment::Appended => "appended",
    };
    let _ = writeln!(out, "top words for {} ({segment} text)", w.emotion);
    let _ = writeln!(out, "{:>4}  {:<16} {:>7} {:>8}", "rank", "word", "count", "percent");
    for (i, f) in w.top.iter().enumerate() {
        let _ = writeln!(out, "{:>4}  {:<16} {:>7} {:>7.2}%", i + 1, f.word, f.count, f.percent);
    }
    out
}

fn render_pairs(r: &SubjectiveReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<32} {:>8} {:>10} {:>10}", "pair", "z", "p", "p (BH)");
    for p in &r.pairs {
        let name = format!("{} {} / {} {}", p.a.0, p.a.1, p.b.0, p.b.1);
        let _ = writeln!(
            out,
            "{:<32} {:>8.3} {:>10.4} {:>10.4}{}",
            name,
            p.z,
            p.p_raw,
            p.p_adjusted,
            if p.significant { " *" } else { "" }
        );
    }
    for n in &r.notes {
        let _ = writeln!(out, "note: {n}");
    }
    out
}

pub(super) fn run(args: StatsArgs) -> Result<()> {
    let mut text = String::new();
    let subjective = match &args.input {
        Some(path) => {
            let records = load_ratings(path)?;
            if records.is_empty() {
                return Err(CliError::Data(format!("{}: no ratings", path.display())));
            }
            let spec = GroupSpec::for_emotions(&args.emotions);
            let report = subjective_analysis(&records, &spec, args.alpha, args.family.into())?;
            text.push_str(&report.render_table());
            text.push('\n');
            text.push_str(&render_pairs(&report));
            Some(report)
        }
        None => None,
    };
    let words = if args.words {
        let (Some(dataset), Some(emotion)) = (&args.dataset, &args.emotion) else {
            return Err(CliError::Config("--words needs --dataset and --emotion".into()));
        };
        let tax = taxonomy(args.taxonomy.as_deref())?;
        let samples = load_dataset(dataset, &tax)?;
        let stopwords = match &args.stopwords {
            Some(p) if p.as_os_str() == "none" => Stopwords::none(),
            Some(p) => Stopwords::load(p)?,
            None => Stopwords::bundled(),
        };
        let top = word_frequency_analysis(&samples, &tax, emotion, args.top_k, &stopwords, args.segment)?;
        let w = WordsReport {
            emotion: emotion.clone(),
            segment: args.segment,
            top,
        };
        if !text.is_empty() {
            text.push('\n');
        }
        text.push_str(&render_words(&w));
        Some(w)
    } else {
        None
    };
    super::create_dir(&args.out)?;
    super::write_json(&args.out.join("stats.json"), &StatsReport { subjective, words })?;
    super::write_text(&args.out.join("stats.txt"), &text)?;
    print!("{text}");
    Ok(())
}
