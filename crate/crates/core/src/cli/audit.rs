use std::path::PathBuf;
use std::sync::Arc;

use clap::Args;

use super::{taxonomy, CliError, Result};
use crate::dataset::{load_dataset, Variant};
use crate::llm::{
    ChatBackend, ContextAuditor, GenerativeParams, MockBackend, RemoteBackend, RemoteConfig, ResponseCache, Scenario,
};
use crate::pipeline::{run_audit, AuditConfig, FailurePolicy, TransportPolicy, ValidationPolicy};

#[derive(Debug, Args)]
pub struct AuditArgs {
    /// Source dataset (JSONL). The train split is audited.
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    /// Taxonomy JSON; defaults to the bundled GoEmotions taxonomy.
    #[arg(long)]
    pub taxonomy: Option<PathBuf>,
    /// Output directory for the run.
    #[arg(long, default_value = "runs")]
    pub out: PathBuf,
    /// `remote`, `mock` (generative defaults) or `mock:SCENARIO.jsonl`.
    #[arg(long, default_value = "remote")]
    pub backend: String,
    /// Model id sent to the backend and recorded in the cache key.
    #[arg(long, default_value = "gpt-4")]
    pub model: String,
    /// Base URL of the chat-completions API (remote backend only).
    #[arg(long, default_value = "https://api.openai.com/v1")]
    pub api_base: String,
    /// Client-side cap on requests per minute (remote backend only).
    #[arg(long)]
    pub rpm: Option<u32>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Comma-separated variants to build.
    #[arg(long, value_delimiter = ',', default_value = "rs,ca,cam,rsm,mm")]
    pub variants: Vec<Variant>,
    /// Size of RS and CA.
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    /// Size of RS, overriding --n.
    #[arg(long)]
    pub n_rs: Option<usize>,
    /// Size of CA, overriding --n.
    #[arg(long)]
    pub n_ca: Option<usize>,
    /// retry-once-then-exclude, exclude or keep-flagged.
    #[arg(long, default_value = "retry-once-then-exclude")]
    pub on_validation_fail: ValidationPolicy,
    /// halt or skip-and-log.
    #[arg(long, default_value = "halt")]
    pub on_transport_fail: TransportPolicy,
    /// Concurrent backend requests.
    #[arg(long, default_value_t = 8)]
    pub concurrency: usize,
    /// Response cache file; defaults to OUT/cache.jsonl.
    #[arg(long)]
    pub cache: Option<PathBuf>,
    /// Run id; defaults to one derived from the seed and input contents.
    #[arg(long)]
    pub run_id: Option<String>,
}

fn backend(args: &AuditArgs) -> Result<Arc<dyn ChatBackend>> {
    match args.backend.split_once(':') {
        None if args.backend == "remote" => {
            let mut config = RemoteConfig::from_env(&args.api_base)?;
            config.max_requests_per_minute = args.rpm;
            Ok(Arc::new(RemoteBackend::new(config)?))
        }
        None if args.backend == "mock" => Ok(Arc::new(MockBackend::new(Scenario::generative(
            "generative",
            GenerativeParams {
                seed: args.seed,
                ..GenerativeParams::default()
            },
        )))),
        Some(("mock", path)) => Ok(Arc::new(MockBackend::new(Scenario::load(path.as_ref())?))),
        _ => Err(CliError::Config(format!(
            "unknown backend {:?} (expected remote, mock or mock:SCENARIO)",
            args.backend
        ))),
    }
}

pub(super) fn run(args: AuditArgs) -> Result<()> {
    if args.concurrency == 0 {
        return Err(CliError::Config("--concurrency must be at least 1".into()));
    }
    let backend = backend(&args)?;
    let tax = taxonomy(args.taxonomy.as_deref())?;
    let samples = load_dataset(&args.input, &tax)?;
    super::create_dir(&args.out)?;
    let cache_path = args.cache.clone().unwrap_or_else(|| args.out.join("cache.jsonl"));
    let cache = Arc::new(ResponseCache::open(&cache_path)?);
    log::info!("{} cached responses in {}", cache.len(), cache_path.display());
    let auditor = ContextAuditor::new(backend, cache, tax, args.model.clone());
    let config = AuditConfig {
        run_id: args.run_id,
        seed: args.seed,
        n_rs: args.n_rs.unwrap_or(args.n),
        n_ca: args.n_ca.unwrap_or(args.n),
        variants: args.variants,
        policy: FailurePolicy {
            on_validation_fail: args.on_validation_fail,
            on_transport_fail: args.on_transport_fail,
        },
        concurrency: args.concurrency,
    };
    let (manifest, report) = run_audit(&args.input, &samples, &auditor, &config, &args.out)?;
    for (variant, entry) in &manifest.files {
        println!(
            "{variant:<4} {:>6}  {}",
            entry.count,
            args.out.join(&entry.path).display()
        );
    }
    println!(
        "context present {} / absent {} / unresolved {}; cache hits {} misses {}",
        manifest.counts.get("context_present").copied().unwrap_or(0),
        manifest.counts.get("context_absent").copied().unwrap_or(0),
        manifest.counts.get("unresolved").copied().unwrap_or(0),
        report.cache.hits,
        report.cache.misses,
    );
    println!("manifest: {}", args.out.join("run.json").display());
    Ok(())
}
