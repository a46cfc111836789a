use std::path::PathBuf;
use std::sync::Arc;

use clap::Args;

use super::{taxonomy, CliError, Result};
use crate::dataset::load_dataset;
use crate::stats::{GroupSpec, DEFAULT_EMOTIONS};
use crate::survey::{create_survey, serve, Survey, SurveyConfig};

#[derive(Debug, Args)]
pub struct SurveyArgs {
    /// CA variant file.
    #[arg(long)]
    pub ca: PathBuf,
    /// CAM variant file (same source samples as --ca).
    #[arg(long)]
    pub cam: PathBuf,
    #[arg(long)]
    pub taxonomy: Option<PathBuf>,
    /// Survey emotions.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_EMOTIONS.map(String::from))]
    pub emotions: Vec<String>,
    /// State directory holding bank.json and events.jsonl.
    #[arg(long, default_value = "survey")]
    pub dir: PathBuf,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    /// Built survey UI to serve for non-API paths.
    #[arg(long = "static")]
    pub static_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    pub batch_size: usize,
    /// Batches one participant may take; unlimited by default.
    #[arg(long)]
    pub max_batches: Option<usize>,
    /// Tie-break seed for item selection.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = term => {},
    }
    log::info!("shutting down");
}

pub(super) fn run(args: SurveyArgs) -> Result<()> {
    if args.batch_size == 0 {
        return Err(CliError::Config("--batch-size must be at least 1".into()));
    }
    let tax = taxonomy(args.taxonomy.as_deref())?;
    let ca = load_dataset(&args.ca, &tax)?;
    let cam = load_dataset(&args.cam, &tax)?;
    let bank = create_survey(&ca, &cam, &tax, &GroupSpec::for_emotions(&args.emotions))?;
    log::info!(
        "item bank: {} items over {} item ids ({} from multi-emotion samples)",
        bank.len(),
        bank.item_ids().len(),
        bank.multi_emotion_items
    );
    let config = SurveyConfig {
        batch_size: args.batch_size,
        max_batches: args.max_batches,
        seed: args.seed,
    };
    let survey = Arc::new(Survey::open(&args.dir, bank, config)?);
    log::info!(
        "{} participants restored from {}",
        survey.participant_count(),
        survey.log_path().display()
    );

    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::Internal(e.to_string()))?;
    runtime.block_on(async {
        let addr = format!("{}:{}", args.host, args.port);
        let listener = tokio::net::TcpListener::bind(&addr)
            .await
            .map_err(|e| CliError::Config(format!("cannot bind {addr}: {e}")))?;
        serve(listener, survey, args.static_dir, shutdown_signal())
            .await
            .map_err(|e| CliError::Internal(e.to_string()))
    })
}
