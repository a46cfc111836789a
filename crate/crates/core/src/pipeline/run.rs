use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::curate::{
    build_ca, build_cam, build_mm, build_rs, build_rsm, classify_context, train_pool, Exclusion, Modified, Unresolved,
};
use super::report::AuditReport;
use super::{FailurePolicy, PipelineError, Result};
use crate::dataset::{write_dataset, EmotionTaxonomy, Sample, Variant};
use crate::llm::ContextAuditor;

const RS_SEED_OFFSET: u64 = 0x5253;
const CA_SEED_OFFSET: u64 = 0x4341;

/// Per-draw seeds, derived from the run seed by fixed offsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSeeds {
    pub rs: u64,
    pub ca: u64,
}

impl RunSeeds {
    pub fn derive(seed: u64) -> Self {
        Self {
            rs: seed.wrapping_add(RS_SEED_OFFSET),
            ca: seed.wrapping_add(CA_SEED_OFFSET),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditConfig {
    /// Defaults to one derived from the seed and the input contents.
    pub run_id: Option<String>,
    pub seed: u64,
    pub n_rs: usize,
    pub n_ca: usize,
    pub variants: Vec<Variant>,
    pub policy: FailurePolicy,
    pub concurrency: usize,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            run_id: None,
            seed: 0,
            n_rs: 1000,
            n_ca: 1000,
            variants: vec![Variant::Rs, Variant::Ca, Variant::Cam, Variant::Rsm, Variant::Mm],
            policy: FailurePolicy::default(),
            concurrency: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Running,
    Complete,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Relative to the run directory.
    pub path: String,
    pub sha256: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub status: RunStatus,
    pub source_dataset: String,
    pub source_sha256: String,
    pub taxonomy: String,
    pub backend_id: String,
    pub model_id: String,
    pub seed: u64,
    pub seeds: RunSeeds,
    pub n_rs: usize,
    pub n_ca: usize,
    pub variants: Vec<Variant>,
    pub policy: FailurePolicy,
    pub pool_size: usize,
    pub counts: IndexMap<String, usize>,
    pub files: IndexMap<String, FileEntry>,
    pub excluded: IndexMap<String, Vec<Exclusion>>,
    pub flagged: IndexMap<String, Vec<String>>,
    pub unresolved: Vec<Unresolved>,
    pub notes: Vec<String>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| PipelineError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    write_file(path, text.as_bytes())
}

fn jsonl(samples: &[Sample], taxonomy: &EmotionTaxonomy) -> Vec<u8> {
    let mut buf = Vec::new();
    write_dataset(samples, taxonomy, &mut buf).expect("writing to memory");
    buf
}

/// Run the curation workflow over the train split of `samples` and write
/// the run directory: `run.json` first (status running), then one
/// `{run_id}.{variant}.jsonl` per requested variant, then the completed
/// manifest and `{run_id}.report.json`.
pub fn run_audit(
    source: &Path,
    samples: &[Sample],
    auditor: &ContextAuditor,
    config: &AuditConfig,
    out_dir: &Path,
) -> Result<(RunManifest, AuditReport)> {
    if config.variants.is_empty() {
        return Err(PipelineError::Config("no variants requested".into()));
    }
    if let Some(v) = config.variants.iter().find(|v| **v == Variant::Original) {
        return Err(PipelineError::Config(format!("{v} is not a derived variant")));
    }
    let taxonomy = auditor.taxonomy();
    let wants = |v: Variant| config.variants.contains(&v);
    let needs_rs = wants(Variant::Rs) || wants(Variant::Rsm) || wants(Variant::Mm);
    let needs_verdicts = wants(Variant::Cp) || wants(Variant::Ca) || wants(Variant::Cam) || wants(Variant::Mm);
    let needs_ca = wants(Variant::Ca) || wants(Variant::Cam);

    let source_sha256 = hex::encode(Sha256::digest(jsonl(samples, taxonomy)));
    let run_id = config
        .run_id
        .clone()
        .unwrap_or_else(|| format!("run-{}-{}", config.seed, &source_sha256[..8]));
    if run_id.is_empty() || run_id.contains(['/', '\\']) {
        return Err(PipelineError::Config(format!("invalid run id {run_id:?}")));
    }
    let seeds = RunSeeds::derive(config.seed);
    let pool = train_pool(samples);
    let mut variants = config.variants.clone();
    variants.sort();
    variants.dedup();

    std::fs::create_dir_all(out_dir).map_err(|source| PipelineError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let manifest_path = out_dir.join("run.json");
    let mut manifest = RunManifest {
        run_id: run_id.clone(),
        status: RunStatus::Running,
        source_dataset: source.display().to_string(),
        source_sha256,
        taxonomy: taxonomy.name().to_string(),
        backend_id: auditor.backend_id(),
        model_id: auditor.model_id().to_string(),
        seed: config.seed,
        seeds,
        n_rs: config.n_rs,
        n_ca: config.n_ca,
        variants: variants.clone(),
        policy: config.policy,
        pool_size: pool.len(),
        counts: IndexMap::new(),
        files: IndexMap::new(),
        excluded: IndexMap::new(),
        flagged: IndexMap::new(),
        unresolved: Vec::new(),
        notes: vec![
            "draw pool is the train split".into(),
            "RS and CA are independent draws and may overlap".into(),
            "multi-label verdicts require yes for every gold label".into(),
            "unresolved samples are in neither CP nor CA; in MM they pass through unmodified".into(),
        ],
    };
    write_json(&manifest_path, &manifest)?;

    let width = config.concurrency.max(1);
    let rs = if needs_rs {
        build_rs(&pool, config.n_rs, seeds.rs)?
    } else {
        Vec::new()
    };
    let partition = if needs_verdicts {
        Some(classify_context(&pool, auditor, &config.policy, width)?)
    } else {
        None
    };
    let ca = match &partition {
        Some(p) if needs_ca => build_ca(&p.ca_pool, config.n_ca, seeds.ca)?,
        _ => Vec::new(),
    };

    let mut built: Vec<(Variant, Vec<Sample>, Option<Modified>)> = Vec::new();
    for &v in &variants {
        let entry = match v {
            Variant::Rs => (rs.clone(), None),
            Variant::Cp => (partition.as_ref().map(|p| p.cp.clone()).unwrap_or_default(), None),
            Variant::Ca => (ca.clone(), None),
            Variant::Cam => {
                let m = build_cam(&ca, auditor, &config.policy, width)?;
                (m.samples.clone(), Some(m))
            }
            Variant::Rsm => {
                let m = build_rsm(&rs, auditor, &config.policy, width)?;
                (m.samples.clone(), Some(m))
            }
            Variant::Mm => {
                let p = partition.as_ref().expect("verdicts computed for MM");
                let m = build_mm(&rs, &p.verdicts, &p.unresolved, auditor, &config.policy, width)?;
                (m.samples.clone(), Some(m))
            }
            Variant::Original => unreachable!("rejected above"),
        };
        built.push((v, entry.0, entry.1));
    }

    let mut report = AuditReport::default();
    for (v, samples, modified) in &built {
        let name = format!("{run_id}.{}.jsonl", v.file_tag());
        let bytes = jsonl(samples, taxonomy);
        write_file(&out_dir.join(&name), &bytes)?;
        let key = v.code().to_string();
        manifest.counts.insert(key.clone(), samples.len());
        manifest.files.insert(
            key.clone(),
            FileEntry {
                path: name,
                sha256: hex::encode(Sha256::digest(&bytes)),
                count: samples.len(),
            },
        );
        report.add_variant(*v, samples, taxonomy);
        if let Some(m) = modified {
            manifest.excluded.insert(key.clone(), m.excluded.clone());
            manifest.flagged.insert(key, m.flagged.clone());
            report.add_modification(*v, m);
        }
    }
    if let Some(p) = &partition {
        manifest.unresolved = p.unresolved.clone();
        manifest.counts.insert("context_present".into(), p.cp.len());
        manifest.counts.insert("context_absent".into(), p.ca_pool.len());
        manifest.counts.insert("unresolved".into(), p.unresolved.len());
        report.unresolved = p.unresolved.len();
    }
    report.cache = auditor.cache().stats().into();
    manifest.status = RunStatus::Complete;
    write_json(&out_dir.join(format!("{run_id}.report.json")), &report)?;
    write_json(&manifest_path, &manifest)?;
    Ok((manifest, report))
}

/// Paths of a completed run's variant files, keyed by variant code.
pub fn variant_paths(manifest: &RunManifest, run_dir: &Path) -> IndexMap<String, PathBuf> {
    manifest
        .files
        .iter()
        .map(|(k, f)| (k.clone(), run_dir.join(&f.path)))
        .collect()
}
