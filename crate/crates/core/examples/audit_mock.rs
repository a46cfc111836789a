//! Audit the bundled toy dataset against the scripted mock backend and print
//! the manifest summary. Run it twice with the same directory to see the
//! cache make the second pass free.
//!
//! cargo run --example audit_mock -- [out_dir]

use std::path::{Path, PathBuf};
use std::sync::Arc;

use emoaudit::dataset::load_dataset;
use emoaudit::llm::{ContextAuditor, MockBackend, ResponseCache, Scenario};
use emoaudit::pipeline::{run_audit, AuditConfig};
use emoaudit::EmotionTaxonomy;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("emoaudit-audit-mock"));
    std::fs::create_dir_all(&out)?;
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let tax = EmotionTaxonomy::goemotions();
    let source = data.join("toy200.jsonl");
    let samples = load_dataset(&source, &tax)?;

    let backend = MockBackend::new(Scenario::load(&data.join("toy.scenario.jsonl"))?);
    let cache = Arc::new(ResponseCache::open(&out.join("cache.jsonl"))?);
    let auditor = ContextAuditor::new(Arc::new(backend), cache, tax, "mock-model");
    let config = AuditConfig {
        seed: 7,
        n_rs: 50,
        n_ca: 50,
        ..AuditConfig::default()
    };
    let (manifest, report) = run_audit(&source, &samples, &auditor, &config, &out)?;

    println!("run {} over a pool of {}", manifest.run_id, manifest.pool_size);
    for (k, v) in &manifest.counts {
        println!("  {k:<16} {v}");
    }
    for (variant, f) in &manifest.files {
        println!("  {variant:<4} {:>4} samples  sha256 {}", f.count, &f.sha256[..12]);
    }
    println!(
        "cache: {} hits, {} misses; validation failures {:?}",
        report.cache.hits, report.cache.misses, report.validation_failures
    );
    println!("written to {}", out.display());
    Ok(())
}
