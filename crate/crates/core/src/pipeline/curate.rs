use std::collections::{BTreeMap, HashSet};
use std::sync::atomic::{AtomicBool, Ordering};

use serde::{Deserialize, Serialize};

use super::{FailurePolicy, PipelineError, Result, TransportPolicy, ValidationPolicy};
use crate::dataset::{sample_random, AuditProvenance, DatasetError, Sample, Split, Variant};
use crate::llm::{map_bounded, ContextAuditor, ContextVerdict, GeneratedContext, LlmError};

/// A sample with no verdict or no usable context.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Unresolved {
    pub sample_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exclusion {
    pub sample_id: String,
    pub reasons: Vec<String>,
}

/// Outcome of context evaluation over a pool.
#[derive(Debug, Clone, Default)]
pub struct Partition {
    /// Context-present samples, tagged CP.
    pub cp: Vec<Sample>,
    /// Context-absent samples, untagged until subsampled into CA.
    pub ca_pool: Vec<Sample>,
    pub verdicts: BTreeMap<String, ContextVerdict>,
    pub unresolved: Vec<Unresolved>,
}

/// A variant built by appending generated context.
#[derive(Debug, Clone, Default)]
pub struct Modified {
    pub samples: Vec<Sample>,
    pub excluded: Vec<Exclusion>,
    /// Kept despite failing validation (keep_flagged policy).
    pub flagged: Vec<String>,
    /// Failure reason -> number of failed generation attempts.
    pub validation_failures: BTreeMap<String, usize>,
    pub regenerated: usize,
}

/// The draw pool: the train split.
pub fn train_pool(samples: &[Sample]) -> Vec<Sample> {
    samples.iter().filter(|s| s.split == Split::Train).cloned().collect()
}

fn tag(mut samples: Vec<Sample>, variant: Variant) -> Vec<Sample> {
    for s in &mut samples {
        s.provenance = AuditProvenance {
            variant,
            extra: std::mem::take(&mut s.provenance.extra),
            ..AuditProvenance::of(variant)
        };
    }
    samples
}

/// Uniform random sample of the pool, tagged RS.
pub fn build_rs(pool: &[Sample], n: usize, seed: u64) -> Result<Vec<Sample>> {
    Ok(tag(sample_random(pool, n, seed)?, Variant::Rs))
}

/// Uniform subsample of the context-absent pool, tagged CA.
pub fn build_ca(ca_pool: &[Sample], n: usize, seed: u64) -> Result<Vec<Sample>> {
    sample_random(ca_pool, n, seed)
        .map(|s| tag(s, Variant::Ca))
        .map_err(|e| match e {
            DatasetError::InsufficientSamples { requested, available } => PipelineError::Config(format!(
                "context-absent pool has {available} samples, {requested} requested"
            )),
            other => other.into(),
        })
}

enum Evaluated {
    Verdict(ContextVerdict),
    Unresolved(Unresolved),
    Halted(LlmError),
    Skipped,
}

/// Split `samples` into context-present and context-absent sets. Samples
/// whose verdict cannot be parsed are unresolved and land in neither set;
/// transport failures halt or are logged as unresolved per `policy`.
pub fn classify_context(
    samples: &[Sample],
    auditor: &ContextAuditor,
    policy: &FailurePolicy,
    concurrency: usize,
) -> Result<Partition> {
    let halted = AtomicBool::new(false);
    let outcomes = map_bounded(samples, concurrency, |s| {
        if halted.load(Ordering::Relaxed) {
            return Evaluated::Skipped;
        }
        match auditor.evaluate_context(s) {
            Ok(v) => Evaluated::Verdict(v),
            Err(e) if e.is_transport() && policy.on_transport_fail == TransportPolicy::Halt => {
                halted.store(true, Ordering::Relaxed);
                Evaluated::Halted(e)
            }
            Err(e) => Evaluated::Unresolved(Unresolved {
                sample_id: s.id.clone(),
                reason: e.to_string(),
            }),
        }
    });
    let mut part = Partition::default();
    let backend = auditor.backend_id();
    // Items already in flight when a halt happens still finish; the first
    // failure in input order is the one reported.
    for (s, o) in samples.iter().zip(outcomes) {
        match o {
            Evaluated::Verdict(v) => {
                if v.is_present() {
                    let mut cp = tag(vec![s.clone()], Variant::Cp).remove(0);
                    cp.provenance.backend_id = Some(backend.clone());
                    part.cp.push(cp);
                } else {
                    part.ca_pool.push(s.clone());
                }
                part.verdicts.insert(s.id.clone(), v);
            }
            Evaluated::Unresolved(u) => part.unresolved.push(u),
            Evaluated::Halted(e) => {
                return Err(PipelineError::Llm {
                    sample_id: s.id.clone(),
                    source: e,
                })
            }
            Evaluated::Skipped => {}
        }
    }
    Ok(part)
}

enum Generated {
    Kept {
        sample: Sample,
        flagged: bool,
        failures: Vec<String>,
        regenerated: bool,
    },
    Excluded {
        exclusion: Exclusion,
        failures: Vec<String>,
        regenerated: bool,
    },
    PassThrough(Sample),
    Halted(LlmError),
    Skipped,
}

fn with_context(sample: &Sample, g: &GeneratedContext, variant: Variant, backend_id: &str) -> Sample {
    let mut out = sample.clone();
    out.text = format!("{} {}", sample.text, g.appended_text);
    out.provenance = AuditProvenance {
        variant,
        context_appended: Some(g.appended_text.clone()),
        backend_id: Some(backend_id.to_string()),
        prompt_hash: Some(g.prompt_hash.clone()),
        extra: sample.provenance.extra.clone(),
    };
    out
}

fn reasons(g: &GeneratedContext) -> Vec<String> {
    let mut r: Vec<String> = g.validation.failure_reasons().into_iter().map(str::to_string).collect();
    if g.appended_text.trim().is_empty() && !r.iter().any(|x| x == "empty_context") {
        r.push("empty_context".into());
    }
    r
}

fn usable(g: &GeneratedContext) -> bool {
    g.validation.passed && !g.appended_text.trim().is_empty()
}

fn generate_one(
    s: &Sample,
    auditor: &ContextAuditor,
    policy: &FailurePolicy,
    variant: Variant,
    backend: &str,
    halted: &AtomicBool,
) -> Generated {
    if halted.load(Ordering::Relaxed) {
        return Generated::Skipped;
    }
    let transport = |e: LlmError| {
        if e.is_transport() && policy.on_transport_fail == TransportPolicy::Halt {
            halted.store(true, Ordering::Relaxed);
            Generated::Halted(e)
        } else {
            Generated::Excluded {
                exclusion: Exclusion {
                    sample_id: s.id.clone(),
                    reasons: vec![format!("error: {e}")],
                },
                failures: Vec::new(),
                regenerated: false,
            }
        }
    };
    let first = match auditor.generate_context(s) {
        Ok(g) => g,
        Err(e) => return transport(e),
    };
    if usable(&first) {
        return Generated::Kept {
            sample: with_context(s, &first, variant, backend),
            flagged: false,
            failures: Vec::new(),
            regenerated: false,
        };
    }
    let mut failures = reasons(&first);
    let exclude = |failures: Vec<String>, reasons: Vec<String>, regenerated| Generated::Excluded {
        exclusion: Exclusion {
            sample_id: s.id.clone(),
            reasons,
        },
        failures,
        regenerated,
    };
    match policy.on_validation_fail {
        ValidationPolicy::Exclude => exclude(failures.clone(), failures, false),
        ValidationPolicy::KeepFlagged => {
            if first.appended_text.trim().is_empty() {
                exclude(failures.clone(), failures, false)
            } else {
                Generated::Kept {
                    sample: with_context(s, &first, variant, backend),
                    flagged: true,
                    failures,
                    regenerated: false,
                }
            }
        }
        ValidationPolicy::RetryOnceThenExclude => {
            let second = match auditor.regenerate_context(s) {
                Ok(g) => g,
                Err(e) => return transport(e),
            };
            if usable(&second) {
                Generated::Kept {
                    sample: with_context(s, &second, variant, backend),
                    flagged: false,
                    failures,
                    regenerated: true,
                }
            } else {
                let last = reasons(&second);
                failures.extend(last.iter().cloned());
                exclude(failures, last, true)
            }
        }
    }
}

fn modify(
    samples: &[Sample],
    auditor: &ContextAuditor,
    policy: &FailurePolicy,
    variant: Variant,
    concurrency: usize,
    selected: impl Fn(&Sample) -> bool + Sync,
) -> Result<Modified> {
    let backend = auditor.backend_id();
    let halted = AtomicBool::new(false);
    let outcomes = map_bounded(samples, concurrency, |s| {
        if !selected(s) {
            let mut out = s.clone();
            out.provenance = AuditProvenance {
                variant,
                extra: s.provenance.extra.clone(),
                ..AuditProvenance::of(variant)
            };
            return Generated::PassThrough(out);
        }
        generate_one(s, auditor, policy, variant, &backend, &halted)
    });
    let mut m = Modified::default();
    for (s, o) in samples.iter().zip(outcomes) {
        match o {
            Generated::Kept {
                sample,
                flagged,
                failures,
                regenerated,
            } => {
                if flagged {
                    m.flagged.push(sample.id.clone());
                }
                tally(&mut m, failures, regenerated);
                m.samples.push(sample);
            }
            Generated::Excluded {
                exclusion,
                failures,
                regenerated,
            } => {
                tally(&mut m, failures, regenerated);
                m.excluded.push(exclusion);
            }
            Generated::PassThrough(sample) => m.samples.push(sample),
            Generated::Halted(e) => {
                return Err(PipelineError::Llm {
                    sample_id: s.id.clone(),
                    source: e,
                })
            }
            Generated::Skipped => {}
        }
    }
    Ok(m)
}

fn tally(m: &mut Modified, failures: Vec<String>, regenerated: bool) {
    for f in failures {
        *m.validation_failures.entry(f).or_insert(0) += 1;
    }
    if regenerated {
        m.regenerated += 1;
    }
}

/// Append validated context to every CA sample.
pub fn build_cam(
    ca: &[Sample],
    auditor: &ContextAuditor,
    policy: &FailurePolicy,
    concurrency: usize,
) -> Result<Modified> {
    modify(ca, auditor, policy, Variant::Cam, concurrency, |_| true)
}

/// Append validated context to every RS sample, whatever its verdict.
pub fn build_rsm(
    rs: &[Sample],
    auditor: &ContextAuditor,
    policy: &FailurePolicy,
    concurrency: usize,
) -> Result<Modified> {
    modify(rs, auditor, policy, Variant::Rsm, concurrency, |_| true)
}

/// Append context only to the context-absent RS samples; the rest pass
/// through unchanged. Unresolved samples also pass through unchanged.
pub fn build_mm(
    rs: &[Sample],
    verdicts: &BTreeMap<String, ContextVerdict>,
    unresolved: &[Unresolved],
    auditor: &ContextAuditor,
    policy: &FailurePolicy,
    concurrency: usize,
) -> Result<Modified> {
    let unresolved: HashSet<&str> = unresolved.iter().map(|u| u.sample_id.as_str()).collect();
    if let Some(s) = rs
        .iter()
        .find(|s| !verdicts.contains_key(&s.id) && !unresolved.contains(s.id.as_str()))
    {
        return Err(PipelineError::MissingVerdict(s.id.clone()));
    }
    modify(rs, auditor, policy, Variant::Mm, concurrency, |s| {
        verdicts.get(&s.id).is_some_and(|v| !v.is_present())
    })
}
