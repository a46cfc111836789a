use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{AuditProvenance, DatasetError, EmotionTaxonomy, Result, Sample, Split};

/// How unknown JSON fields are treated when loading.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum LoadMode {
    /// Unknown fields are an error.
    #[default]
    Strict,
    /// Unknown fields are kept and written back on save.
    Lenient,
}

#[derive(Serialize, Deserialize)]
struct SampleRecord {
    id: String,
    text: String,
    labels: Vec<String>,
    split: Split,
    #[serde(default)]
    provenance: AuditProvenance,
    #[serde(flatten)]
    extra: serde_json::Map<String, serde_json::Value>,
}

/// Load a JSONL dataset in strict mode.
pub fn load_dataset(path: &Path, taxonomy: &EmotionTaxonomy) -> Result<Vec<Sample>> {
    load_dataset_with(path, taxonomy, LoadMode::Strict)
}

pub fn load_dataset_with(path: &Path, taxonomy: &EmotionTaxonomy, mode: LoadMode) -> Result<Vec<Sample>> {
    let file = File::open(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_dataset(BufReader::new(file), taxonomy, mode).map_err(|e| match e {
        DatasetError::Io { source, .. } => DatasetError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => other,
    })
}

/// Parse JSONL from any reader. Blank lines are skipped; line numbers in
/// errors are 1-based.
pub fn parse_dataset(reader: impl BufRead, taxonomy: &EmotionTaxonomy, mode: LoadMode) -> Result<Vec<Sample>> {
    let mut samples = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|source| DatasetError::Io {
            path: Default::default(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: SampleRecord = serde_json::from_str(&line).map_err(|e| DatasetError::Malformed {
            line: line_no,
            message: e.to_string(),
        })?;
        if mode == LoadMode::Strict {
            let unknown: Vec<&String> = record.extra.keys().chain(record.provenance.extra.keys()).collect();
            if !unknown.is_empty() {
                return Err(DatasetError::Malformed {
                    line: line_no,
                    message: format!("unknown field(s) {unknown:?}"),
                });
            }
        }
        let mut labels = BTreeSet::new();
        for name in &record.labels {
            let idx = taxonomy.index_of(name).ok_or_else(|| DatasetError::UnknownLabel {
                line: line_no,
                label: name.clone(),
                taxonomy: taxonomy.name().to_string(),
            })?;
            labels.insert(idx);
        }
        if !seen.insert(record.id.clone()) {
            return Err(DatasetError::DuplicateId {
                line: line_no,
                id: record.id,
            });
        }
        let sample = Sample {
            id: record.id,
            text: record.text,
            labels,
            split: record.split,
            provenance: record.provenance,
            extra: record.extra,
        };
        sample
            .validate(taxonomy)
            .map_err(|message| DatasetError::InvalidSample { line: line_no, message })?;
        samples.push(sample);
    }
    Ok(samples)
}

/// Write samples as JSONL, one record per line, labels in taxonomy order.
pub fn write_dataset(samples: &[Sample], taxonomy: &EmotionTaxonomy, mut out: impl Write) -> std::io::Result<()> {
    for s in samples {
        let record = SampleRecord {
            id: s.id.clone(),
            text: s.text.clone(),
            labels: s.labels.iter().map(|&i| taxonomy.label(i).to_string()).collect(),
            split: s.split,
            provenance: s.provenance.clone(),
            extra: s.extra.clone(),
        };
        serde_json::to_writer(&mut out, &record)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn save_dataset(samples: &[Sample], taxonomy: &EmotionTaxonomy, path: &Path) -> Result<()> {
    let io_err = |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    write_dataset(samples, taxonomy, BufWriter::new(file)).map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Variant;

    fn go() -> EmotionTaxonomy {
        EmotionTaxonomy::goemotions()
    }

    #[test]
    fn parses_table_one_row() {
        let line = r#"{"id":"a1","text":"Wow!!!","labels":["excitement","surprise"],"split":"train"}"#;
        let s = parse_dataset(line.as_bytes(), &go(), LoadMode::Strict).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].label_names(&go()), vec!["excitement", "surprise"]);
        assert_eq!(s[0].provenance.variant, Variant::Original);
    }

    #[test]
    fn empty_input_is_empty_dataset() {
        assert!(parse_dataset("".as_bytes(), &go(), LoadMode::Strict)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn unknown_label_reports_line() {
        let text = "{\"id\":\"a\",\"text\":\"x\",\"labels\":[\"joy\"],\"split\":\"train\"}\n\
                    {\"id\":\"b\",\"text\":\"y\",\"labels\":[\"shame\"],\"split\":\"train\"}\n";
        match parse_dataset(text.as_bytes(), &go(), LoadMode::Strict) {
            Err(DatasetError::UnknownLabel { line, label, .. }) => {
                assert_eq!(line, 2);
                assert_eq!(label, "shame");
            }
            other => panic!("expected unknown label, got {other:?}"),
        }
    }

    #[test]
    fn malformed_and_duplicate() {
        let bad = "{\"id\":\"a\",\"text\":\"x\",\"labels\":[\"joy\"],\"split\":\"train\"}\n{not json}\n";
        assert!(matches!(
            parse_dataset(bad.as_bytes(), &go(), LoadMode::Strict),
            Err(DatasetError::Malformed { line: 2, .. })
        ));
        let dup = "{\"id\":\"a\",\"text\":\"x\",\"labels\":[\"joy\"],\"split\":\"train\"}\n\
                   {\"id\":\"a\",\"text\":\"y\",\"labels\":[\"joy\"],\"split\":\"test\"}\n";
        assert!(matches!(
            parse_dataset(dup.as_bytes(), &go(), LoadMode::Strict),
            Err(DatasetError::DuplicateId { line: 2, .. })
        ));
    }

    #[test]
    fn labels_case_insensitive() {
        let line = r#"{"id":"a","text":"x","labels":["JOY","Joy"],"split":"test"}"#;
        let s = parse_dataset(line.as_bytes(), &go(), LoadMode::Strict).unwrap();
        assert_eq!(s[0].labels.len(), 1);
    }

    #[test]
    fn strict_rejects_unknown_lenient_preserves() {
        let line = r#"{"id":"a","text":"x","labels":["joy"],"split":"test","rater":7,"provenance":{"variant":"original","note":"n"}}"#;
        assert!(matches!(
            parse_dataset(line.as_bytes(), &go(), LoadMode::Strict),
            Err(DatasetError::Malformed { .. })
        ));
        let s = parse_dataset(line.as_bytes(), &go(), LoadMode::Lenient).unwrap();
        assert_eq!(s[0].extra["rater"], 7);
        let mut buf = Vec::new();
        write_dataset(&s, &go(), &mut buf).unwrap();
        let back = parse_dataset(buf.as_slice(), &go(), LoadMode::Lenient).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn round_trip_with_context() {
        let t = go();
        let mut s = Sample::with_label_names("c1", "Wow!!! I am in awe.", &["admiration"], Split::Train, &t).unwrap();
        s.provenance.variant = Variant::Cam;
        s.provenance.context_appended = Some("I am in awe.".into());
        s.provenance.backend_id = Some("mock".into());
        s.provenance.prompt_hash = Some("ab12".into());
        let samples = vec![
            s,
            Sample::with_label_names("c2", "Calm down bro", &["neutral"], Split::Validation, &t).unwrap(),
            Sample::with_label_names("c3", "Noooo not the booze", &["sadness", "neutral"], Split::Test, &t).unwrap(),
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        save_dataset(&samples, &t, &path).unwrap();
        assert_eq!(load_dataset(&path, &t).unwrap(), samples);
    }

    #[test]
    fn unwritable_path_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("missing").join("d.jsonl");
        assert!(matches!(save_dataset(&[], &go(), &path), Err(DatasetError::Io { .. })));
    }
}
