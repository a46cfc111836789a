use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Result, StatsError};
use crate::dataset::Variant;

/// The two conditions shown to raters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RatingVariant {
    #[serde(rename = "CA")]
    Ca,
    #[serde(rename = "CAM")]
    Cam,
}

impl RatingVariant {
    pub const BOTH: [RatingVariant; 2] = [RatingVariant::Ca, RatingVariant::Cam];

    pub fn code(self) -> &'static str {
        match self {
            Self::Ca => "CA",
            Self::Cam => "CAM",
        }
    }
}

impl fmt::Display for RatingVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for RatingVariant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.parse::<Variant>()? {
            Variant::Ca => Ok(Self::Ca),
            Variant::Cam => Ok(Self::Cam),
            other => Err(format!("variant {other} is not rated (expected CA or CAM)")),
        }
    }
}

impl From<RatingVariant> for Variant {
    fn from(v: RatingVariant) -> Self {
        match v {
            RatingVariant::Ca => Variant::Ca,
            RatingVariant::Cam => Variant::Cam,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingRecord {
    pub participant_id: String,
    pub item_id: String,
    pub variant: RatingVariant,
    pub emotion: String,
    pub rating: u8,
    pub timestamp: String,
}

impl RatingRecord {
    pub fn validate(&self) -> std::result::Result<(), String> {
        if !(1..=5).contains(&self.rating) {
            return Err(format!("rating {} outside 1..5", self.rating));
        }
        if self.participant_id.is_empty() || self.item_id.is_empty() || self.emotion.is_empty() {
            return Err("participant_id, item_id and emotion must be non-empty".into());
        }
        chrono::DateTime::parse_from_rfc3339(&self.timestamp)
            .map_err(|e| format!("timestamp {:?}: {e}", self.timestamp))?;
        Ok(())
    }
}

fn check_all(records: Vec<(usize, RatingRecord)>) -> Result<Vec<RatingRecord>> {
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(records.len());
    for (line, mut r) in records {
        r.emotion = r.emotion.trim().to_lowercase();
        r.validate().map_err(|message| StatsError::Parse { line, message })?;
        if !seen.insert((r.participant_id.clone(), r.item_id.clone())) {
            return Err(StatsError::DuplicateRating {
                participant_id: r.participant_id,
                item_id: r.item_id,
            });
        }
        out.push(r);
    }
    Ok(out)
}

/// CSV with header `participant_id,item_id,variant,emotion,rating,timestamp`.
pub fn parse_ratings_csv(reader: impl Read) -> Result<Vec<RatingRecord>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut records = Vec::new();
    for (i, row) in rdr.deserialize::<RatingRecord>().enumerate() {
        // header is line 1
        let line = i + 2;
        let r = row.map_err(|e| StatsError::Parse {
            line,
            message: e.to_string(),
        })?;
        records.push((line, r));
    }
    check_all(records)
}

pub fn parse_ratings_jsonl(reader: impl Read) -> Result<Vec<RatingRecord>> {
    let mut records = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| StatsError::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let r = serde_json::from_str(&line).map_err(|e| StatsError::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        records.push((line_no, r));
    }
    check_all(records)
}

/// Load by extension: `.csv`, anything else is read as JSONL.
pub fn load_ratings(path: &Path) -> Result<Vec<RatingRecord>> {
    let file = std::fs::File::open(path).map_err(|source| StatsError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        parse_ratings_csv(file)
    } else {
        parse_ratings_jsonl(file)
    }
}

pub fn write_ratings_csv(records: &[RatingRecord], writer: impl Write) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        w.serialize(r).map_err(std::io::Error::other)?;
    }
    w.flush()
}

pub fn write_ratings_jsonl(records: &[RatingRecord], mut writer: impl Write) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut writer, r)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(p: &str, item: &str, rating: u8) -> RatingRecord {
        RatingRecord {
            participant_id: p.into(),
            item_id: item.into(),
            variant: RatingVariant::Cam,
            emotion: "love".into(),
            rating,
            timestamp: "2024-03-01T12:00:00Z".into(),
        }
    }

    #[test]
    fn csv_round_trip() {
        let records = vec![rec("p1", "a#love", 4), rec("p2", "a#love", 2)];
        let mut buf = Vec::new();
        write_ratings_csv(&records, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("participant_id,item_id,variant,emotion,rating,timestamp\n"));
        assert_eq!(parse_ratings_csv(&buf[..]).unwrap(), records);
    }

    #[test]
    fn jsonl_round_trip() {
        let records = vec![rec("p1", "a#love", 5)];
        let mut buf = Vec::new();
        write_ratings_jsonl(&records, &mut buf).unwrap();
        assert_eq!(parse_ratings_jsonl(&buf[..]).unwrap(), records);
    }

    #[test]
    fn rejects_bad_rows() {
        let csv = "participant_id,item_id,variant,emotion,rating,timestamp\np,i,CA,love,6,2024-03-01T12:00:00Z\n";
        assert!(matches!(
            parse_ratings_csv(csv.as_bytes()),
            Err(StatsError::Parse { line: 2, .. })
        ));
        let csv = "participant_id,item_id,variant,emotion,rating,timestamp\np,i,RS,love,3,2024-03-01T12:00:00Z\n";
        assert!(parse_ratings_csv(csv.as_bytes()).is_err());
        let csv = "participant_id,item_id,variant,emotion,rating,timestamp\np,i,CA,love,3,yesterday\n";
        assert!(parse_ratings_csv(csv.as_bytes()).is_err());
        let dup = [rec("p", "i", 3), rec("p", "i", 4)];
        let mut buf = Vec::new();
        write_ratings_jsonl(&dup, &mut buf).unwrap();
        assert!(matches!(
            parse_ratings_jsonl(&buf[..]),
            Err(StatsError::DuplicateRating { .. })
        ));
    }
}
