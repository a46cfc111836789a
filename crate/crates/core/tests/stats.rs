use emoaudit::stats::{
    load_ratings, parse_ratings_csv, subjective_analysis, write_ratings_csv, write_ratings_jsonl, GroupSpec,
    PairFamily, RatingVariant,
};
use emoaudit::synthetic::synthetic_ratings;

#[test]
fn csv_and_jsonl_load_to_the_same_records() {
    let records = synthetic_ratings(&GroupSpec::default(), 4, 1, 9);
    let dir = tempfile::tempdir().unwrap();
    let mut csv = Vec::new();
    write_ratings_csv(&records, &mut csv).unwrap();
    std::fs::write(dir.path().join("r.csv"), &csv).unwrap();
    let mut jsonl = Vec::new();
    write_ratings_jsonl(&records, &mut jsonl).unwrap();
    std::fs::write(dir.path().join("r.jsonl"), &jsonl).unwrap();

    assert_eq!(load_ratings(&dir.path().join("r.csv")).unwrap(), records);
    assert_eq!(load_ratings(&dir.path().join("r.jsonl")).unwrap(), records);
    assert_eq!(parse_ratings_csv(&csv[..]).unwrap(), records);
}

#[test]
fn out_of_range_rating_is_rejected() {
    let text = "participant_id,item_id,variant,emotion,rating,timestamp\np,i#joy,CA,joy,6,2024-01-01T00:00:00Z\n";
    assert!(parse_ratings_csv(text.as_bytes()).is_err());
}

#[test]
fn analysis_from_file_matches_in_memory() {
    let spec = GroupSpec::default();
    let records = synthetic_ratings(&spec, 30, 2, 5);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ratings.csv");
    let mut csv = Vec::new();
    write_ratings_csv(&records, &mut csv).unwrap();
    std::fs::write(&path, csv).unwrap();

    let from_file = subjective_analysis(&load_ratings(&path).unwrap(), &spec, 0.05, PairFamily::WithinEmotion).unwrap();
    let direct = subjective_analysis(&records, &spec, 0.05, PairFamily::WithinEmotion).unwrap();
    assert_eq!(from_file, direct);
    assert_eq!(direct.n, records.len());
    assert_eq!(direct.pairs.len(), spec.groups.len() / 2);
    for pair in &direct.pairs {
        assert_eq!(pair.a.0, pair.b.0);
        assert_ne!(pair.a.1, pair.b.1);
        assert!(pair.p_adjusted >= pair.p_raw);
    }
    // a two-point shift puts every CAM mean above its CA partner
    for g in direct.groups.iter().filter(|g| g.variant == RatingVariant::Cam) {
        let ca = direct
            .groups
            .iter()
            .find(|o| o.emotion == g.emotion && o.variant == RatingVariant::Ca)
            .unwrap();
        assert!(
            g.stats.as_ref().unwrap().mean > ca.stats.as_ref().unwrap().mean,
            "{}",
            g.emotion
        );
    }
    assert!(direct.omnibus.unwrap().p_value < 1e-6);
}
