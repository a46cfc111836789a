//! Does appended context help? Curate CA and CAM from a synthetic corpus
//! whose base texts carry no label signal, train a classifier on each and
//! compare zero-shot macro-F1 on a DailyDialog-style set.
//!
//! cargo run --release --example efficacy_experiment -- [seeds]

use emoaudit::synthetic::{efficacy_experiment, EfficacyConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seeds: u64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(5);
    let config = EfficacyConfig::default();
    println!(
        "{:>4} {:>6} {:>6} {:>8} {:>8} {:>8}",
        "seed", "|CA|", "|CAM|", "CA F1", "CAM F1", "gain"
    );
    let mut wins = 0;
    for seed in 0..seeds {
        let o = efficacy_experiment(seed, &config)?;
        println!(
            "{:>4} {:>6} {:>6} {:>8.3} {:>8.3} {:>+8.3}",
            o.seed,
            o.ca_size,
            o.cam_size,
            o.ca_macro_f1,
            o.cam_macro_f1,
            o.gain()
        );
        if o.gain() >= 0.05 {
            wins += 1;
        }
    }
    println!("CAM beat CA by at least 0.05 in {wins} of {seeds} seeds");
    Ok(())
}
