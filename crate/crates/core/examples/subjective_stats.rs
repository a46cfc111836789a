//! Simulate survey ratings where CAM is rated one point higher, then run the
//! Kruskal-Wallis / Dunn / BH chain and print the descriptive table.
//!
//! cargo run --example subjective_stats -- [n_per_group] [shift]

use emoaudit::stats::{subjective_analysis, GroupSpec, PairFamily};
use emoaudit::synthetic::synthetic_ratings;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(110);
    let shift: u8 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1);
    let spec = GroupSpec::default();
    let ratings = synthetic_ratings(&spec, n, shift, 42);
    let report = subjective_analysis(&ratings, &spec, 0.05, PairFamily::WithinEmotion)?;
    print!("{}", report.render_table());
    println!(
        "{} of {} emotions significant after BH",
        report.significant_count(),
        report.pairs.len()
    );
    Ok(())
}
