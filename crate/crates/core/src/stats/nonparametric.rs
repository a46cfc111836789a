use serde::{Deserialize, Serialize};

use super::descriptive::rank_with_ties;
use super::special::{chi_square_sf, normal_two_sided};
use super::{Result, StatsError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseResult {
    pub group_i: usize,
    pub group_j: usize,
    pub z: f64,
    pub p_raw: f64,
    pub p_adjusted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub effect_size: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairwise: Option<Vec<PairwiseResult>>,
}

fn check_groups(groups: &[Vec<f64>]) -> Result<()> {
    if groups.len() < 2 {
        return Err(StatsError::TooFewGroups(groups.len()));
    }
    if let Some(i) = groups.iter().position(Vec::is_empty) {
        return Err(StatsError::EmptyGroup(i));
    }
    Ok(())
}

struct Pooled {
    n: f64,
    mean_ranks: Vec<f64>,
    rank_sums: Vec<f64>,
    sizes: Vec<f64>,
    tie_term: f64,
}

fn pool(groups: &[Vec<f64>]) -> Pooled {
    let all: Vec<f64> = groups.iter().flatten().copied().collect();
    let ranking = rank_with_ties(&all);
    let mut rank_sums = Vec::with_capacity(groups.len());
    let mut offset = 0;
    for g in groups {
        rank_sums.push(ranking.ranks[offset..offset + g.len()].iter().sum::<f64>());
        offset += g.len();
    }
    let sizes: Vec<f64> = groups.iter().map(|g| g.len() as f64).collect();
    Pooled {
        n: all.len() as f64,
        mean_ranks: rank_sums.iter().zip(&sizes).map(|(r, n)| r / n).collect(),
        rank_sums,
        sizes,
        tie_term: ranking.tie_term(),
    }
}

/// Tie-corrected Kruskal-Wallis H with a chi-square (k−1) p-value. When every
/// observation is tied the correction is 0/0; H is then defined as 0, p as 1.
pub fn kruskal_wallis(groups: &[Vec<f64>]) -> Result<TestResult> {
    check_groups(groups)?;
    let p = pool(groups);
    let n = p.n;
    let df = groups.len() - 1;
    let correction = 1.0 - p.tie_term / (n * n * n - n);
    if correction <= 0.0 {
        return Ok(TestResult {
            statistic: 0.0,
            df,
            p_value: 1.0,
            effect_size: None,
            pairwise: None,
        });
    }
    let s: f64 = p.rank_sums.iter().zip(&p.sizes).map(|(r, ni)| r * r / ni).sum();
    let h_raw = 12.0 / (n * (n + 1.0)) * s - 3.0 * (n + 1.0);
    let h = (h_raw / correction).max(0.0);
    Ok(TestResult {
        statistic: h,
        df,
        p_value: chi_square_sf(h, df as f64),
        effect_size: None,
        pairwise: None,
    })
}

/// η² = (H − k + 1)/(N − k), clamped at 0.
pub fn eta_squared(h: f64, k: usize, n: usize) -> Result<f64> {
    if n <= k {
        return Err(StatsError::InvalidArgument(format!(
            "eta squared needs N > k (N={n}, k={k})"
        )));
    }
    Ok(((h - k as f64 + 1.0) / (n - k) as f64).max(0.0))
}

/// Dunn's z for the requested pairs (all i < j when `pairs` is None), ranked
/// over the pooled sample with the tie-corrected variance. `p_adjusted`
/// equals `p_raw`; apply [`benjamini_hochberg`] over the chosen family.
pub fn dunn_test(groups: &[Vec<f64>], pairs: Option<&[(usize, usize)]>) -> Result<Vec<PairwiseResult>> {
    check_groups(groups)?;
    let k = groups.len();
    let all_pairs: Vec<(usize, usize)>;
    let pairs = match pairs {
        Some(p) => {
            if let Some(&(i, j)) = p.iter().find(|&&(i, j)| i >= k || j >= k || i == j) {
                return Err(StatsError::InvalidArgument(format!(
                    "bad pair ({i}, {j}) for {k} groups"
                )));
            }
            p
        }
        None => {
            all_pairs = (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j))).collect();
            &all_pairs
        }
    };
    let p = pool(groups);
    let n = p.n;
    let base = n * (n + 1.0) / 12.0 - p.tie_term / (12.0 * (n - 1.0));
    Ok(pairs
        .iter()
        .map(|&(i, j)| {
            let var = base * (1.0 / p.sizes[i] + 1.0 / p.sizes[j]);
            let (z, p_raw) = if var > 0.0 {
                let z = (p.mean_ranks[i] - p.mean_ranks[j]) / var.sqrt();
                (z, normal_two_sided(z))
            } else {
                (0.0, 1.0)
            };
            PairwiseResult {
                group_i: i,
                group_j: j,
                z,
                p_raw,
                p_adjusted: p_raw,
            }
        })
        .collect())
}

/// Benjamini-Hochberg step-up adjustment, returned in input order.
pub fn benjamini_hochberg(p_values: &[f64]) -> Result<Vec<f64>> {
    if let Some(&bad) = p_values.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(StatsError::InvalidPValue(bad));
    }
    let m = p_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[a].total_cmp(&p_values[b]));
    let mut adjusted = vec![0.0; m];
    let mut running = 1.0f64;
    for rank in (1..=m).rev() {
        let i = order[rank - 1];
        running = running.min(p_values[i] * (m as f64 / rank as f64));
        adjusted[i] = running;
    }
    Ok(adjusted)
}
