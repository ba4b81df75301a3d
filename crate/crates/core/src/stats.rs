//! Per-item aggregation, inter-rater agreement and paired significance tests.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::collection::ScoredJudgment;
use crate::prosody::ModificationKind;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum StatsError {
    #[error("no pairable values: alpha needs at least two ratings in one unit")]
    NoPairableValues,
    #[error("alpha is undefined: expected disagreement is zero (a single value throughout)")]
    NoExpectedDisagreement,
    #[error("median split needs at least two values, got {0}")]
    TooFewValues(usize),
}

/// The rated quality dimensions plus the objective correctness measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dimension {
    Informativeness,
    Elocution,
    Interruption,
    Length,
    Correctness,
}

impl Dimension {
    pub const ALL: [Dimension; 5] = [
        Dimension::Informativeness,
        Dimension::Elocution,
        Dimension::Interruption,
        Dimension::Length,
        Dimension::Correctness,
    ];

    /// Dimensions a worker rates directly.
    pub const RATED: [Dimension; 4] = [
        Dimension::Informativeness,
        Dimension::Elocution,
        Dimension::Interruption,
        Dimension::Length,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Dimension::Informativeness => "informativeness",
            Dimension::Elocution => "elocution",
            Dimension::Interruption => "interruption",
            Dimension::Length => "length",
            Dimension::Correctness => "correctness",
        }
    }

    /// Distance metric used for agreement on this dimension by default.
    pub fn default_metric(self) -> Metric {
        match self {
            Dimension::Interruption => Metric::Nominal,
            _ => Metric::Ordinal,
        }
    }

    /// Raw per-judgment value as the worker entered it (length not folded).
    pub fn raw_value(self, j: &ScoredJudgment) -> Option<f64> {
        let r = &j.judgment;
        Some(match self {
            Dimension::Informativeness => r.informativeness as f64,
            Dimension::Elocution => r.elocution as f64,
            Dimension::Interruption => r.interruption as f64,
            Dimension::Length => r.length_rating as f64,
            Dimension::Correctness => return j.correctness,
        })
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Median-aggregated scores of one (item, kind) audio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemScore {
    pub item_id: String,
    pub kind: ModificationKind,
    pub informativeness_med: f64,
    pub elocution_med: f64,
    pub interruption_med: f64,
    pub length_abs_med: f64,
    pub correctness_mean: f64,
    pub n_judgments: usize,
}

impl ItemScore {
    pub fn get(&self, d: Dimension) -> f64 {
        match d {
            Dimension::Informativeness => self.informativeness_med,
            Dimension::Elocution => self.elocution_med,
            Dimension::Interruption => self.interruption_med,
            Dimension::Length => self.length_abs_med,
            Dimension::Correctness => self.correctness_mean,
        }
    }
}

/// Lower median: the `(n-1)/2`-th order statistic, always an observed value.
pub fn lower_median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Some(v[(v.len() - 1) / 2])
}

/// Conventional median (mean of the two middle values for even counts).
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}

/// Aggregates the judgments of one item/kind. Ratings use the lower median;
/// length is folded to `|length|` per judgment before the median;
/// correctness is the mean over judgments that carry one (0 if none do).
pub fn aggregate_item(ratings: &[ScoredJudgment]) -> Option<ItemScore> {
    let first = ratings.first()?;
    let col = |f: fn(&ScoredJudgment) -> f64| -> f64 {
        let v: Vec<f64> = ratings.iter().map(f).collect();
        lower_median(&v).expect("non-empty")
    };
    let scored: Vec<f64> = ratings.iter().filter_map(|r| r.correctness).collect();
    let correctness_mean = if scored.is_empty() {
        0.0
    } else {
        scored.iter().sum::<f64>() / scored.len() as f64
    };
    Some(ItemScore {
        item_id: first.judgment.item_id.clone(),
        kind: first.judgment.kind,
        informativeness_med: col(|r| r.judgment.informativeness as f64),
        elocution_med: col(|r| r.judgment.elocution as f64),
        interruption_med: col(|r| r.judgment.interruption as f64),
        length_abs_med: col(|r| (r.judgment.length_rating as f64).abs()),
        correctness_mean,
        n_judgments: ratings.len(),
    })
}

/// Groups judgments by (item, kind) and aggregates each group.
pub fn aggregate_all(judgments: &[ScoredJudgment]) -> Vec<ItemScore> {
    let mut groups: BTreeMap<(String, ModificationKind), Vec<ScoredJudgment>> = BTreeMap::new();
    for j in judgments {
        groups
            .entry((j.judgment.item_id.clone(), j.judgment.kind))
            .or_default()
            .push(j.clone());
    }
    groups.values().filter_map(|g| aggregate_item(g)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Nominal,
    Ordinal,
    Interval,
}

/// Units (rows) by raters (columns); `None` marks a missing rating.
pub type RatingMatrix = Vec<Vec<Option<f64>>>;

/// Krippendorff's alpha through the coincidence matrix.
///
/// Units with fewer than two ratings are not pairable and are ignored.
pub fn krippendorff_alpha(matrix: &[Vec<Option<f64>>], metric: Metric) -> Result<f64, StatsError> {
    let units: Vec<Vec<f64>> = matrix
        .iter()
        .map(|row| row.iter().flatten().copied().collect::<Vec<f64>>())
        .filter(|v| v.len() >= 2)
        .collect();
    let mut values: Vec<f64> = units.iter().flatten().copied().collect();
    if values.len() < 2 {
        return Err(StatsError::NoPairableValues);
    }
    values.sort_by(f64::total_cmp);
    values.dedup();
    let idx = |v: f64| values.binary_search_by(|p| p.total_cmp(&v)).expect("value present");
    let k = values.len();

    let mut coincidence = vec![vec![0.0f64; k]; k];
    for unit in &units {
        let weight = 1.0 / (unit.len() - 1) as f64;
        let mut counts = vec![0.0f64; k];
        for &v in unit {
            counts[idx(v)] += 1.0;
        }
        for c in 0..k {
            if counts[c] == 0.0 {
                continue;
            }
            for d in 0..k {
                let pairs = if c == d {
                    counts[c] * (counts[c] - 1.0)
                } else {
                    counts[c] * counts[d]
                };
                coincidence[c][d] += pairs * weight;
            }
        }
    }
    let marginals: Vec<f64> = coincidence.iter().map(|row| row.iter().sum()).collect();
    let n: f64 = marginals.iter().sum();

    let delta = distance_table(&values, &marginals, metric);
    let mut observed = 0.0;
    let mut expected = 0.0;
    for c in 0..k {
        for d in 0..k {
            observed += coincidence[c][d] * delta[c][d];
            expected += marginals[c] * marginals[d] * delta[c][d];
        }
    }
    observed /= n;
    expected /= n * (n - 1.0);
    if expected == 0.0 {
        return Err(StatsError::NoExpectedDisagreement);
    }
    Ok(1.0 - observed / expected)
}

/// Squared distances between the sorted distinct `values`.
fn distance_table(values: &[f64], marginals: &[f64], metric: Metric) -> Vec<Vec<f64>> {
    let k = values.len();
    let mut delta = vec![vec![0.0; k]; k];
    for c in 0..k {
        for d in 0..k {
            delta[c][d] = match metric {
                Metric::Nominal => (c != d) as u8 as f64,
                Metric::Interval => (values[c] - values[d]).powi(2),
                Metric::Ordinal => {
                    let (lo, hi) = (c.min(d), c.max(d));
                    let between: f64 = marginals[lo..=hi].iter().sum();
                    (between - (marginals[c] + marginals[d]) / 2.0).powi(2)
                }
            };
        }
    }
    delta
}

/// Fraction of triple-rated units in which some label was chosen at least
/// twice. Units without exactly three ratings are skipped; `None` when no
/// unit qualifies.
pub fn majority_ratio(matrix: &[Vec<Option<f64>>]) -> Option<f64> {
    let mut eligible = 0usize;
    let mut majority = 0usize;
    for row in matrix {
        let v: Vec<f64> = row.iter().flatten().copied().collect();
        if v.len() != 3 {
            continue;
        }
        eligible += 1;
        if v[0] == v[1] || v[0] == v[2] || v[1] == v[2] {
            majority += 1;
        }
    }
    (eligible > 0).then(|| majority as f64 / eligible as f64)
}

/// Significance marks: `**` for p < 0.01, `*` for p < 0.05.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Stars {
    #[default]
    #[serde(rename = "")]
    None,
    #[serde(rename = "*")]
    One,
    #[serde(rename = "**")]
    Two,
}

impl Stars {
    pub fn from_p(p: f64) -> Stars {
        if p < 0.01 {
            Stars::Two
        } else if p < 0.05 {
            Stars::One
        } else {
            Stars::None
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Stars::None => "",
            Stars::One => "*",
            Stars::Two => "**",
        }
    }
}

impl fmt::Display for Stars {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// `min(W+, W-)`.
    pub w_statistic: f64,
    pub n_effective: usize,
    pub p_value: f64,
    pub stars: Stars,
    /// Whether `p_value` came from exact enumeration.
    pub exact: bool,
}

/// Differences below this magnitude count as zero; ties between absolute
/// differences use the same tolerance.
pub const ZERO_TOLERANCE: f64 = 1e-12;

/// Largest effective sample size evaluated exactly.
pub const EXACT_MAX_N: usize = 25;

/// Average ranks of `abs_diffs` (ascending), with tie groups merged.
/// Returns doubled ranks so that half ranks stay integral, plus tie sizes.
fn doubled_ranks(abs_diffs: &[f64]) -> (Vec<u64>, Vec<usize>) {
    let n = abs_diffs.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| abs_diffs[a].total_cmp(&abs_diffs[b]));
    let mut ranks = vec![0u64; n];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && (abs_diffs[order[j + 1]] - abs_diffs[order[i]]).abs() <= ZERO_TOLERANCE {
            j += 1;
        }
        // ranks i+1 ..= j+1 averaged, doubled
        let doubled = (i + 1 + j + 1) as u64;
        for &o in &order[i..=j] {
            ranks[o] = doubled;
        }
        ties.push(j - i + 1);
        i = j + 1;
    }
    (ranks, ties)
}

/// Two-sided Wilcoxon signed-rank test on `(baseline, modified)` pairs.
///
/// Zero differences are dropped and tied magnitudes share average ranks.
/// For up to [`EXACT_MAX_N`] non-zero differences the p-value is exact (the
/// full sign-flip distribution of W+); above that a normal approximation with
/// continuity and tie correction is used. All-zero input gives p = 1.
pub fn wilcoxon_signed_rank(pairs: &[(f64, f64)]) -> WilcoxonResult {
    let diffs: Vec<f64> = pairs
        .iter()
        .map(|(b, m)| m - b)
        .filter(|d| d.abs() > ZERO_TOLERANCE)
        .collect();
    let n = diffs.len();
    if n == 0 {
        return WilcoxonResult {
            w_statistic: 0.0,
            n_effective: 0,
            p_value: 1.0,
            stars: Stars::None,
            exact: true,
        };
    }
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let (ranks, ties) = doubled_ranks(&abs);
    let total: u64 = ranks.iter().sum();
    let w_plus: u64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| *r)
        .sum();
    let w_minus = total - w_plus;

    let (p, exact) = if n <= EXACT_MAX_N {
        (exact_p(&ranks, w_plus), true)
    } else {
        (normal_p(n, &ties, w_plus as f64 / 2.0), false)
    };
    let p = p.clamp(f64::MIN_POSITIVE, 1.0);
    WilcoxonResult {
        w_statistic: w_plus.min(w_minus) as f64 / 2.0,
        n_effective: n,
        p_value: p,
        stars: Stars::from_p(p),
        exact,
    }
}

/// Exact two-sided p for doubled ranks: `2 * min(P(W+ <= w), P(W+ >= w))`.
fn exact_p(doubled_ranks: &[u64], w_plus: u64) -> f64 {
    let total: u64 = doubled_ranks.iter().sum();
    // counts[s]: number of sign assignments whose doubled W+ equals s
    let mut counts = vec![0.0f64; total as usize + 1];
    counts[0] = 1.0;
    let mut reach = 0usize;
    for &r in doubled_ranks {
        let r = r as usize;
        for s in (0..=reach).rev() {
            if counts[s] != 0.0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let all: f64 = 2f64.powi(doubled_ranks.len() as i32);
    let w = w_plus as usize;
    let lower: f64 = counts[..=w].iter().sum();
    let upper: f64 = counts[w..].iter().sum();
    (2.0 * lower.min(upper) / all).min(1.0)
}

/// Normal approximation with continuity correction and tie-corrected
/// variance. `ties` lists the sizes of the tie groups among |differences|.
pub fn normal_p(n: usize, ties: &[usize], w_plus: f64) -> f64 {
    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let tie_term: f64 = ties.iter().map(|&t| (t as f64).powi(3) - t as f64).sum::<f64>() / 48.0;
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term;
    let z = ((w_plus - mean).abs() - 0.5).max(0.0) / var.sqrt();
    statrs::function::erf::erfc(z / std::f64::consts::SQRT_2).min(1.0)
}

/// Normal-approximation p for a set of pairs regardless of size; used to
/// compare the two routes.
pub fn wilcoxon_normal_approximation(pairs: &[(f64, f64)]) -> Option<f64> {
    let diffs: Vec<f64> = pairs
        .iter()
        .map(|(b, m)| m - b)
        .filter(|d| d.abs() > ZERO_TOLERANCE)
        .collect();
    if diffs.is_empty() {
        return None;
    }
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let (ranks, ties) = doubled_ranks(&abs);
    let w_plus: u64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| *r)
        .sum();
    Some(normal_p(diffs.len(), &ties, w_plus as f64 / 2.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Slice {
    Short,
    Long,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MedianSplit {
    pub threshold: f64,
    pub labels: Vec<Slice>,
    /// One of the slices is empty.
    pub degenerate: bool,
}

/// Splits at the median: a value is `Short` iff it is `<=` the median.
pub fn median_split(values: &[f64]) -> Result<MedianSplit, StatsError> {
    if values.len() < 2 {
        return Err(StatsError::TooFewValues(values.len()));
    }
    let threshold = median(values).expect("non-empty");
    let labels: Vec<Slice> = values
        .iter()
        .map(|&v| if v <= threshold { Slice::Short } else { Slice::Long })
        .collect();
    let distinct: BTreeSet<Slice> = labels.iter().copied().collect();
    let degenerate = distinct.len() < 2;
    if degenerate {
        log::warn!("median split at {threshold} leaves one slice empty");
    }
    Ok(MedianSplit {
        threshold,
        labels,
        degenerate,
    })
}
