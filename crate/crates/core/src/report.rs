//! Baseline-vs-modified delta tables, median-split slices and rendering.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{Feature, ItemFeatures};
use crate::prosody::ModificationKind;
use crate::stats::{self, Dimension, ItemScore, Slice, Stars};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ReportError {
    #[error("slice on {feature} needs at least 2 items with features, got {got}")]
    TooFewItems { feature: &'static str, got: usize },
    #[error("unknown report format {0:?} (expected md or csv)")]
    UnknownFormat(String),
    #[error("unknown delta aggregation {0:?} (expected median or mean)")]
    UnknownAggregation(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeltaAgg {
    #[default]
    Median,
    Mean,
}

impl FromStr for DeltaAgg {
    type Err = ReportError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "median" => Ok(DeltaAgg::Median),
            "mean" => Ok(DeltaAgg::Mean),
            other => Err(ReportError::UnknownAggregation(other.into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaRow {
    pub kind: ModificationKind,
    pub dimension: Dimension,
    /// Aggregated per-item `modified - baseline`.
    pub delta: f64,
    pub stars: Stars,
    pub p_value: f64,
    pub n_items: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaTable {
    pub rows: Vec<DeltaRow>,
    /// Modified (item, kind) scores dropped for lack of a baseline score.
    pub missing_baseline: usize,
}

/// One row from explicit `(baseline, modified)` pairs. `None` for no pairs.
pub fn delta_row(
    kind: ModificationKind,
    dimension: Dimension,
    pairs: &[(f64, f64)],
    agg: DeltaAgg,
) -> Option<DeltaRow> {
    if pairs.is_empty() {
        return None;
    }
    let diffs: Vec<f64> = pairs.iter().map(|(b, m)| m - b).collect();
    let delta = match agg {
        DeltaAgg::Median => stats::median(&diffs).expect("non-empty"),
        DeltaAgg::Mean => diffs.iter().sum::<f64>() / diffs.len() as f64,
    };
    let w = stats::wilcoxon_signed_rank(pairs);
    Some(DeltaRow {
        kind,
        dimension,
        // avoid printing -0
        delta: if delta == 0.0 { 0.0 } else { delta },
        stars: w.stars,
        p_value: w.p_value,
        n_items: pairs.len(),
    })
}

/// Per (kind, dimension) delta of each modified audio against the baseline
/// audio of the same item.
pub fn delta_table(scores: &[ItemScore], agg: DeltaAgg) -> DeltaTable {
    let baseline: HashMap<&str, &ItemScore> = scores
        .iter()
        .filter(|s| s.kind == ModificationKind::Baseline)
        .map(|s| (s.item_id.as_str(), s))
        .collect();
    let mut by_kind: BTreeMap<ModificationKind, Vec<(&ItemScore, &ItemScore)>> = BTreeMap::new();
    let mut missing = 0;
    for s in scores.iter().filter(|s| s.kind != ModificationKind::Baseline) {
        match baseline.get(s.item_id.as_str()) {
            Some(b) => by_kind.entry(s.kind).or_default().push((b, s)),
            None => missing += 1,
        }
    }
    if missing > 0 {
        log::warn!("{missing} modified item scores have no baseline and were excluded");
    }
    let mut rows = Vec::new();
    for (kind, mut pairs) in by_kind {
        pairs.sort_by(|a, b| a.1.item_id.cmp(&b.1.item_id));
        for dim in Dimension::ALL {
            let values: Vec<(f64, f64)> = pairs.iter().map(|(b, m)| (b.get(dim), m.get(dim))).collect();
            rows.extend(delta_row(kind, dim, &values, agg));
        }
    }
    DeltaTable {
        rows,
        missing_baseline: missing,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceReport {
    pub feature: Feature,
    pub threshold: f64,
    pub rows_short: Vec<DeltaRow>,
    pub rows_long: Vec<DeltaRow>,
    pub items_short: Vec<String>,
    pub items_long: Vec<String>,
    /// Items with scores but no features.
    pub excluded: Vec<String>,
    pub degenerate: bool,
}

/// Median split of the scored items on `feature`, then a delta table per
/// slice. The threshold is taken over all scored items regardless of kind.
pub fn slice_table(
    scores: &[ItemScore],
    features: &BTreeMap<String, ItemFeatures>,
    feature: Feature,
    agg: DeltaAgg,
) -> Result<SliceReport, ReportError> {
    let items: BTreeSet<&str> = scores.iter().map(|s| s.item_id.as_str()).collect();
    let (with, excluded): (Vec<&str>, Vec<&str>) = items.into_iter().partition(|id| features.contains_key(*id));
    let values: Vec<f64> = with.iter().map(|id| features[*id].get(feature) as f64).collect();
    let split = stats::median_split(&values).map_err(|_| ReportError::TooFewItems {
        feature: feature.as_str(),
        got: values.len(),
    })?;
    let slice_of: HashMap<&str, Slice> = with.iter().copied().zip(split.labels.iter().copied()).collect();
    let pick = |want: Slice| -> (Vec<DeltaRow>, Vec<String>) {
        let part: Vec<ItemScore> = scores
            .iter()
            .filter(|s| slice_of.get(s.item_id.as_str()) == Some(&want))
            .cloned()
            .collect();
        let ids: Vec<String> = slice_of
            .iter()
            .filter(|(_, s)| **s == want)
            .map(|(id, _)| id.to_string())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        (delta_table(&part, agg).rows, ids)
    };
    let (rows_short, items_short) = pick(Slice::Short);
    let (rows_long, items_long) = pick(Slice::Long);
    Ok(SliceReport {
        feature,
        threshold: split.threshold,
        rows_short,
        rows_long,
        items_short,
        items_long,
        excluded: excluded.into_iter().map(String::from).collect(),
        degenerate: split.degenerate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    #[serde(rename = "md")]
    Markdown,
    Csv,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Markdown => "md",
            Format::Csv => "csv",
        }
    }
}

impl FromStr for Format {
    type Err = ReportError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "md" | "markdown" => Ok(Format::Markdown),
            "csv" => Ok(Format::Csv),
            other => Err(ReportError::UnknownFormat(other.into())),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.extension())
    }
}

/// `report_{profile}_{scope}.{ext}`, scope being `overall` or a feature name.
pub fn report_file_name(profile: &str, scope: &str, format: Format) -> String {
    format!("report_{profile}_{scope}.{}", format.extension())
}

const COLUMNS: [&str; 5] = ["kind", "dimension", "delta", "stars", "n"];

fn fmt_delta(d: f64) -> String {
    let s = format!("{d:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

fn cells(r: &DeltaRow) -> [String; 5] {
    [
        r.kind.to_string(),
        r.dimension.to_string(),
        fmt_delta(r.delta),
        r.stars.to_string(),
        r.n_items.to_string(),
    ]
}

fn md_table(rows: &[DeltaRow]) -> String {
    let mut out = format!(
        "| {} |\n|{}|\n",
        COLUMNS.join(" | "),
        vec!["---"; COLUMNS.len()].join("|")
    );
    for r in rows {
        out.push_str(&format!("| {} |\n", cells(r).join(" | ")));
    }
    out
}

fn csv_doc(header: &[&str], records: impl Iterator<Item = Vec<String>>) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv");
    for rec in records {
        w.write_record(&rec).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 cells")
}

/// Renders delta rows with columns kind, dimension, delta, stars, n.
pub fn render_report(rows: &[DeltaRow], format: Format) -> String {
    match format {
        Format::Markdown => md_table(rows),
        Format::Csv => csv_doc(&COLUMNS, rows.iter().map(|r| cells(r).to_vec())),
    }
}

/// Renders both slices. CSV gets a leading `slice` column.
pub fn render_slice(report: &SliceReport, format: Format) -> String {
    let name = report.feature.as_str();
    match format {
        Format::Markdown => {
            let mut out = String::new();
            if report.degenerate {
                out.push_str("> warning: degenerate split, one slice is empty\n\n");
            }
            out.push_str(&format!(
                "## short ({name} <= {}, {} items)\n\n",
                report.threshold,
                report.items_short.len()
            ));
            out.push_str(&md_table(&report.rows_short));
            out.push_str(&format!(
                "\n## long ({name} > {}, {} items)\n\n",
                report.threshold,
                report.items_long.len()
            ));
            out.push_str(&md_table(&report.rows_long));
            out
        }
        Format::Csv => {
            let mut header = vec!["slice"];
            header.extend(COLUMNS);
            let tagged = report
                .rows_short
                .iter()
                .map(|r| ("short", r))
                .chain(report.rows_long.iter().map(|r| ("long", r)))
                .map(|(s, r)| {
                    let mut rec = vec![s.to_string()];
                    rec.extend(cells(r));
                    rec
                });
            csv_doc(&header, tagged)
        }
    }
}
