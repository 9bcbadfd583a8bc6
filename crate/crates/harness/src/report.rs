//! Significance tables and box-plot data.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use synergy_core::eval::{quantile, Metric, PairedComparison};

use crate::error::{HarnessError, Result};
use crate::io;
use crate::suite::{COMPARISONS, MANIFEST, PAIRS};

/// Region label of pooled rows.
pub const ALL: &str = "All";

const COMPARISON_HEADER: [&str; 8] = [
    "region",
    "comparison",
    "metric",
    "p_value",
    "median_a",
    "median_b",
    "pct_better",
    "n",
];
const PAIR_HEADER: [&str; 6] = ["region", "comparison", "metric", "site_id", "a", "b"];
const BOX_HEADER: [&str; 9] = ["region", "metric", "model", "n", "min", "q25", "median", "q75", "max"];

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub region: String,
    /// `<a>_vs_<b>`.
    pub comparison: String,
    pub metric: Metric,
    pub p_value: f64,
    pub median_a: f64,
    pub median_b: f64,
    /// Percentage of sites where `a` beats `b`.
    pub pct_better: f64,
    pub n: usize,
}

impl ComparisonRow {
    pub fn from_comparison(region: &str, comparison: &str, c: &PairedComparison) -> Self {
        Self {
            region: region.to_string(),
            comparison: comparison.to_string(),
            metric: c.metric,
            p_value: c.p_value(),
            median_a: c.median_a,
            median_b: c.median_b,
            pct_better: c.pct_better,
            n: c.n(),
        }
    }

    pub fn models(&self) -> (&str, &str) {
        split_models(&self.comparison)
    }

    fn cells(&self) -> Vec<String> {
        vec![
            self.region.clone(),
            self.comparison.clone(),
            self.metric.name().to_string(),
            self.p_value.to_string(),
            self.median_a.to_string(),
            self.median_b.to_string(),
            self.pct_better.to_string(),
            self.n.to_string(),
        ]
    }
}

fn split_models(comparison: &str) -> (&str, &str) {
    comparison.split_once("_vs_").unwrap_or((comparison, ""))
}

/// One paired site value underlying a comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct PairRow {
    pub region: String,
    pub comparison: String,
    pub metric: Metric,
    pub site_id: String,
    pub a: f64,
    pub b: f64,
}

pub fn comparisons_csv<'a>(rows: impl IntoIterator<Item = &'a ComparisonRow>) -> String {
    let rows: Vec<Vec<String>> = rows.into_iter().map(ComparisonRow::cells).collect();
    io::rows_csv(&COMPARISON_HEADER, &rows)
}

pub fn pairs_csv(rows: &[PairRow]) -> String {
    let rows: Vec<Vec<String>> = rows
        .iter()
        .map(|p| {
            vec![
                p.region.clone(),
                p.comparison.clone(),
                p.metric.name().to_string(),
                p.site_id.clone(),
                p.a.to_string(),
                p.b.to_string(),
            ]
        })
        .collect();
    io::rows_csv(&PAIR_HEADER, &rows)
}

fn parse_metric(path: &Path, line: u64, s: &str) -> Result<Metric> {
    Metric::parse(s).ok_or_else(|| HarnessError::format(path, line, format!("unknown metric `{s}`")))
}

fn parse_num<T: std::str::FromStr>(path: &Path, line: u64, s: &str) -> Result<T> {
    s.parse()
        .map_err(|_| HarnessError::format(path, line, format!("`{s}` is not a number")))
}

pub fn load_comparisons(path: &Path) -> Result<Vec<ComparisonRow>> {
    io::load_rows(path, &COMPARISON_HEADER)?
        .into_iter()
        .map(|(l, r)| {
            Ok(ComparisonRow {
                region: r[0].clone(),
                comparison: r[1].clone(),
                metric: parse_metric(path, l, &r[2])?,
                p_value: parse_num(path, l, &r[3])?,
                median_a: parse_num(path, l, &r[4])?,
                median_b: parse_num(path, l, &r[5])?,
                pct_better: parse_num(path, l, &r[6])?,
                n: parse_num(path, l, &r[7])?,
            })
        })
        .collect()
}

pub fn load_pairs(path: &Path) -> Result<Vec<PairRow>> {
    io::load_rows(path, &PAIR_HEADER)?
        .into_iter()
        .map(|(l, r)| {
            Ok(PairRow {
                region: r[0].clone(),
                comparison: r[1].clone(),
                metric: parse_metric(path, l, &r[2])?,
                site_id: r[3].clone(),
                a: parse_num(path, l, &r[4])?,
                b: parse_num(path, l, &r[5])?,
            })
        })
        .collect()
}

/// Significance table with one row per (comparison, region) and a column
/// group per metric.
#[derive(Debug, Clone, PartialEq)]
pub struct WideTable {
    pub metrics: Vec<Metric>,
    pub rows: Vec<WideRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WideRow {
    pub region: String,
    pub comparison: String,
    /// Indexed like [`WideTable::metrics`].
    pub cells: Vec<Option<ComparisonRow>>,
}

/// Groups rows by comparison then region (first appearance order), with
/// pooled rows last within each comparison.
pub fn wide_table(rows: &[ComparisonRow]) -> WideTable {
    let mut metrics: Vec<Metric> = Vec::new();
    let mut keys: Vec<(String, String)> = Vec::new();
    let mut cells: BTreeMap<(String, String, usize), ComparisonRow> = BTreeMap::new();
    for r in rows {
        let mi = match metrics.iter().position(|m| *m == r.metric) {
            Some(i) => i,
            None => {
                metrics.push(r.metric);
                metrics.len() - 1
            }
        };
        let key = (r.comparison.clone(), r.region.clone());
        if !keys.contains(&key) {
            keys.push(key);
        }
        cells.insert((r.comparison.clone(), r.region.clone(), mi), r.clone());
    }
    let mut order: Vec<String> = Vec::new();
    for (c, _) in &keys {
        if !order.contains(c) {
            order.push(c.clone());
        }
    }
    keys.sort_by_key(|(c, r)| (order.iter().position(|o| o == c), r == ALL));
    let rows = keys
        .into_iter()
        .map(|(comparison, region)| WideRow {
            cells: (0..metrics.len())
                .map(|mi| cells.get(&(comparison.clone(), region.clone(), mi)).cloned())
                .collect(),
            region,
            comparison,
        })
        .collect();
    WideTable { metrics, rows }
}

pub fn render_csv(t: &WideTable) -> String {
    let mut header = vec!["region".to_string(), "comparison".to_string()];
    for m in &t.metrics {
        let m = m.name();
        header.extend([format!("{m}_a"), format!("{m}_b"), format!("p_{m}"), format!("n_{m}")]);
    }
    let rows: Vec<Vec<String>> = t
        .rows
        .iter()
        .map(|r| {
            let mut row = vec![r.region.clone(), r.comparison.clone()];
            for c in &r.cells {
                match c {
                    Some(c) => row.extend([
                        c.median_a.to_string(),
                        c.median_b.to_string(),
                        c.p_value.to_string(),
                        c.n.to_string(),
                    ]),
                    None => row.extend(std::iter::repeat_n(io::MISSING.to_string(), 4)),
                }
            }
            row
        })
        .collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    io::rows_csv(&header, &rows)
}

/// Aligned plain-text rendering.
pub fn render_text(t: &WideTable) -> String {
    let mut header = vec!["region".to_string(), "comparison".to_string()];
    for m in &t.metrics {
        let m = m.name();
        header.extend([format!("{m} a"), format!("{m} b"), format!("p {m}")]);
    }
    header.push("N".into());
    let mut grid = vec![header];
    for r in &t.rows {
        let mut row = vec![r.region.clone(), r.comparison.clone()];
        for c in &r.cells {
            match c {
                Some(c) => row.extend([
                    format!("{:.4}", c.median_a),
                    format!("{:.4}", c.median_b),
                    format!("{:.2e}", c.p_value),
                ]),
                None => row.extend(std::iter::repeat_n("-".to_string(), 3)),
            }
        }
        let n = r.cells.iter().flatten().map(|c| c.n).max().unwrap_or(0);
        row.push(n.to_string());
        grid.push(row);
    }
    let widths: Vec<usize> = (0..grid[0].len())
        .map(|i| grid.iter().map(|r| r[i].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in &grid {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (cell, w))| {
                if i < 2 {
                    format!("{cell:<w$}")
                } else {
                    format!("{cell:>w$}")
                }
            })
            .collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
    }
    out
}

/// Quantile summary of one model's values in one comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxStats {
    pub region: String,
    pub metric: Metric,
    pub model: String,
    pub n: usize,
    /// min, q25, median, q75, max.
    pub q: [f64; 5],
}

/// Box-plot data per comparison name.
pub fn box_stats(pairs: &[PairRow]) -> BTreeMap<String, Vec<BoxStats>> {
    // (comparison, region, metric) -> paired values of model a and b
    type Group = ((String, String, Metric), (Vec<f64>, Vec<f64>));
    let mut groups: Vec<Group> = Vec::new();
    for p in pairs {
        let key = (p.comparison.clone(), p.region.clone(), p.metric);
        let i = match groups.iter().position(|(k, _)| *k == key) {
            Some(i) => i,
            None => {
                groups.push((key, (Vec::new(), Vec::new())));
                groups.len() - 1
            }
        };
        groups[i].1 .0.push(p.a);
        groups[i].1 .1.push(p.b);
    }
    let mut out: BTreeMap<String, Vec<BoxStats>> = BTreeMap::new();
    for ((comparison, region, metric), (a, b)) in groups {
        let (ma, mb) = split_models(&comparison);
        let entry = out.entry(comparison.clone()).or_default();
        for (model, vals) in [(ma, a), (mb, b)] {
            let q = [0.0, 0.25, 0.5, 0.75, 1.0].map(|p| quantile(&vals, p).expect("non-empty group"));
            entry.push(BoxStats {
                region: region.clone(),
                metric,
                model: model.to_string(),
                n: vals.len(),
                q,
            });
        }
    }
    out
}

pub fn box_csv(rows: &[BoxStats]) -> String {
    let rows: Vec<Vec<String>> = rows
        .iter()
        .map(|b| {
            let mut r = vec![
                b.region.clone(),
                b.metric.name().to_string(),
                b.model.clone(),
                b.n.to_string(),
            ];
            r.extend(b.q.iter().map(f64::to_string));
            r
        })
        .collect();
    io::rows_csv(&BOX_HEADER, &rows)
}

fn find_files(dir: &Path, name: &str, out: &mut Vec<PathBuf>) -> Result<()> {
    let entries = fs::read_dir(dir).map_err(|e| HarnessError::io(dir, e))?;
    for entry in entries {
        let path = entry.map_err(|e| HarnessError::io(dir, e))?.path();
        if path.is_dir() {
            find_files(&path, name, out)?;
        } else if path.file_name().is_some_and(|n| n == name) {
            out.push(path);
        }
    }
    Ok(())
}

fn files(dir: &Path, name: &str) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    find_files(dir, name, &mut out)?;
    out.sort();
    Ok(out)
}

pub struct Report {
    pub table: WideTable,
    pub text: String,
    /// Rows dropped because an earlier file already held the same key with
    /// different values.
    pub conflicts: usize,
}

/// Merges every comparison and pair file under `runs` into `out`:
/// `table.csv`, `table.txt` and `boxplot_<comparison>.csv`.
pub fn report(runs: &Path, out: &Path) -> Result<Report> {
    if files(runs, MANIFEST)?.is_empty() {
        return Err(HarnessError::Config(format!("no {MANIFEST} under {}", runs.display())));
    }
    let mut rows: Vec<ComparisonRow> = Vec::new();
    let mut conflicts = 0;
    for path in files(runs, COMPARISONS)? {
        for r in load_comparisons(&path)? {
            match rows
                .iter()
                .find(|x| x.region == r.region && x.comparison == r.comparison && x.metric == r.metric)
            {
                Some(x) if *x != r => conflicts += 1,
                Some(_) => {}
                None => rows.push(r),
            }
        }
    }
    let mut pairs: Vec<PairRow> = Vec::new();
    let mut seen: HashSet<(String, String, Metric, String)> = HashSet::new();
    for path in files(runs, PAIRS)? {
        for p in load_pairs(&path)? {
            if seen.insert((p.region.clone(), p.comparison.clone(), p.metric, p.site_id.clone())) {
                pairs.push(p);
            }
        }
    }
    let table = wide_table(&rows);
    let text = render_text(&table);
    io::write_text(&out.join("table.csv"), &render_csv(&table))?;
    io::write_text(&out.join("table.txt"), &text)?;
    for (comparison, stats) in box_stats(&pairs) {
        io::write_text(&out.join(format!("boxplot_{comparison}.csv")), &box_csv(&stats))?;
    }
    Ok(Report { table, text, conflicts })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(region: &str, comparison: &str, metric: Metric, p: f64) -> ComparisonRow {
        ComparisonRow {
            region: region.into(),
            comparison: comparison.into(),
            metric,
            p_value: p,
            median_a: 0.1,
            median_b: 0.2,
            pct_better: 75.0,
            n: 12,
        }
    }

    #[test]
    fn wide_table_orders_pooled_last() {
        let rows = [
            row(ALL, "global_vs_local", Metric::Rmse, 0.01),
            row("A", "global_vs_local", Metric::Rmse, 0.02),
            row("A", "global_vs_local", Metric::Corr, 0.03),
            row("B", "global_vs_local", Metric::Rmse, 0.04),
        ];
        let t = wide_table(&rows);
        assert_eq!(t.metrics, [Metric::Rmse, Metric::Corr]);
        let regions: Vec<&str> = t.rows.iter().map(|r| r.region.as_str()).collect();
        assert_eq!(regions, ["A", "B", ALL]);
        assert!(t.rows[1].cells[1].is_none());
        let text = render_text(&t);
        assert_eq!(text.lines().count(), 4);
        assert!(text.lines().next().unwrap().starts_with("region"));
    }

    #[test]
    fn box_medians_match_inputs() {
        let pairs: Vec<PairRow> = [0.3, 0.1, 0.2]
            .iter()
            .enumerate()
            .map(|(i, v)| PairRow {
                region: "A".into(),
                comparison: "global_vs_local".into(),
                metric: Metric::Rmse,
                site_id: format!("s{i}"),
                a: *v,
                b: v * 2.0,
            })
            .collect();
        let b = &box_stats(&pairs)["global_vs_local"];
        assert_eq!(b[0].model, "global");
        assert_eq!([b[0].q[0], b[0].q[2], b[0].q[4]], [0.1, 0.2, 0.3]);
        assert!((b[0].q[1] - 0.15).abs() < 1e-12 && (b[0].q[3] - 0.25).abs() < 1e-12);
        assert_eq!(b[1].model, "local");
        assert_eq!(b[1].q[2], 0.4);
    }
}
