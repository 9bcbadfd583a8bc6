use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use super::metrics::{median, SiteMetrics};
use super::wilcoxon::{wilcoxon_signed_rank, WilcoxonResult};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Rmse,
    Corr,
    Nse,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Rmse, Metric::Corr, Metric::Nse];

    pub fn higher_is_better(self) -> bool {
        !matches!(self, Metric::Rmse)
    }

    pub fn of(self, m: &SiteMetrics) -> Option<f64> {
        match self {
            Metric::Rmse => m.rmse,
            Metric::Corr => m.corr,
            Metric::Nse => m.nse,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::Rmse => "rmse",
            Metric::Corr => "corr",
            Metric::Nse => "nse",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == s)
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SitePair {
    pub site_id: String,
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedComparison {
    pub metric: Metric,
    pub pairs: Vec<SitePair>,
    /// Common sites dropped because the metric is undefined for either model.
    pub excluded: usize,
    pub test: WilcoxonResult,
    pub median_a: f64,
    pub median_b: f64,
    /// Percentage of pairs where model A is strictly better.
    pub pct_better: f64,
}

impl PairedComparison {
    pub fn n(&self) -> usize {
        self.pairs.len()
    }

    pub fn p_value(&self) -> f64 {
        self.test.p_value
    }
}

/// Pairs the two models' per-site metrics by site id (in `a`'s order) and
/// tests them.
pub fn compare_models(a: &[SiteMetrics], b: &[SiteMetrics], metric: Metric) -> Result<PairedComparison> {
    let by_id: BTreeMap<&str, &SiteMetrics> = b.iter().map(|m| (m.site_id.as_str(), m)).collect();
    let mut pairs = Vec::new();
    let mut excluded = 0;
    for ma in a {
        let Some(mb) = by_id.get(ma.site_id.as_str()) else {
            continue;
        };
        match (metric.of(ma), metric.of(mb)) {
            (Some(x), Some(y)) => pairs.push(SitePair {
                site_id: ma.site_id.clone(),
                a: x,
                b: y,
            }),
            _ => excluded += 1,
        }
    }
    if pairs.is_empty() {
        return Err(Error::EmptyComparison(metric.to_string()));
    }
    let va: Vec<f64> = pairs.iter().map(|p| p.a).collect();
    let vb: Vec<f64> = pairs.iter().map(|p| p.b).collect();
    let test = wilcoxon_signed_rank(&va, &vb)?;
    let better = pairs
        .iter()
        .filter(|p| {
            if metric.higher_is_better() {
                p.a > p.b
            } else {
                p.a < p.b
            }
        })
        .count();
    Ok(PairedComparison {
        metric,
        excluded,
        test,
        median_a: median(&va).expect("non-empty"),
        median_b: median(&vb).expect("non-empty"),
        pct_better: 100.0 * better as f64 / pairs.len() as f64,
        pairs,
    })
}

/// Comparison over the concatenation of several groups' site metrics.
pub fn compare_pooled(groups: &[(&[SiteMetrics], &[SiteMetrics])], metric: Metric) -> Result<PairedComparison> {
    let a: Vec<SiteMetrics> = groups.iter().flat_map(|(a, _)| a.iter().cloned()).collect();
    let b: Vec<SiteMetrics> = groups.iter().flat_map(|(_, b)| b.iter().cloned()).collect();
    compare_models(&a, &b, metric)
}
