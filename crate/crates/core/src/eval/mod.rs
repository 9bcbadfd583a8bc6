//! Per-site skill metrics and paired model comparisons.

mod compare;
mod metrics;
mod wilcoxon;

pub use compare::{compare_models, compare_pooled, Metric, PairedComparison, SitePair};
pub use metrics::{median, nse, pearson_corr, quantile, rmse, site_metrics, SiteMetrics, Undefined};
pub use wilcoxon::{
    exact_distribution, signed_ranks, wilcoxon_signed_rank, wilcoxon_with_threshold, Method, WilcoxonResult,
    EXACT_MAX_N,
};
