//! Wilcoxon signed-rank test for paired samples.
//!
//! Zero differences are dropped. Ties in `|d|` get average ranks. The
//! statistic is `W = min(W+, W-)`; its two-sided p-value is exact for small
//! samples (the null distribution counts all `2^n` sign assignments) and a
//! tie-corrected normal approximation with continuity correction otherwise.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest effective sample size that uses the exact distribution.
pub const EXACT_MAX_N: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    Normal,
    /// Every difference was zero; the p-value is reported as 1.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    pub p_value: f64,
    pub statistic: f64,
    pub w_plus: f64,
    pub w_minus: f64,
    pub n_effective: usize,
    pub zeros_dropped: usize,
    pub method: Method,
}

impl WilcoxonResult {
    pub fn is_degenerate(&self) -> bool {
        self.method == Method::Degenerate
    }
}

/// Nonzero differences `a - b` with their doubled average ranks (doubling
/// keeps tied ranks integral) and a per-difference sign.
pub fn signed_ranks(a: &[f64], b: &[f64]) -> Result<(Vec<u64>, Vec<bool>, usize)> {
    if a.len() != b.len() {
        return Err(Error::Dimension("paired samples differ in length".into()));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::Contract("paired samples must be finite".into()));
    }
    let mut d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    let zeros = a.len() - d.len();
    d.sort_by(|x, y| x.abs().total_cmp(&y.abs()));
    let mut ranks2 = vec![0u64; d.len()];
    let mut i = 0;
    while i < d.len() {
        let mut j = i;
        while j + 1 < d.len() && d[j + 1].abs() == d[i].abs() {
            j += 1;
        }
        // positions i..=j (0-based) share rank ((i+1)+(j+1))/2
        for r in &mut ranks2[i..=j] {
            *r = (i + j + 2) as u64;
        }
        i = j + 1;
    }
    let positive = d.iter().map(|x| *x > 0.0).collect();
    Ok((ranks2, positive, zeros))
}

/// Number of sign assignments giving each doubled positive-rank sum
/// `0..=sum(ranks2)`.
pub fn exact_distribution(ranks2: &[u64]) -> Vec<u64> {
    let total: u64 = ranks2.iter().sum();
    let mut counts = vec![0u64; total as usize + 1];
    counts[0] = 1;
    let mut reach = 0usize;
    for &r in ranks2 {
        let r = r as usize;
        for s in (0..=reach).rev() {
            if counts[s] > 0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    counts
}

pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<WilcoxonResult> {
    wilcoxon_with_threshold(a, b, EXACT_MAX_N)
}

/// As [`wilcoxon_signed_rank`] with a custom exact/normal crossover.
pub fn wilcoxon_with_threshold(a: &[f64], b: &[f64], exact_max_n: usize) -> Result<WilcoxonResult> {
    let (ranks2, positive, zeros) = signed_ranks(a, b)?;
    let n = ranks2.len();
    if n == 0 {
        return Ok(WilcoxonResult {
            p_value: 1.0,
            statistic: 0.0,
            w_plus: 0.0,
            w_minus: 0.0,
            n_effective: 0,
            zeros_dropped: zeros,
            method: Method::Degenerate,
        });
    }
    let total2: u64 = ranks2.iter().sum();
    let plus2: u64 = ranks2.iter().zip(&positive).filter(|(_, p)| **p).map(|(r, _)| r).sum();
    let minus2 = total2 - plus2;
    let w2 = plus2.min(minus2);
    let (p, method) = if n <= exact_max_n {
        let counts = exact_distribution(&ranks2);
        let tail: u64 = counts[..=w2 as usize].iter().sum();
        let p = 2.0 * tail as f64 / libm::pow(2.0, n as f64);
        (p.min(1.0), Method::Exact)
    } else {
        (normal_p(&ranks2, w2 as f64 / 2.0), Method::Normal)
    };
    Ok(WilcoxonResult {
        p_value: p,
        statistic: w2 as f64 / 2.0,
        w_plus: plus2 as f64 / 2.0,
        w_minus: minus2 as f64 / 2.0,
        n_effective: n,
        zeros_dropped: zeros,
        method,
    })
}

fn normal_p(ranks2: &[u64], w: f64) -> f64 {
    let n = ranks2.len() as f64;
    let mean = n * (n + 1.0) / 4.0;
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < ranks2.len() {
        let j = ranks2[i..].iter().take_while(|r| **r == ranks2[i]).count();
        let t = j as f64;
        tie_term += t * t * t - t;
        i += j;
    }
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    if var <= 0.0 {
        return 1.0;
    }
    let z = ((w - mean).abs() - 0.5).max(0.0) / libm::sqrt(var);
    libm::erfc(z / core::f64::consts::SQRT_2).min(1.0)
}
