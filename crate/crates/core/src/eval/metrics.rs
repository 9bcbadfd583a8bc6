use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::region::RegionCode;

/// Why a metric has no value for a site.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Undefined {
    TooFewObservations,
    ConstantSeries,
}

fn observed<'a>(obs: &'a [Option<f64>], pred: &'a [f64]) -> impl Iterator<Item = (f64, f64)> + Clone + 'a {
    obs.iter().zip(pred).filter_map(|(o, p)| o.map(|o| (o, *p)))
}

fn count_and_means(obs: &[Option<f64>], pred: &[f64]) -> (usize, f64, f64) {
    let (n, so, sp) = observed(obs, pred).fold((0usize, 0.0, 0.0), |(n, a, b), (o, p)| (n + 1, a + o, b + p));
    if n == 0 {
        (0, 0.0, 0.0)
    } else {
        (n, so / n as f64, sp / n as f64)
    }
}

pub fn rmse(obs: &[Option<f64>], pred: &[f64]) -> Result<f64, Undefined> {
    let (n, sse) = observed(obs, pred).fold((0usize, 0.0), |(n, s), (o, p)| (n + 1, s + (p - o) * (p - o)));
    if n == 0 {
        return Err(Undefined::TooFewObservations);
    }
    Ok(libm::sqrt(sse / n as f64))
}

pub fn pearson_corr(obs: &[Option<f64>], pred: &[f64]) -> Result<f64, Undefined> {
    let (n, mo, mp) = count_and_means(obs, pred);
    if n < 2 {
        return Err(Undefined::TooFewObservations);
    }
    let (mut sop, mut soo, mut spp) = (0.0, 0.0, 0.0);
    for (o, p) in observed(obs, pred) {
        sop += (o - mo) * (p - mp);
        soo += (o - mo) * (o - mo);
        spp += (p - mp) * (p - mp);
    }
    if soo == 0.0 || spp == 0.0 {
        return Err(Undefined::ConstantSeries);
    }
    Ok((sop / libm::sqrt(soo * spp)).clamp(-1.0, 1.0))
}

pub fn nse(obs: &[Option<f64>], pred: &[f64]) -> Result<f64, Undefined> {
    let (n, mo, _) = count_and_means(obs, pred);
    if n < 2 {
        return Err(Undefined::TooFewObservations);
    }
    let (mut sse, mut sst) = (0.0, 0.0);
    for (o, p) in observed(obs, pred) {
        sse += (o - p) * (o - p);
        sst += (o - mo) * (o - mo);
    }
    if sst == 0.0 {
        return Err(Undefined::ConstantSeries);
    }
    Ok(1.0 - sse / sst)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteMetrics {
    pub site_id: String,
    pub region: RegionCode,
    pub rmse: Option<f64>,
    pub corr: Option<f64>,
    pub nse: Option<f64>,
    pub n_obs: usize,
}

pub fn site_metrics(site_id: &str, region: &RegionCode, obs: &[Option<f64>], pred: &[f64]) -> SiteMetrics {
    SiteMetrics {
        site_id: site_id.into(),
        region: region.clone(),
        rmse: rmse(obs, pred).ok(),
        corr: pearson_corr(obs, pred).ok(),
        nse: nse(obs, pred).ok(),
        n_obs: obs.iter().zip(pred).filter(|(o, _)| o.is_some()).count(),
    }
}

/// Linear-interpolation quantile (`q` in `[0,1]`) of a non-empty sample.
pub fn quantile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v: Vec<f64> = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = libm::floor(pos) as usize;
    let hi = (lo + 1).min(v.len() - 1);
    let frac = pos - lo as f64;
    Some(if frac == 0.0 {
        v[lo]
    } else {
        v[lo] + (v[hi] - v[lo]) * frac
    })
}

pub fn median(values: &[f64]) -> Option<f64> {
    quantile(values, 0.5)
}
