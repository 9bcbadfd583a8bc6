//! Sites and datasets.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::ops::Range;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::region::RegionCode;
use crate::{Error, Result};

/// One prediction unit: static attributes, a complete forcing matrix
/// (time-major, `T x F`) and a target series with gaps.
#[derive(Debug, Clone, PartialEq)]
pub struct Site {
    pub id: String,
    pub region: RegionCode,
    pub static_attrs: Vec<f64>,
    pub forcing: Vec<f64>,
    pub target: Vec<Option<f64>>,
}

impl Site {
    pub fn n_time(&self) -> usize {
        self.target.len()
    }

    pub fn n_features(&self) -> usize {
        if self.target.is_empty() {
            0
        } else {
            self.forcing.len() / self.target.len()
        }
    }

    pub fn forcing_at(&self, t: usize) -> &[f64] {
        let f = self.n_features();
        &self.forcing[t * f..(t + 1) * f]
    }

    pub fn n_observed(&self) -> usize {
        self.target.iter().filter(|v| v.is_some()).count()
    }

    fn slice_time(&self, r: Range<usize>) -> Site {
        let f = self.n_features();
        Site {
            id: self.id.clone(),
            region: self.region.clone(),
            static_attrs: self.static_attrs.clone(),
            forcing: self.forcing[r.start * f..r.end * f].to_vec(),
            target: self.target[r].to_vec(),
        }
    }
}

/// Half-open date interval `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateRange {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl DateRange {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Result<Self> {
        if end <= start {
            return Err(Error::Config(format!("empty date window {start}..{end}")));
        }
        Ok(Self { start, end })
    }

    /// Index range of this window on `axis`, which must contain it fully.
    pub fn indices(&self, axis: &[NaiveDate]) -> Result<Range<usize>> {
        let outside = || {
            Error::Config(format!(
                "date window {}..{} is not inside the time axis",
                self.start, self.end
            ))
        };
        let (first, last) = match (axis.first(), axis.last()) {
            (Some(f), Some(l)) => (*f, *l),
            _ => return Err(outside()),
        };
        if self.start < first || self.end > last.succ_opt().unwrap_or(last) {
            return Err(outside());
        }
        let lo = axis.partition_point(|d| *d < self.start);
        let hi = axis.partition_point(|d| *d < self.end);
        if lo >= hi {
            return Err(outside());
        }
        Ok(lo..hi)
    }

    pub fn overlaps(&self, other: &DateRange) -> bool {
        self.start < other.end && other.start < self.end
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    sites: Vec<Site>,
    time_axis: Vec<NaiveDate>,
    feature_names: Vec<String>,
    attr_names: Vec<String>,
}

impl Dataset {
    pub fn new(
        sites: Vec<Site>,
        time_axis: Vec<NaiveDate>,
        feature_names: Vec<String>,
        attr_names: Vec<String>,
    ) -> Result<Self> {
        let t = time_axis.len();
        let f = feature_names.len();
        let a = attr_names.len();
        if t == 0 {
            return Err(Error::Dataset("empty time axis".into()));
        }
        if f == 0 {
            return Err(Error::Dataset("no forcing features".into()));
        }
        if time_axis.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Dataset("time axis is not strictly increasing".into()));
        }
        let mut ids = BTreeSet::new();
        for s in &sites {
            if !ids.insert(s.id.as_str()) {
                return Err(Error::Dataset(format!("duplicate site id {}", s.id)));
            }
            if !s.region.is_level3() {
                return Err(Error::Dataset(format!(
                    "site {} region {} is not a level-III code",
                    s.id, s.region
                )));
            }
            if s.target.len() != t || s.forcing.len() != t * f || s.static_attrs.len() != a {
                return Err(Error::Dataset(format!(
                    "site {} has inconsistent dimensions (expected T={t}, F={f}, A={a})",
                    s.id
                )));
            }
            if let Some(i) = s.forcing.iter().position(|v| !v.is_finite()) {
                return Err(Error::Dataset(format!(
                    "site {} forcing is missing or non-finite at time {} feature {}",
                    s.id,
                    i / f,
                    i % f
                )));
            }
            if s.static_attrs.iter().any(|v| !v.is_finite()) {
                return Err(Error::Dataset(format!("site {} has a non-finite attribute", s.id)));
            }
            if s.target.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::Dataset(format!("site {} has a non-finite target", s.id)));
            }
        }
        Ok(Self {
            sites,
            time_axis,
            feature_names,
            attr_names,
        })
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn site(&self, id: &str) -> Option<&Site> {
        self.sites.iter().find(|s| s.id == id)
    }

    pub fn time_axis(&self) -> &[NaiveDate] {
        &self.time_axis
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn attr_names(&self) -> &[String] {
        &self.attr_names
    }

    pub fn n_time(&self) -> usize {
        self.time_axis.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn n_attrs(&self) -> usize {
        self.attr_names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    /// Sites whose region satisfies `keep`, in original order, on the same
    /// time axis.
    pub fn subset_by_region<P>(&self, mut keep: P) -> Dataset
    where
        P: FnMut(&RegionCode) -> bool,
    {
        self.with_sites(self.sites.iter().filter(|s| keep(&s.region)).cloned().collect())
    }

    /// Sites with the given ids, in the order of `ids`.
    pub fn subset_by_ids<S: AsRef<str>>(&self, ids: &[S]) -> Result<Dataset> {
        let sites = ids
            .iter()
            .map(|id| {
                self.site(id.as_ref())
                    .cloned()
                    .ok_or_else(|| Error::Dataset(format!("unknown site id {}", id.as_ref())))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self.with_sites(sites))
    }

    pub fn slice_time(&self, window: &DateRange) -> Result<Dataset> {
        let r = window.indices(&self.time_axis)?;
        Ok(Dataset {
            sites: self.sites.iter().map(|s| s.slice_time(r.clone())).collect(),
            time_axis: self.time_axis[r].to_vec(),
            feature_names: self.feature_names.clone(),
            attr_names: self.attr_names.clone(),
        })
    }

    pub fn regions(&self) -> BTreeSet<RegionCode> {
        self.sites.iter().map(|s| s.region.clone()).collect()
    }

    fn with_sites(&self, sites: Vec<Site>) -> Dataset {
        Dataset {
            sites,
            time_axis: self.time_axis.clone(),
            feature_names: self.feature_names.clone(),
            attr_names: self.attr_names.clone(),
        }
    }

    pub(crate) fn map_sites<F: FnMut(&Site) -> Site>(&self, f: F) -> Dataset {
        self.with_sites(self.sites.iter().map(f).collect())
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use crate::region::{classify_neighbor, NeighborClass};

    #[test]
    fn rejects_duplicates_and_shallow_regions() {
        let mut s = vec_of(&[("a", "1.1.1"), ("a", "1.1.2")]);
        let err = Dataset::new(s.clone(), axis(4), names(2), names(1)).unwrap_err();
        assert!(matches!(err, Error::Dataset(_)));
        s[1].id = "b".into();
        s[1].region = RegionCode::parse("1.1").unwrap();
        assert!(Dataset::new(s, axis(4), names(2), names(1)).is_err());
    }

    #[test]
    fn rejects_missing_forcing() {
        let mut s = vec_of(&[("a", "1.1.1")]);
        s[0].forcing[3] = f64::NAN;
        let err = Dataset::new(s, axis(4), names(2), names(1)).unwrap_err();
        assert!(alloc::format!("{err}").contains("time 1 feature 1"));
    }

    #[test]
    fn subset_by_region_cases() {
        let ds = dataset(&[("a", "8.3.5"), ("b", "8.3.4"), ("c", "9.1.1"), ("d", "8.3.5")], 5);
        assert_eq!(ds.subset_by_region(|_| true), ds);
        let roi = RegionCode::parse("8.3.5").unwrap();
        let only = ds.subset_by_region(|r| *r == roi);
        let ids: Vec<&str> = only.sites().iter().map(|s| s.id.as_str()).collect();
        assert_eq!(ids, ["a", "d"]);
        let close = ds.subset_by_region(|r| {
            matches!(
                classify_neighbor(&roi, r),
                Ok(NeighborClass::Same | NeighborClass::Close)
            )
        });
        let ids: Vec<&str> = close.sites().iter().map(|s| s.id.as_str()).collect();
        assert_eq!(ids, ["a", "b", "d"]);
        assert!(ds.subset_by_region(|_| false).is_empty());
    }

    #[test]
    fn date_windows() {
        let ds = dataset(&[("a", "1.1.1")], 10);
        let w = DateRange::new(day(2), day(5)).unwrap();
        assert_eq!(w.indices(ds.time_axis()).unwrap(), 2..5);
        let sliced = ds.slice_time(&w).unwrap();
        assert_eq!(sliced.n_time(), 3);
        assert_eq!(sliced.sites()[0].target[0], Some(2.0));
        assert_eq!(sliced.sites()[0].forcing_at(0), &[4.0, 5.0]);
        let whole = DateRange::new(day(0), day(10)).unwrap();
        assert_eq!(whole.indices(ds.time_axis()).unwrap(), 0..10);
        assert!(DateRange::new(day(0), day(11))
            .unwrap()
            .indices(ds.time_axis())
            .is_err());
        assert!(DateRange::new(day(3), day(3)).is_err());
    }

    fn vec_of(specs: &[(&str, &str)]) -> Vec<Site> {
        specs.iter().map(|(i, r)| site(i, r, 4)).collect()
    }

    fn axis(t: u32) -> Vec<NaiveDate> {
        (0..t).map(day).collect()
    }

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| alloc::format!("n{i}")).collect()
    }
}
