//! Per-feature standardization fitted on training data.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    /// Population standard deviation; 1 for constant columns.
    pub std: f64,
}

impl Moments {
    fn from_values<I: Iterator<Item = f64> + Clone>(values: I) -> Option<Self> {
        let (n, sum) = values.clone().fold((0usize, 0.0), |(n, s), v| (n + 1, s + v));
        if n == 0 {
            return None;
        }
        let mean = sum / n as f64;
        let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        let std = libm::sqrt(var);
        let scale = if mean.abs() > 1.0 { mean.abs() } else { 1.0 };
        let std = if std > 1e-12 * scale { std } else { 1.0 };
        Some(Self { mean, std })
    }

    #[inline]
    pub fn apply(&self, v: f64) -> f64 {
        (v - self.mean) / self.std
    }

    #[inline]
    pub fn invert(&self, z: f64) -> f64 {
        z * self.std + self.mean
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub forcing: Vec<Moments>,
    pub attrs: Vec<Moments>,
    pub target: Moments,
}

/// Population moments over every non-missing training entry. Attributes
/// are weighted once per site, forcing and target once per time step.
pub fn fit_normalization(train: &Dataset) -> Result<NormStats> {
    if train.is_empty() {
        return Err(Error::Dataset("cannot fit normalization on an empty dataset".into()));
    }
    let f = train.n_features();
    let sites = train.sites();
    let forcing = (0..f)
        .map(|j| {
            Moments::from_values(
                sites
                    .iter()
                    .flat_map(move |s| s.forcing.iter().skip(j).step_by(f).copied()),
            )
            .expect("non-empty time axis")
        })
        .collect();
    let attrs = (0..train.n_attrs())
        .map(|j| Moments::from_values(sites.iter().map(move |s| s.static_attrs[j])).expect("non-empty dataset"))
        .collect();
    let target = Moments::from_values(sites.iter().flat_map(|s| s.target.iter().flatten().copied()))
        .ok_or_else(|| Error::Dataset("training data has no observed targets".into()))?;
    Ok(NormStats { forcing, attrs, target })
}

impl NormStats {
    fn check(&self, ds: &Dataset) -> Result<()> {
        if ds.n_features() != self.forcing.len() || ds.n_attrs() != self.attrs.len() {
            return Err(Error::Dimension(format!(
                "dataset has F={} A={}, statistics have F={} A={}",
                ds.n_features(),
                ds.n_attrs(),
                self.forcing.len(),
                self.attrs.len()
            )));
        }
        Ok(())
    }

    pub fn apply(&self, ds: &Dataset) -> Result<Dataset> {
        self.transform(ds, Moments::apply)
    }

    pub fn invert(&self, ds: &Dataset) -> Result<Dataset> {
        self.transform(ds, Moments::invert)
    }

    fn transform(&self, ds: &Dataset, op: fn(&Moments, f64) -> f64) -> Result<Dataset> {
        self.check(ds)?;
        let f = self.forcing.len();
        Ok(ds.map_sites(|s| {
            let mut out = s.clone();
            for (i, v) in out.forcing.iter_mut().enumerate() {
                *v = op(&self.forcing[i % f], *v);
            }
            for (v, m) in out.static_attrs.iter_mut().zip(&self.attrs) {
                *v = op(m, *v);
            }
            for v in out.target.iter_mut().flatten() {
                *v = op(&self.target, *v);
            }
            out
        }))
    }
}

pub fn apply_normalization(ds: &Dataset, stats: &NormStats) -> Result<Dataset> {
    stats.apply(ds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::fixtures::{dataset, day};
    use crate::data::Site;
    use alloc::string::ToString;
    use alloc::vec;

    fn two_site() -> Dataset {
        let mk = |id: &str, f0: f64, a: f64, target: Vec<Option<f64>>| Site {
            id: id.to_string(),
            region: crate::region::RegionCode::parse("1.1.1").unwrap(),
            static_attrs: vec![a, 5.0],
            forcing: vec![f0, 5.0, f0, 5.0, f0, 5.0],
            target,
        };
        Dataset::new(
            vec![
                mk("a", 0.0, 1.0, vec![Some(1.0), None, Some(3.0)]),
                mk("b", 2.0, 3.0, vec![None, None, None]),
            ],
            (0..3).map(day).collect(),
            vec!["x".to_string(), "y".to_string()],
            vec!["u".to_string(), "v".to_string()],
        )
        .unwrap()
    }

    #[test]
    fn moments_examples() {
        let st = fit_normalization(&two_site()).unwrap();
        assert_eq!(st.forcing[0], Moments { mean: 1.0, std: 1.0 });
        assert_eq!(st.forcing[1], Moments { mean: 5.0, std: 1.0 });
        assert_eq!(st.attrs[0], Moments { mean: 2.0, std: 1.0 });
        assert_eq!(st.attrs[1].std, 1.0);
        assert_eq!(st.target.mean, 2.0);
        assert_eq!(st.target.std, 1.0);
    }

    #[test]
    fn apply_examples() {
        let m = Moments { mean: 5.0, std: 2.0 };
        assert_eq!(m.apply(5.0), 0.0);
        assert_eq!(m.apply(7.0), 1.0);
        let ds = two_site();
        let st = fit_normalization(&ds).unwrap();
        let z = st.apply(&ds).unwrap();
        assert_eq!(z.sites()[0].target[1], None);
        assert_eq!(z.sites()[0].target[0], Some(-1.0));
        assert_eq!(st.invert(&z).unwrap(), ds);
    }

    #[test]
    fn errors() {
        let empty = dataset(&[], 3);
        assert!(fit_normalization(&empty).is_err());
        let st = fit_normalization(&two_site()).unwrap();
        let other = dataset(&[("a", "1.1.1")], 3);
        assert!(matches!(st.apply(&other), Err(Error::Dimension(_))));
    }
}
