//! Training-set construction for the two experiment families and the
//! train-then-evaluate step shared by every model run.
//!
//! *Global vs. local*: one model on all sites, one per populated sub-region
//! letter. *Similar vs. dissimilar*: for a level-III region of interest
//! (ROI), four models trained on the ROI alone, plus its close neighbors,
//! plus its far neighbors, or plus every dissimilar region. Every model of
//! a family is evaluated on the same test sites over the same test window.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, DateRange};
use crate::eval::{site_metrics, SiteMetrics};
use crate::lstm::{self, ModelParams};
use crate::norm::{fit_normalization, NormStats};
use crate::region::{classify_neighbor, NeighborClass, RegionCode, Taxonomy};
use crate::rng::Stream;
use crate::train::{self, ModelInputs, TrainConfig, TrainLog};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    GlobalLocal,
    SimilarDissimilar,
}

impl Family {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "global_local" => Some(Self::GlobalLocal),
            "similar_dissimilar" => Some(Self::SimilarDissimilar),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Global,
    Local,
    LocalPlusClose,
    LocalPlusFar,
    LocalPlusDissimilar,
}

impl Scenario {
    pub const AUGMENTED: [Scenario; 3] = [
        Scenario::LocalPlusClose,
        Scenario::LocalPlusFar,
        Scenario::LocalPlusDissimilar,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Global => "global",
            Scenario::Local => "local",
            Scenario::LocalPlusClose => "close",
            Scenario::LocalPlusFar => "far",
            Scenario::LocalPlusDissimilar => "dissimilar",
        }
    }

    fn family(self) -> Family {
        match self {
            Scenario::Global => Family::GlobalLocal,
            Scenario::Local => Family::GlobalLocal,
            _ => Family::SimilarDissimilar,
        }
    }

    fn neighbor(self) -> Option<NeighborClass> {
        match self {
            Scenario::LocalPlusClose => Some(NeighborClass::Close),
            Scenario::LocalPlusFar => Some(NeighborClass::Far),
            Scenario::LocalPlusDissimilar => Some(NeighborClass::Dissimilar),
            _ => None,
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Region a model family is built around.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Roi {
    Region(RegionCode),
    SubRegion(String),
}

impl fmt::Display for Roi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Roi::Region(c) => write!(f, "{c}"),
            Roi::SubRegion(l) => f.write_str(l),
        }
    }
}

/// Declarative description of one model run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub family: Family,
    /// `None` only for the global model.
    pub roi: Option<Roi>,
    pub scenario: Scenario,
    pub size_controlled: bool,
    pub train_window: DateRange,
    pub test_window: DateRange,
    pub train: TrainConfig,
    /// Steps before the test window run through the model to spin up its
    /// state (inputs only; no targets are used).
    pub eval_warmup: usize,
    pub data_seed: u64,
    pub sampling_seed: u64,
    /// Content hash of the dataset the run was built from.
    pub data_fingerprint: String,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        let consistent = match (self.family, self.scenario) {
            (Family::GlobalLocal, Scenario::Global) => self.roi.is_none(),
            (Family::GlobalLocal, Scenario::Local) => matches!(self.roi, Some(Roi::SubRegion(_))),
            (Family::SimilarDissimilar, s) => s.family() == Family::SimilarDissimilar || s == Scenario::Local,
            _ => false,
        };
        let roi_ok = match (self.family, &self.roi) {
            (Family::SimilarDissimilar, Some(Roi::Region(c))) => c.is_level3(),
            (Family::SimilarDissimilar, _) => false,
            _ => true,
        };
        if !consistent || !roi_ok {
            return Err(Error::Config(format!(
                "scenario {} with roi {:?} does not belong to family {:?}",
                self.scenario, self.roi, self.family
            )));
        }
        if self.size_controlled && self.family != Family::SimilarDissimilar {
            return Err(Error::Config("size control applies only to similar/dissimilar".into()));
        }
        if self.train_window.overlaps(&self.test_window) {
            return Err(Error::Config("train and test windows overlap".into()));
        }
        self.train.validate()
    }

    /// Human-readable model id, unique within a suite.
    pub fn model_id(&self) -> String {
        match (&self.roi, self.scenario) {
            (None, _) => "global".into(),
            (Some(roi), Scenario::Local) if self.family == Family::GlobalLocal => {
                format!("local:{roi}")
            }
            (Some(roi), s) => {
                let sc = if self.size_controlled { "+sc" } else { "" };
                format!("{roi}/{s}{sc}")
            }
        }
    }
}

/// Training compositions for global vs. local: `global` plus `local:X` for
/// every letter with at least one site.
pub fn build_global_local(ds: &Dataset, taxonomy: &Taxonomy) -> Result<BTreeMap<String, Dataset>> {
    let mut by_letter: BTreeMap<&str, Vec<String>> = BTreeMap::new();
    for s in ds.sites() {
        let letter = &taxonomy.subregion_of(&s.region)?.letter;
        by_letter.entry(letter.as_str()).or_default().push(s.id.clone());
    }
    let mut out = BTreeMap::new();
    out.insert("global".to_string(), ds.clone());
    for (letter, ids) in by_letter {
        out.insert(format!("local:{letter}"), ds.subset_by_ids(&ids)?);
    }
    Ok(out)
}

fn check_roi(roi: &RegionCode) -> Result<()> {
    if roi.is_level3() {
        Ok(())
    } else {
        Err(Error::Contract(format!("ROI {roi} is not a level-III code")))
    }
}

/// The four similar/dissimilar compositions around `roi`.
pub fn build_similar_dissimilar(ds: &Dataset, roi: &RegionCode) -> Result<BTreeMap<Scenario, Dataset>> {
    check_roi(roi)?;
    let class = |r: &RegionCode| classify_neighbor(roi, r).ok();
    let local = ds.subset_by_region(|r| class(r) == Some(NeighborClass::Same));
    if local.is_empty() {
        return Err(Error::Dataset(format!("ROI {roi} has no sites")));
    }
    let mut out = BTreeMap::new();
    out.insert(Scenario::Local, local);
    for s in Scenario::AUGMENTED {
        let extra = s.neighbor();
        out.insert(
            s,
            ds.subset_by_region(|r| {
                let c = class(r);
                c == Some(NeighborClass::Same) || c == extra
            }),
        );
    }
    Ok(out)
}

/// Outcome of size control for one ROI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeControl {
    pub added_per_scenario: usize,
    pub pool_sizes: BTreeMap<Scenario, usize>,
}

/// Subsamples the added (non-ROI) sites of each augmented scenario, without
/// replacement, down to the smallest pool. The local composition is
/// untouched; site order is preserved.
pub fn apply_size_control(
    scenarios: &BTreeMap<Scenario, Dataset>,
    rng: &mut Stream,
) -> Result<(BTreeMap<Scenario, Dataset>, SizeControl)> {
    let local = scenarios
        .get(&Scenario::Local)
        .ok_or_else(|| Error::Contract("size control needs the local scenario".into()))?;
    let roi_ids: BTreeSet<&str> = local.sites().iter().map(|s| s.id.as_str()).collect();
    let mut pools = BTreeMap::new();
    for s in Scenario::AUGMENTED {
        let ds = scenarios
            .get(&s)
            .ok_or_else(|| Error::Contract(format!("size control needs scenario {s}")))?;
        let pool: Vec<&str> = ds
            .sites()
            .iter()
            .map(|x| x.id.as_str())
            .filter(|id| !roi_ids.contains(id))
            .collect();
        if pool.is_empty() {
            return Err(Error::EmptyPool(s.to_string()));
        }
        pools.insert(s, pool);
    }
    let k = pools.values().map(Vec::len).min().expect("three pools");
    let mut out = BTreeMap::new();
    out.insert(Scenario::Local, local.clone());
    for (s, pool) in &pools {
        let mut picked: Vec<usize> = rand::seq::index::sample(rng, pool.len(), k).into_vec();
        picked.sort_unstable();
        let keep: BTreeSet<&str> = picked.iter().map(|&i| pool[i]).chain(roi_ids.iter().copied()).collect();
        out.insert(*s, scenarios[s].subset_by_region_ids(&keep));
    }
    let pool_sizes = pools.iter().map(|(s, p)| (*s, p.len())).collect();
    Ok((
        out,
        SizeControl {
            added_per_scenario: k,
            pool_sizes,
        },
    ))
}

impl Dataset {
    fn subset_by_region_ids(&self, keep: &BTreeSet<&str>) -> Dataset {
        let ids: Vec<&str> = self
            .sites()
            .iter()
            .map(|s| s.id.as_str())
            .filter(|id| keep.contains(id))
            .collect();
        self.subset_by_ids(&ids).expect("ids come from this dataset")
    }
}

/// Level-III regions with at least `min_sites` sites, in code order.
pub fn eligible_rois(ds: &Dataset, min_sites: usize) -> Vec<RegionCode> {
    let mut counts: BTreeMap<&RegionCode, usize> = BTreeMap::new();
    for s in ds.sites() {
        *counts.entry(&s.region).or_default() += 1;
    }
    counts
        .into_iter()
        .filter(|(_, n)| *n >= min_sites)
        .map(|(r, _)| r.clone())
        .collect()
}

/// Everything a trained model run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelOutcome {
    pub params: ModelParams,
    pub log: TrainLog,
    pub stats: NormStats,
    pub metrics: Vec<SiteMetrics>,
}

/// Fits normalization on the training window of `train_set`, trains, then
/// evaluates on `eval_ids` of `full` over the test window.
pub fn run_model(
    full: &Dataset,
    train_set: &Dataset,
    eval_ids: &[String],
    spec: &ExperimentSpec,
) -> Result<ModelOutcome> {
    spec.validate()?;
    let train_part = train_set.slice_time(&spec.train_window)?;
    let stats = fit_normalization(&train_part)?;
    let normalized = stats.apply(&train_part)?;
    let (params, log) = train::train(&normalized, &spec.train)?;
    let eval_set = full.subset_by_ids(eval_ids)?;
    let metrics = evaluate(&params, &stats, &eval_set, &spec.test_window, spec.eval_warmup)?;
    Ok(ModelOutcome {
        params,
        log,
        stats,
        metrics,
    })
}

/// Predictions in physical units over `test_window` for every site.
pub fn predict_window(
    params: &ModelParams,
    stats: &NormStats,
    ds: &Dataset,
    test_window: &DateRange,
    warmup: usize,
) -> Result<Vec<Vec<f64>>> {
    let range = test_window.indices(ds.time_axis())?;
    let lead = range.start.min(warmup);
    let spin = DateRange {
        start: ds.time_axis()[range.start - lead],
        end: test_window.end,
    };
    let window = stats.apply(&ds.slice_time(&spin)?)?;
    let inputs = ModelInputs::from_dataset(&window);
    if inputs.input_size != params.dims().input {
        return Err(Error::Dimension(format!(
            "dataset provides {} inputs, model expects {}",
            inputs.input_size,
            params.dims().input
        )));
    }
    if inputs.x.is_empty() {
        return Ok(Vec::new());
    }
    let xs: Vec<&[f64]> = inputs.x.iter().map(|x| &x[..]).collect();
    Ok(lstm::predict_batch(params, &xs)?
        .into_iter()
        .map(|y| y[lead..].iter().map(|v| stats.target.invert(*v)).collect())
        .collect())
}

pub fn evaluate(
    params: &ModelParams,
    stats: &NormStats,
    ds: &Dataset,
    test_window: &DateRange,
    warmup: usize,
) -> Result<Vec<SiteMetrics>> {
    let preds = predict_window(params, stats, ds, test_window, warmup)?;
    let range = test_window.indices(ds.time_axis())?;
    Ok(ds
        .sites()
        .iter()
        .zip(&preds)
        .map(|(s, p)| site_metrics(&s.id, &s.region, &s.target[range.clone()], p))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::fixtures::dataset;
    use crate::region::{SubRegion, Taxonomy};
    use crate::rng;
    use alloc::vec;

    fn ids(ds: &Dataset) -> Vec<&str> {
        ds.sites().iter().map(|s| s.id.as_str()).collect()
    }

    fn world() -> Dataset {
        dataset(
            &[
                ("a1", "8.3.5"),
                ("a2", "8.3.5"),
                ("b", "8.3.4"),
                ("c", "8.1.7"),
                ("d", "8.2.1"),
                ("e", "9.4.2"),
                ("f", "5.1.1"),
            ],
            6,
        )
    }

    #[test]
    fn global_local_partition() {
        let ds = dataset(&[("x", "5.1.1"), ("y", "6.2.2"), ("z", "5.3.1")], 4);
        let m = build_global_local(&ds, &Taxonomy::epa()).unwrap();
        let keys: Vec<&str> = m.keys().map(String::as_str).collect();
        assert_eq!(keys, ["global", "local:A", "local:B"]);
        assert_eq!(ids(&m["local:A"]), ["x", "z"]);
        let locals: usize = m.iter().filter(|(k, _)| *k != "global").map(|(_, d)| d.len()).sum();
        assert_eq!(locals, m["global"].len());
        let bad = dataset(&[("q", "4.1.1")], 4);
        assert!(matches!(
            build_global_local(&bad, &Taxonomy::epa()),
            Err(Error::UnmappedRegion(_))
        ));
    }

    #[test]
    fn similar_dissimilar_compositions() {
        let roi = RegionCode::parse("8.3.5").unwrap();
        let m = build_similar_dissimilar(&world(), &roi).unwrap();
        assert_eq!(ids(&m[&Scenario::Local]), ["a1", "a2"]);
        assert_eq!(ids(&m[&Scenario::LocalPlusClose]), ["a1", "a2", "b"]);
        assert_eq!(ids(&m[&Scenario::LocalPlusFar]), ["a1", "a2", "c", "d"]);
        assert_eq!(ids(&m[&Scenario::LocalPlusDissimilar]), ["a1", "a2", "e", "f"]);
        let empty = RegionCode::parse("8.3.9").unwrap();
        assert!(build_similar_dissimilar(&world(), &empty).is_err());
        assert!(build_similar_dissimilar(&world(), &RegionCode::parse("8.3").unwrap()).is_err());
    }

    #[test]
    fn size_control_min_rule() {
        let roi = RegionCode::parse("8.3.5").unwrap();
        let m = build_similar_dissimilar(&world(), &roi).unwrap();
        let (c, info) = apply_size_control(&m, &mut rng::stream(1)).unwrap();
        assert_eq!(info.added_per_scenario, 1);
        for s in Scenario::AUGMENTED {
            assert_eq!(c[&s].len(), 3);
            assert!(ids(&c[&s]).starts_with(&["a1", "a2"]));
        }
        assert_eq!(c[&Scenario::Local], m[&Scenario::Local]);
        let (again, _) = apply_size_control(&m, &mut rng::stream(1)).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn size_control_empty_pool() {
        let ds = dataset(&[("a", "8.3.5"), ("c", "8.1.7"), ("e", "9.4.2")], 4);
        let m = build_similar_dissimilar(&ds, &RegionCode::parse("8.3.5").unwrap()).unwrap();
        match apply_size_control(&m, &mut rng::stream(0)) {
            Err(Error::EmptyPool(s)) => assert_eq!(s, "close"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn spec_validation_and_ids() {
        let d = |n| crate::data::fixtures::day(n);
        let mut spec = ExperimentSpec {
            family: Family::GlobalLocal,
            roi: None,
            scenario: Scenario::Global,
            size_controlled: false,
            train_window: DateRange::new(d(0), d(3)).unwrap(),
            test_window: DateRange::new(d(3), d(6)).unwrap(),
            train: TrainConfig::default(),
            eval_warmup: 0,
            data_seed: 0,
            sampling_seed: 0,
            data_fingerprint: String::new(),
        };
        spec.validate().unwrap();
        assert_eq!(spec.model_id(), "global");
        spec.size_controlled = true;
        assert!(spec.validate().is_err());
        spec.size_controlled = false;
        spec.test_window = DateRange::new(d(2), d(6)).unwrap();
        assert!(spec.validate().is_err());
        spec.test_window = DateRange::new(d(3), d(6)).unwrap();
        spec.scenario = Scenario::LocalPlusFar;
        assert!(spec.validate().is_err());
        spec.family = Family::SimilarDissimilar;
        spec.roi = Some(Roi::Region(RegionCode::parse("8.3.5").unwrap()));
        spec.size_controlled = true;
        spec.validate().unwrap();
        assert_eq!(spec.model_id(), "8.3.5/far+sc");
        spec.family = Family::GlobalLocal;
        spec.scenario = Scenario::Local;
        spec.size_controlled = false;
        spec.roi = Some(Roi::SubRegion("F".into()));
        assert_eq!(spec.model_id(), "local:F");
    }

    #[test]
    fn rois_by_size() {
        let r = eligible_rois(&world(), 2);
        assert_eq!(r, vec![RegionCode::parse("8.3.5").unwrap()]);
        assert_eq!(eligible_rois(&world(), 1).len(), 6);
    }

    #[test]
    fn synthetic_taxonomy_locals() {
        let ds = dataset(&[("a", "S1.1.1"), ("b", "S1.2.1")], 4);
        let t = Taxonomy::new(vec![
            SubRegion {
                letter: "A".into(),
                members: vec![RegionCode::parse("S1.1").unwrap()],
            },
            SubRegion {
                letter: "B".into(),
                members: vec![RegionCode::parse("S1.2").unwrap()],
            },
        ])
        .unwrap();
        assert_eq!(build_global_local(&ds, &t).unwrap().len(), 3);
    }
}
