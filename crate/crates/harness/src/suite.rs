//! Experiment suites: plans the model runs of one family, trains them on a
//! worker pool, writes per-run artifacts and the paired comparisons.
//!
//! Layout under the output directory:
//!
//! ```text
//! runs/<run-id>/manifest.json  checkpoint.bin  metrics.csv
//!               train_log.csv  norm_stats.json comparisons.csv
//! comparisons.csv  pairs.csv  metrics.csv  suite.json  summary.txt
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use synergy_core::checkpoint;
use synergy_core::data::{Dataset, DateRange};
use synergy_core::eval::{compare_models, compare_pooled, Metric, PairedComparison, SiteMetrics};
use synergy_core::experiment::{
    apply_size_control, build_global_local, build_similar_dissimilar, eligible_rois, run_model, ExperimentSpec, Family,
    ModelOutcome, Roi, Scenario,
};
use synergy_core::region::{RegionCode, Taxonomy};
use synergy_core::rng;
use synergy_core::synth::{gen_world, WorldConfig};
use synergy_core::train::TrainConfig;

use crate::config::Config;
use crate::error::{exit, is_numeric, HarnessError, Result};
use crate::io;
use crate::report::{self, ComparisonRow, PairRow};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const MANIFEST: &str = "manifest.json";
pub const CHECKPOINT: &str = "checkpoint.bin";
pub const METRICS: &str = "metrics.csv";
pub const TRAIN_LOG: &str = "train_log.csv";
pub const NORM_STATS: &str = "norm_stats.json";
pub const COMPARISONS: &str = "comparisons.csv";
pub const PAIRS: &str = "pairs.csv";
pub const SUITE: &str = "suite.json";
pub const SUMMARY: &str = "summary.txt";

const SIZE_CONTROL_NOTE: &str =
    "size control samples whole sites from each added pool; observation-level subsampling is not implemented";

/// Where a run's dataset came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataOrigin {
    Generated { world: Box<WorldConfig> },
    Directory { path: PathBuf },
}

/// A loaded dataset with its provenance.
#[derive(Debug, Clone)]
pub struct DataSource {
    pub dataset: Dataset,
    pub taxonomy: Option<Taxonomy>,
    pub origin: DataOrigin,
    pub fingerprint: String,
}

impl DataSource {
    pub fn generate(world: &WorldConfig) -> Result<Self> {
        let w = gen_world(world)?;
        let fingerprint = io::dataset_fingerprint(&w.dataset);
        Ok(Self {
            dataset: w.dataset,
            taxonomy: Some(w.taxonomy),
            origin: DataOrigin::Generated {
                world: Box::new(world.clone()),
            },
            fingerprint,
        })
    }

    pub fn load(dir: &Path, taxonomy: Option<&Path>) -> Result<Self> {
        let dataset = io::load_dataset(dir)?;
        let default_tax = dir.join(io::TAXONOMY);
        let taxonomy = match taxonomy {
            Some(p) => Some(io::load_taxonomy(p)?),
            None if default_tax.exists() => Some(io::load_taxonomy(&default_tax)?),
            None => None,
        };
        let fingerprint = io::dataset_fingerprint(&dataset);
        Ok(Self {
            dataset,
            taxonomy,
            origin: DataOrigin::Directory {
                path: dir.to_path_buf(),
            },
            fingerprint,
        })
    }

    /// Loads `io.data_dir` if set, otherwise generates the configured world.
    pub fn from_config(cfg: &Config) -> Result<Self> {
        match &cfg.io.data_dir {
            Some(dir) => Self::load(dir, cfg.io.taxonomy.as_deref()),
            None => {
                let mut src = Self::generate(&cfg.world()?)?;
                if let Some(p) = &cfg.io.taxonomy {
                    src.taxonomy = Some(io::load_taxonomy(p)?);
                }
                Ok(src)
            }
        }
    }

    /// Rebuilds the data a manifest was produced from and checks its hash.
    pub fn from_origin(origin: &DataOrigin, fingerprint: &str) -> Result<Self> {
        let src = match origin {
            DataOrigin::Generated { world } => Self::generate(world)?,
            DataOrigin::Directory { path } => Self::load(path, None)?,
        };
        if src.fingerprint != fingerprint {
            return Err(HarnessError::Config(format!(
                "dataset content hash {} does not match the manifest's {fingerprint}",
                src.fingerprint
            )));
        }
        Ok(src)
    }

    fn data_seed(&self) -> u64 {
        match &self.origin {
            DataOrigin::Generated { world } => world.seed,
            DataOrigin::Directory { .. } => 0,
        }
    }
}

/// One planned model run.
#[derive(Debug, Clone, PartialEq)]
pub struct Job {
    pub spec: ExperimentSpec,
    pub train_ids: Vec<String>,
    pub eval_ids: Vec<String>,
    /// Sites beyond the ROI's own (similar/dissimilar only).
    pub added_sites: Option<usize>,
    pub pool_sizes: Option<BTreeMap<String, usize>>,
    pub notes: Vec<String>,
}

impl Job {
    pub fn run_id(&self) -> String {
        run_id(&self.spec)
    }
}

/// Hex prefix of the SHA-256 of the spec's JSON form.
pub fn run_id(spec: &ExperimentSpec) -> String {
    let json = serde_json::to_vec(spec).expect("spec serializes");
    hex::encode(&Sha256::digest(&json)[..8])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Seeds {
    pub data: u64,
    pub train: u64,
    pub sampling: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "state")]
pub enum RunStatus {
    Ok {
        iterations: usize,
        empty_windows_accepted: usize,
    },
    Failed {
        error: String,
        numeric: bool,
    },
}

/// Artifact file names, relative to the run directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFiles {
    pub checkpoint: String,
    pub metrics: String,
    pub train_log: String,
    pub norm_stats: String,
}

/// Everything needed to reproduce one model run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub model_id: String,
    pub software_version: String,
    pub spec: ExperimentSpec,
    pub data: DataOrigin,
    pub seeds: Seeds,
    pub training_site_count: usize,
    pub added_site_count: Option<usize>,
    pub pool_sizes: Option<BTreeMap<String, usize>>,
    pub training_site_ids: Vec<String>,
    pub eval_site_ids: Vec<String>,
    pub files: Option<RunFiles>,
    pub status: RunStatus,
    pub notes: Vec<String>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = io::read_text(path)?;
        serde_json::from_str(&text).map_err(|e| HarnessError::format(path, e.line() as u64, e.to_string()))
    }

    pub fn job(&self) -> Job {
        Job {
            spec: self.spec.clone(),
            train_ids: self.training_site_ids.clone(),
            eval_ids: self.eval_site_ids.clone(),
            added_sites: self.added_site_count,
            pool_sizes: self.pool_sizes.clone(),
            notes: self.notes.clone(),
        }
    }

    pub fn is_ok(&self) -> bool {
        matches!(self.status, RunStatus::Ok { .. })
    }
}

/// Settings shared by every spec of a suite.
#[derive(Debug, Clone)]
pub struct SuitePlan {
    pub family: Family,
    pub train_window: DateRange,
    pub test_window: DateRange,
    pub train: TrainConfig,
    pub eval_warmup: usize,
    pub sampling_seed: u64,
    pub rois: Vec<RegionCode>,
    pub min_roi_sites: usize,
    pub size_control: Vec<bool>,
    pub metrics: Vec<Metric>,
}

impl SuitePlan {
    pub fn from_config(cfg: &Config, data: &DataSource) -> Result<Self> {
        let (train_window, test_window) = cfg.windows(data.dataset.time_axis())?;
        Ok(Self {
            family: cfg.experiment.family,
            train_window,
            test_window,
            train: cfg.train()?,
            eval_warmup: cfg.eval.warmup,
            sampling_seed: cfg.sampling_seed()?,
            rois: cfg.experiment.rois.clone(),
            min_roi_sites: cfg.experiment.min_roi_sites,
            size_control: cfg.experiment.size_control.variants().to_vec(),
            metrics: cfg.eval.metrics.clone(),
        })
    }

    fn spec(&self, data: &DataSource, roi: Option<Roi>, scenario: Scenario, sc: bool) -> ExperimentSpec {
        ExperimentSpec {
            family: self.family,
            roi,
            scenario,
            size_controlled: sc,
            train_window: self.train_window,
            test_window: self.test_window,
            train: self.train.clone(),
            eval_warmup: self.eval_warmup,
            data_seed: data.data_seed(),
            sampling_seed: self.sampling_seed,
            data_fingerprint: data.fingerprint.clone(),
        }
    }

    /// Resolved ROI list: the configured one, or every eligible region.
    pub fn resolve_rois(&self, ds: &Dataset) -> Result<Vec<RegionCode>> {
        if !self.rois.is_empty() {
            return Ok(self.rois.clone());
        }
        let rois = eligible_rois(ds, self.min_roi_sites);
        if rois.is_empty() {
            return Err(HarnessError::Config(format!(
                "no region has at least {} sites",
                self.min_roi_sites
            )));
        }
        Ok(rois)
    }

    /// Every model run of the suite, in a fixed order.
    pub fn jobs(&self, data: &DataSource) -> Result<Vec<Job>> {
        let ds = &data.dataset;
        let ids = |d: &Dataset| -> Vec<String> { d.sites().iter().map(|s| s.id.clone()).collect() };
        let mut jobs = Vec::new();
        match self.family {
            Family::GlobalLocal => {
                let taxonomy = data
                    .taxonomy
                    .as_ref()
                    .ok_or_else(|| HarnessError::Config("global/local needs a sub-region taxonomy".into()))?;
                for (model, set) in build_global_local(ds, taxonomy)? {
                    let (roi, scenario) = match model.strip_prefix("local:") {
                        Some(letter) => (Some(Roi::SubRegion(letter.to_string())), Scenario::Local),
                        None => (None, Scenario::Global),
                    };
                    jobs.push(Job {
                        spec: self.spec(data, roi, scenario, false),
                        train_ids: ids(&set),
                        eval_ids: ids(&set),
                        added_sites: None,
                        pool_sizes: None,
                        notes: Vec::new(),
                    });
                }
                // Global first, then letters in order.
                jobs.sort_by_key(|j| j.spec.scenario != Scenario::Global);
            }
            Family::SimilarDissimilar => {
                for roi in self.resolve_rois(ds)? {
                    let sets = build_similar_dissimilar(ds, &roi)?;
                    let local_ids = ids(&sets[&Scenario::Local]);
                    let n_local = local_ids.len();
                    let mk = |scenario, sc, set: &Dataset, pools, notes| Job {
                        spec: self.spec(data, Some(Roi::Region(roi.clone())), scenario, sc),
                        train_ids: ids(set),
                        eval_ids: local_ids.clone(),
                        added_sites: Some(set.len() - n_local),
                        pool_sizes: pools,
                        notes,
                    };
                    jobs.push(mk(Scenario::Local, false, &sets[&Scenario::Local], None, Vec::new()));
                    for &sc in &self.size_control {
                        let (sets, pools) = if sc {
                            let mut stream = rng::child(self.sampling_seed, &format!("size-control/{roi}"));
                            let (s, ctl) = apply_size_control(&sets, &mut stream)?;
                            let pools: BTreeMap<String, usize> =
                                ctl.pool_sizes.iter().map(|(k, v)| (k.to_string(), *v)).collect();
                            (s, Some(pools))
                        } else {
                            (sets.clone(), None)
                        };
                        for s in Scenario::AUGMENTED {
                            let notes = if sc {
                                vec![SIZE_CONTROL_NOTE.to_string()]
                            } else {
                                Vec::new()
                            };
                            jobs.push(mk(s, sc, &sets[&s], pools.clone(), notes));
                        }
                    }
                }
            }
        }
        for j in &jobs {
            j.spec.validate()?;
        }
        Ok(jobs)
    }
}

/// Result of one executed job.
#[derive(Debug)]
pub struct RunResult {
    pub job: Job,
    pub outcome: std::result::Result<ModelOutcome, synergy_core::Error>,
}

impl RunResult {
    pub fn manifest(&self, data: &DataSource) -> RunManifest {
        let status = match &self.outcome {
            Ok(o) => RunStatus::Ok {
                iterations: o.log.iterations,
                empty_windows_accepted: o.log.empty_windows_accepted,
            },
            Err(e) => RunStatus::Failed {
                error: e.to_string(),
                numeric: is_numeric(e),
            },
        };
        let spec = &self.job.spec;
        RunManifest {
            run_id: self.job.run_id(),
            model_id: spec.model_id(),
            software_version: VERSION.to_string(),
            spec: spec.clone(),
            data: data.origin.clone(),
            seeds: Seeds {
                data: spec.data_seed,
                train: spec.train.seed,
                sampling: spec.sampling_seed,
            },
            training_site_count: self.job.train_ids.len(),
            added_site_count: self.job.added_sites,
            pool_sizes: self.job.pool_sizes.clone(),
            training_site_ids: self.job.train_ids.clone(),
            eval_site_ids: self.job.eval_ids.clone(),
            files: self.outcome.is_ok().then(|| RunFiles {
                checkpoint: CHECKPOINT.into(),
                metrics: METRICS.into(),
                train_log: TRAIN_LOG.into(),
                norm_stats: NORM_STATS.into(),
            }),
            status,
            notes: self.job.notes.clone(),
        }
    }

    /// Writes the run directory (without comparisons).
    pub fn write(&self, dir: &Path, data: &DataSource) -> Result<RunManifest> {
        let manifest = self.manifest(data);
        if let Ok(o) = &self.outcome {
            io::write_bytes(&dir.join(CHECKPOINT), &checkpoint::encode(&o.params))?;
            let rows: Vec<(String, SiteMetrics)> = o
                .metrics
                .iter()
                .map(|m| (manifest.model_id.clone(), m.clone()))
                .collect();
            io::write_text(&dir.join(METRICS), &io::metrics_csv(&rows))?;
            io::write_text(&dir.join(TRAIN_LOG), &io::train_log_csv(&o.log))?;
            let stats = serde_json::to_string_pretty(&o.stats).expect("stats serialize");
            io::write_text(&dir.join(NORM_STATS), &(stats + "\n"))?;
        }
        let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        io::write_text(&dir.join(MANIFEST), &(json + "\n"))?;
        Ok(manifest)
    }
}

pub fn execute(job: &Job, data: &DataSource) -> RunResult {
    let train_set = data.dataset.subset_by_ids(&job.train_ids);
    let outcome = train_set.and_then(|set| run_model(&data.dataset, &set, &job.eval_ids, &job.spec));
    RunResult {
        job: job.clone(),
        outcome,
    }
}

/// Runs jobs on a pool of `workers` threads; results keep job order.
pub fn execute_all(jobs: &[Job], data: &DataSource, workers: usize) -> Result<Vec<RunResult>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| HarnessError::Config(format!("worker pool: {e}")))?;
    Ok(pool.install(|| jobs.par_iter().map(|j| execute(j, data)).collect()))
}

/// Named model pairings compared within one region.
fn pairings(family: Family, sc: &[bool]) -> Vec<(String, String)> {
    match family {
        Family::GlobalLocal => vec![("global".into(), "local".into())],
        Family::SimilarDissimilar => {
            let mut out = Vec::new();
            for &sc in sc {
                let s = if sc { "+sc" } else { "" };
                let m = |x: &str| if x == "local" { x.to_string() } else { format!("{x}{s}") };
                for (a, b) in [
                    ("local", "close"),
                    ("local", "far"),
                    ("local", "dissimilar"),
                    ("close", "far"),
                    ("far", "dissimilar"),
                ] {
                    out.push((m(a), m(b)));
                }
            }
            out
        }
    }
}

pub fn comparison_name(a: &str, b: &str) -> String {
    format!("{a}_vs_{b}")
}

/// Per-region groups of successful runs, keyed by the short model name used
/// in [`pairings`].
fn groups(results: &[RunResult]) -> BTreeMap<String, BTreeMap<String, &ModelOutcome>> {
    let mut out: BTreeMap<String, BTreeMap<String, &ModelOutcome>> = BTreeMap::new();
    let global = results
        .iter()
        .find(|r| r.job.spec.scenario == Scenario::Global)
        .and_then(|r| r.outcome.as_ref().ok());
    for r in results {
        let Ok(o) = &r.outcome else { continue };
        let spec = &r.job.spec;
        let Some(roi) = &spec.roi else { continue };
        let g = out.entry(roi.to_string()).or_default();
        g.insert(short_name(spec), o);
        if let Some(gl) = global {
            g.insert("global".into(), gl);
        }
    }
    out
}

/// Paired comparisons per region plus the pooled `All` row.
pub struct Comparisons {
    pub rows: Vec<ComparisonRow>,
    pub pairs: Vec<PairRow>,
    pub notes: Vec<String>,
}

pub fn compare(results: &[RunResult], family: Family, sc: &[bool], metrics: &[Metric]) -> Comparisons {
    let groups = groups(results);
    let mut rows = Vec::new();
    let mut pairs = Vec::new();
    let mut notes = Vec::new();
    let mut push = |region: &str, name: &str, c: std::result::Result<PairedComparison, synergy_core::Error>| match c {
        Ok(c) => {
            pairs.extend(c.pairs.iter().map(|p| PairRow {
                region: region.to_string(),
                comparison: name.to_string(),
                metric: c.metric,
                site_id: p.site_id.clone(),
                a: p.a,
                b: p.b,
            }));
            rows.push(ComparisonRow::from_comparison(region, name, &c));
        }
        Err(e) => notes.push(format!("{region} {name}: {e}")),
    };
    for (a, b) in pairings(family, sc) {
        let name = comparison_name(&a, &b);
        for &metric in metrics {
            let mut pooled: Vec<(Vec<SiteMetrics>, &[SiteMetrics])> = Vec::new();
            for (region, g) in &groups {
                let (Some(ma), Some(mb)) = (g.get(&a), g.get(&b)) else {
                    continue;
                };
                // Pair on the sites `b` was evaluated on; the global model
                // covers every site and must not enter the pool once per region.
                let eval: Vec<SiteMetrics> = restrict(&ma.metrics, &mb.metrics);
                push(region, &name, compare_models(&eval, &mb.metrics, metric));
                pooled.push((eval, &mb.metrics));
            }
            if pooled.len() >= 2 {
                let groups: Vec<(&[SiteMetrics], &[SiteMetrics])> =
                    pooled.iter().map(|(a, b)| (a.as_slice(), *b)).collect();
                push(report::ALL, &name, compare_pooled(&groups, metric));
            }
        }
    }
    Comparisons { rows, pairs, notes }
}

fn restrict(a: &[SiteMetrics], b: &[SiteMetrics]) -> Vec<SiteMetrics> {
    let keep: std::collections::HashSet<&str> = b.iter().map(|m| m.site_id.as_str()).collect();
    a.iter()
        .filter(|m| keep.contains(m.site_id.as_str()))
        .cloned()
        .collect()
}

/// Summary of a finished suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteRecord {
    pub software_version: String,
    pub family: Family,
    pub runs: Vec<SuiteEntry>,
    pub failed: usize,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteEntry {
    pub run_id: String,
    pub model_id: String,
    pub ok: bool,
}

pub struct SuiteOutput {
    pub record: SuiteRecord,
    pub manifests: Vec<RunManifest>,
    pub comparisons: Vec<ComparisonRow>,
    pub summary: String,
}

impl SuiteOutput {
    pub fn exit_code(&self) -> u8 {
        let failed: Vec<&RunManifest> = self.manifests.iter().filter(|m| !m.is_ok()).collect();
        if failed.is_empty() {
            exit::OK
        } else if failed.len() < self.manifests.len() {
            exit::PARTIAL
        } else if failed
            .iter()
            .all(|m| matches!(m.status, RunStatus::Failed { numeric: true, .. }))
        {
            exit::NUMERIC
        } else {
            exit::CONFIG
        }
    }
}

/// Plans, trains and evaluates a whole suite, writing all artifacts.
pub fn run_suite(data: &DataSource, plan: &SuitePlan, out: &Path, workers: usize) -> Result<SuiteOutput> {
    let jobs = plan.jobs(data)?;
    let results = execute_all(&jobs, data, workers)?;
    let runs_dir = out.join("runs");
    let mut manifests = Vec::with_capacity(results.len());
    for r in &results {
        manifests.push(r.write(&runs_dir.join(r.job.run_id()), data)?);
    }
    let cmp = compare(&results, plan.family, &plan.size_control, &plan.metrics);

    // Per-run comparison files hold the rows naming that run's model.
    let by_region = groups(&results);
    for (r, m) in results.iter().zip(&manifests) {
        if r.outcome.is_err() {
            continue;
        }
        let short = short_name(&r.job.spec);
        let region = r.job.spec.roi.as_ref().map(ToString::to_string);
        let rows: Vec<&ComparisonRow> = cmp
            .rows
            .iter()
            .filter(|c| {
                let (a, b) = c.models();
                let involved = a == short || b == short;
                let here = match &region {
                    Some(reg) => c.region == *reg,
                    None => by_region.contains_key(&c.region) || c.region == report::ALL,
                };
                involved && here
            })
            .collect();
        io::write_text(
            &runs_dir.join(&m.run_id).join(COMPARISONS),
            &report::comparisons_csv(rows),
        )?;
    }

    io::write_text(&out.join(COMPARISONS), &report::comparisons_csv(cmp.rows.iter()))?;
    io::write_text(&out.join(PAIRS), &report::pairs_csv(&cmp.pairs))?;
    let all_metrics: Vec<(String, SiteMetrics)> = results
        .iter()
        .filter_map(|r| r.outcome.as_ref().ok().map(|o| (r.job.spec.model_id(), o)))
        .flat_map(|(id, o)| o.metrics.iter().map(move |m| (id.clone(), m.clone())))
        .collect();
    io::write_text(&out.join(METRICS), &io::metrics_csv(&all_metrics))?;

    let mut notes = cmp.notes;
    notes.extend(manifests.iter().filter_map(|m| match &m.status {
        RunStatus::Failed { error, .. } => Some(format!("{} failed: {error}", m.model_id)),
        RunStatus::Ok { .. } => None,
    }));
    let record = SuiteRecord {
        software_version: VERSION.to_string(),
        family: plan.family,
        runs: manifests
            .iter()
            .map(|m| SuiteEntry {
                run_id: m.run_id.clone(),
                model_id: m.model_id.clone(),
                ok: m.is_ok(),
            })
            .collect(),
        failed: manifests.iter().filter(|m| !m.is_ok()).count(),
        notes,
    };
    let json = serde_json::to_string_pretty(&record).expect("record serializes");
    io::write_text(&out.join(SUITE), &(json + "\n"))?;
    let summary = report::render_text(&report::wide_table(&cmp.rows));
    io::write_text(&out.join(SUMMARY), &summary)?;
    Ok(SuiteOutput {
        record,
        manifests,
        comparisons: cmp.rows,
        summary,
    })
}

fn short_name(spec: &ExperimentSpec) -> String {
    match spec.scenario {
        Scenario::Global => "global".into(),
        Scenario::Local => "local".into(),
        s if spec.size_controlled => format!("{s}+sc"),
        s => s.to_string(),
    }
}

/// Re-executes the run a manifest describes, writing into `dir`.
pub fn rerun(manifest: &RunManifest, dir: &Path) -> Result<RunManifest> {
    let data = DataSource::from_origin(&manifest.data, &manifest.spec.data_fingerprint)?;
    let result = execute(&manifest.job(), &data);
    result.write(dir, &data)
}
