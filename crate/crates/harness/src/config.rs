//! Sectioned `key = value` configuration with `#` comments.
//!
//! Sections are `world`, `train`, `experiment`, `eval` and `io`. Every key
//! maps to a typed field; unknown keys and sections are rejected. Seeds have
//! no defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::NaiveDate;
use synergy_core::data::DateRange;
use synergy_core::eval::Metric;
use synergy_core::experiment::Family;
use synergy_core::region::RegionCode;
use synergy_core::synth::{LevelSigmas, TargetKind, WorldConfig};
use synergy_core::train::TrainConfig;

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SizeControlMode {
    Off,
    On,
    Both,
}

impl SizeControlMode {
    pub fn variants(self) -> &'static [bool] {
        match self {
            Self::Off => &[false],
            Self::On => &[true],
            Self::Both => &[false, true],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub family: Family,
    /// Explicit ROIs; empty means every region with `min_roi_sites` sites.
    pub rois: Vec<RegionCode>,
    pub min_roi_sites: usize,
    pub size_control: SizeControlMode,
    /// Half-open windows; `None` splits the time axis in two halves.
    pub train_window: Option<DateRange>,
    pub test_window: Option<DateRange>,
    pub sampling_seed: Option<u64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            family: Family::GlobalLocal,
            rois: Vec::new(),
            min_roi_sites: 10,
            size_control: SizeControlMode::Off,
            train_window: None,
            test_window: None,
            sampling_seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    /// Steps run before the test window to spin up model state.
    pub warmup: usize,
    pub metrics: Vec<Metric>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            warmup: 30,
            metrics: vec![Metric::Rmse, Metric::Corr, Metric::Nse],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct IoConfig {
    /// `None` uses every available processor.
    pub workers: Option<usize>,
    /// Dataset directory; when absent the world is generated in memory.
    pub data_dir: Option<PathBuf>,
    /// Sub-region taxonomy; defaults to `taxonomy.csv` in the data
    /// directory, or the generated world's own taxonomy.
    pub taxonomy: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Config {
    /// Seed left at 0 here; see [`Config::world`].
    world: WorldConfig,
    world_seed: Option<u64>,
    train: TrainConfig,
    train_seed: Option<u64>,
    pub experiment: ExperimentConfig,
    pub eval: EvalConfig,
    pub io: IoConfig,
}

fn missing_seed(key: &str) -> HarnessError {
    HarnessError::Config(format!("missing required key {key}"))
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = crate::io::read_text(path)?;
        Self::parse(&text).map_err(|e| match e {
            HarnessError::Config(m) => HarnessError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let ini = ini::Ini::load_from_str_opt(
            text,
            ini::ParseOption {
                enabled_quote: false,
                enabled_escape: false,
                ..Default::default()
            },
        )
        .map_err(|e| HarnessError::Config(e.to_string()))?;
        let mut cfg = Config::default();
        for (name, props) in ini.iter() {
            let name = name.unwrap_or("");
            let mut sec = Section::new(name, props)?;
            match name {
                "world" => cfg.read_world(&mut sec)?,
                "train" => cfg.read_train(&mut sec)?,
                "experiment" => cfg.read_experiment(&mut sec)?,
                "eval" => cfg.read_eval(&mut sec)?,
                "io" => cfg.read_io(&mut sec)?,
                "" if sec.is_empty() => {}
                "" => return Err(HarnessError::Config("keys must appear inside a [section]".into())),
                other => return Err(HarnessError::Config(format!("unknown section [{other}]"))),
            }
            sec.finish()?;
        }
        Ok(cfg)
    }

    /// Replaces every seed.
    pub fn override_seeds(&mut self, seed: u64) {
        self.world_seed = Some(seed);
        self.train_seed = Some(seed);
        self.experiment.sampling_seed = Some(seed);
    }

    pub fn world(&self) -> Result<WorldConfig> {
        let seed = self.world_seed.ok_or_else(|| missing_seed("world.seed"))?;
        let w = WorldConfig {
            seed,
            ..self.world.clone()
        };
        w.validate()?;
        Ok(w)
    }

    pub fn train(&self) -> Result<TrainConfig> {
        let seed = self.train_seed.ok_or_else(|| missing_seed("train.seed"))?;
        let t = TrainConfig {
            seed,
            ..self.train.clone()
        };
        t.validate()?;
        Ok(t)
    }

    pub fn sampling_seed(&self) -> Result<u64> {
        self.experiment
            .sampling_seed
            .ok_or_else(|| missing_seed("experiment.sampling_seed"))
    }

    /// Train and test windows, defaulting to the two halves of `axis`.
    pub fn windows(&self, axis: &[NaiveDate]) -> Result<(DateRange, DateRange)> {
        let e = &self.experiment;
        let (train, test) = match (e.train_window, e.test_window) {
            (Some(a), Some(b)) => (a, b),
            (None, None) => {
                if axis.len() < 2 {
                    return Err(HarnessError::Config("time axis too short to split".into()));
                }
                let mid = axis.len() / 2;
                let end = *axis.last().expect("non-empty") + chrono::Days::new(1);
                (DateRange::new(axis[0], axis[mid])?, DateRange::new(axis[mid], end)?)
            }
            _ => {
                return Err(HarnessError::Config(
                    "set both train and test windows or neither".into(),
                ))
            }
        };
        if train.overlaps(&test) {
            return Err(HarnessError::Config("train and test windows overlap".into()));
        }
        for (name, w) in [("train", &train), ("test", &test)] {
            let r = w
                .indices(axis)
                .map_err(|e| HarnessError::Config(format!("{name} window: {e}")))?;
            if r.is_empty() {
                return Err(HarnessError::Config(format!("{name} window holds no days of the data")));
            }
        }
        Ok((train, test))
    }

    fn read_world(&mut self, s: &mut Section) -> Result<()> {
        let w = &mut self.world;
        s.opt("seed", &mut self.world_seed)?;
        s.take("level1", &mut w.level1)?;
        s.take("level2", &mut w.level2)?;
        s.take("level3", &mut w.level3)?;
        s.take("sites_per_region", &mut w.sites_per_region)?;
        s.take("days", &mut w.days)?;
        s.take("start_date", &mut w.start_date)?;
        s.take_with("target", &mut w.target, |v| match v {
            "soil_wetness" => Some(TargetKind::SoilWetness),
            "runoff" => Some(TargetKind::Runoff),
            _ => None,
        })?;
        let m = &mut w.latent_mean;
        s.take("capacity_mean", &mut m.capacity)?;
        s.take("recession_mean", &mut m.recession)?;
        s.take("exponent_mean", &mut m.exponent)?;
        s.take("evaporation_mean", &mut m.evaporation)?;
        let sg = &mut w.latent_sigma;
        for (key, dst) in [
            ("capacity_sigma", &mut sg.capacity),
            ("recession_sigma", &mut sg.recession),
            ("exponent_sigma", &mut sg.exponent),
            ("evaporation_sigma", &mut sg.evaporation),
        ] {
            s.take_with(key, dst, |v| {
                let xs: Vec<f64> = v.split(',').map(|x| x.trim().parse().ok()).collect::<Option<_>>()?;
                Some(LevelSigmas(xs.try_into().ok()?))
            })?;
        }
        s.take("climate_sigma", &mut w.climate_sigma)?;
        s.take("attr_noise", &mut w.attr_noise)?;
        s.take("obs_noise", &mut w.obs_noise)?;
        s.take("revisit_min", &mut w.revisit_min)?;
        s.take("revisit_max", &mut w.revisit_max)?;
        let c = &mut w.climate;
        s.take("p_wet", &mut c.p_wet)?;
        s.take("p_wet_amplitude", &mut c.p_wet_amplitude)?;
        s.take("depth_mean", &mut c.depth_mean)?;
        s.take("depth_amplitude", &mut c.depth_amplitude)?;
        s.take("pet_mean", &mut c.pet_mean)?;
        s.take("pet_amplitude", &mut c.pet_amplitude)?;
        s.take("pet_noise", &mut c.pet_noise)?;
        s.take("temp_mean", &mut c.temp_mean)?;
        s.take("temp_amplitude", &mut c.temp_amplitude)?;
        s.take("temp_noise", &mut c.temp_noise)
    }

    fn read_train(&mut self, s: &mut Section) -> Result<()> {
        let t = &mut self.train;
        s.opt("seed", &mut self.train_seed)?;
        s.take("hidden", &mut t.hidden)?;
        s.take("window", &mut t.window)?;
        s.take("batch", &mut t.batch)?;
        s.take("epochs", &mut t.epochs)?;
        s.take("rho", &mut t.rho)?;
        s.take("eps", &mut t.eps)?;
        s.take("clip", &mut t.clip)?;
        s.take("dropout", &mut t.dropout)?;
        s.take("warmup_skip", &mut t.warmup_skip)?;
        s.take("max_redraws", &mut t.max_redraws)
    }

    fn read_experiment(&mut self, s: &mut Section) -> Result<()> {
        let e = &mut self.experiment;
        s.take_with("family", &mut e.family, Family::parse)?;
        s.take_with("rois", &mut e.rois, |v| {
            v.split(',')
                .map(str::trim)
                .filter(|x| !x.is_empty())
                .map(|x| RegionCode::parse(x).ok().filter(RegionCode::is_level3))
                .collect()
        })?;
        s.take("min_roi_sites", &mut e.min_roi_sites)?;
        s.take_with("size_controlled", &mut e.size_control, |v| match v {
            "false" | "off" => Some(SizeControlMode::Off),
            "true" | "on" => Some(SizeControlMode::On),
            "both" => Some(SizeControlMode::Both),
            _ => None,
        })?;
        let mut dates: [Option<NaiveDate>; 4] = [None; 4];
        for (key, d) in ["train_start", "train_end", "test_start", "test_end"]
            .iter()
            .zip(&mut dates)
        {
            s.opt(key, d)?;
        }
        let window = |a: Option<NaiveDate>, b: Option<NaiveDate>, name: &str| -> Result<Option<DateRange>> {
            match (a, b) {
                (Some(a), Some(b)) => DateRange::new(a, b)
                    .map(Some)
                    .map_err(|e| HarnessError::Config(format!("{name} window: {e}"))),
                (None, None) => Ok(None),
                _ => Err(HarnessError::Config(format!("{name}_start and {name}_end go together"))),
            }
        };
        e.train_window = window(dates[0], dates[1], "train")?;
        e.test_window = window(dates[2], dates[3], "test")?;
        s.opt("sampling_seed", &mut e.sampling_seed)
    }

    fn read_eval(&mut self, s: &mut Section) -> Result<()> {
        s.take("warmup", &mut self.eval.warmup)?;
        s.take_with("metrics", &mut self.eval.metrics, |v| {
            let m: Vec<Metric> = v.split(',').map(|x| Metric::parse(x.trim())).collect::<Option<_>>()?;
            (!m.is_empty()).then_some(m)
        })
    }

    fn read_io(&mut self, s: &mut Section) -> Result<()> {
        s.take_with("workers", &mut self.io.workers, |v| {
            v.parse().ok().filter(|n: &usize| *n >= 1).map(Some)
        })?;
        s.opt("data_dir", &mut self.io.data_dir)?;
        s.opt("taxonomy", &mut self.io.taxonomy)
    }
}

struct Section {
    name: String,
    keys: BTreeMap<String, String>,
}

impl Section {
    fn new(name: &str, props: &ini::Properties) -> Result<Self> {
        let mut keys = BTreeMap::new();
        for (k, v) in props.iter() {
            if keys.insert(k.to_string(), v.trim().to_string()).is_some() {
                return Err(HarnessError::Config(format!("duplicate key {name}.{k}")));
            }
        }
        Ok(Self {
            name: name.to_string(),
            keys,
        })
    }

    fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    fn invalid(&self, key: &str, value: &str) -> HarnessError {
        HarnessError::Config(format!("invalid value `{value}` for {}.{key}", self.name))
    }

    fn take_with<T>(&mut self, key: &str, dst: &mut T, parse: impl FnOnce(&str) -> Option<T>) -> Result<()> {
        if let Some(v) = self.keys.remove(key) {
            *dst = parse(&v).ok_or_else(|| self.invalid(key, &v))?;
        }
        Ok(())
    }

    fn take<T: FromStr>(&mut self, key: &str, dst: &mut T) -> Result<()> {
        self.take_with(key, dst, |v| v.parse().ok())
    }

    fn opt<T: FromStr>(&mut self, key: &str, dst: &mut Option<T>) -> Result<()> {
        self.take_with(key, dst, |v| v.parse().ok().map(Some))
    }

    fn finish(self) -> Result<()> {
        match self.keys.keys().next() {
            Some(k) => Err(HarnessError::Config(format!("unknown key {}.{k}", self.name))),
            None => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = "\
# comment
[world]
seed = 7
days = 100
capacity_sigma = 1,2,3,4
target = runoff

[train]
seed = 3
hidden = 8
epochs = 2

[experiment]
family = similar_dissimilar
rois = 1.1.1, 2.1.3
size_controlled = both
sampling_seed = 11
train_start = 2015-04-01
train_end = 2015-05-01
test_start = 2015-05-01
test_end = 2015-07-01

[eval]
warmup = 10
metrics = rmse, nse

[io]
workers = 2
";

    #[test]
    fn parses_every_section() {
        let c = Config::parse(FULL).unwrap();
        let w = c.world().unwrap();
        assert_eq!((w.seed, w.days, w.target), (7, 100, TargetKind::Runoff));
        assert_eq!(w.latent_sigma.capacity.0, [1.0, 2.0, 3.0, 4.0]);
        let t = c.train().unwrap();
        assert_eq!((t.seed, t.hidden, t.epochs, t.window), (3, 8, 2, 30));
        assert_eq!(c.experiment.family, Family::SimilarDissimilar);
        assert_eq!(c.experiment.rois.len(), 2);
        assert_eq!(c.experiment.size_control, SizeControlMode::Both);
        assert_eq!(c.sampling_seed().unwrap(), 11);
        assert_eq!(c.eval.warmup, 10);
        assert_eq!(c.eval.metrics, [Metric::Rmse, Metric::Nse]);
        assert_eq!(c.io.workers, Some(2));
    }

    #[test]
    fn rejects_unknown_and_bad_values() {
        for text in [
            "[world]\nseeds = 1\n",
            "[wrld]\nseed = 1\n",
            "seed = 1\n",
            "[train]\nepochs = many\n",
            "[experiment]\nrois = 1.1\n",
            "[experiment]\ntrain_start = 2015-01-01\n",
            "[io]\nworkers = 0\n",
            "[train]\nseed = 1\nseed = 2\n",
        ] {
            assert!(matches!(Config::parse(text), Err(HarnessError::Config(_))), "{text}");
        }
    }

    #[test]
    fn seeds_are_required_and_overridable() {
        let mut c = Config::parse("[world]\ndays = 10\n").unwrap();
        assert!(c.world().unwrap_err().to_string().contains("world.seed"));
        assert!(c.train().is_err());
        assert!(c.sampling_seed().is_err());
        c.override_seeds(5);
        assert_eq!(c.world().unwrap().seed, 5);
        assert_eq!(c.train().unwrap().seed, 5);
        assert_eq!(c.sampling_seed().unwrap(), 5);
    }

    #[test]
    fn default_windows_split_axis() {
        let c = Config::default();
        let axis: Vec<NaiveDate> = (0..10)
            .map(|i| NaiveDate::from_ymd_opt(2020, 1, 1).unwrap() + chrono::Days::new(i))
            .collect();
        let (a, b) = c.windows(&axis).unwrap();
        assert_eq!(a.indices(&axis).unwrap(), 0..5);
        assert_eq!(b.indices(&axis).unwrap(), 5..10);
    }
}
