//! Synthetic hydrologic world with a three-level region hierarchy.
//!
//! Each site is a single-bucket soil store driven by generated weather.
//! Its latent parameters are the sum of a global mean and one offset per
//! hierarchy level plus site noise. Capacity and recession rate are exposed
//! as noisy static attributes; the recession exponent and evaporation
//! efficiency stay hidden.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use chrono::NaiveDate;
use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Site};
use crate::region::{RegionCode, SubRegion, Taxonomy};
use crate::rng::{self, Stream};
use crate::{Error, Result};

pub const FEATURE_NAMES: [&str; 3] = ["precip", "pet", "temp"];
pub const ATTR_NAMES: [&str; 2] = ["capacity_obs", "recession_obs"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatentParams {
    /// Storage capacity.
    pub capacity: f64,
    /// Recession coefficient, 1/day.
    pub recession: f64,
    /// Recession exponent.
    pub exponent: f64,
    /// Evaporation efficiency.
    pub evaporation: f64,
}

impl LatentParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.capacity > 0.0
            && self.recession > 0.0
            && self.recession < 1.0
            && self.exponent >= 1.0
            && (0.0..=1.0).contains(&self.evaporation);
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("latent parameters out of range: {self:?}")))
        }
    }

    fn clamped(self) -> Self {
        Self {
            capacity: self.capacity.max(1.0),
            recession: self.recession.clamp(1e-3, 0.95),
            exponent: self.exponent.max(1.0),
            evaporation: self.evaporation.clamp(0.0, 1.0),
        }
    }

    fn offset(self, d: [f64; 4]) -> Self {
        Self {
            capacity: self.capacity + d[0],
            recession: self.recession + d[1],
            exponent: self.exponent + d[2],
            evaporation: self.evaporation + d[3],
        }
    }
}

/// Offset scales for one latent parameter: level I, II, III, then site.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelSigmas(pub [f64; 4]);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatentSigmas {
    pub capacity: LevelSigmas,
    pub recession: LevelSigmas,
    pub exponent: LevelSigmas,
    pub evaporation: LevelSigmas,
}

impl LatentSigmas {
    pub fn zero() -> Self {
        let z = LevelSigmas([0.0; 4]);
        Self {
            capacity: z,
            recession: z,
            exponent: z,
            evaporation: z,
        }
    }

    fn level(&self, i: usize) -> [f64; 4] {
        [
            self.capacity.0[i],
            self.recession.0[i],
            self.exponent.0[i],
            self.evaporation.0[i],
        ]
    }
}

/// Seasonal weather generator settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Climate {
    /// Mean daily wet-day probability.
    pub p_wet: f64,
    /// Relative seasonal amplitude of the wet-day probability.
    pub p_wet_amplitude: f64,
    /// Mean precipitation depth on wet days.
    pub depth_mean: f64,
    pub depth_amplitude: f64,
    pub pet_mean: f64,
    pub pet_amplitude: f64,
    pub pet_noise: f64,
    pub temp_mean: f64,
    pub temp_amplitude: f64,
    pub temp_noise: f64,
}

impl Default for Climate {
    fn default() -> Self {
        Self {
            p_wet: 0.3,
            p_wet_amplitude: 0.3,
            depth_mean: 8.0,
            depth_amplitude: 0.3,
            pet_mean: 3.0,
            pet_amplitude: 2.0,
            pet_noise: 0.3,
            temp_mean: 12.0,
            temp_amplitude: 10.0,
            temp_noise: 2.0,
        }
    }
}

/// Which simulated series becomes the target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    SoilWetness,
    Runoff,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldConfig {
    pub seed: u64,
    pub level1: usize,
    pub level2: usize,
    pub level3: usize,
    pub sites_per_region: usize,
    pub days: usize,
    pub start_date: NaiveDate,
    pub latent_mean: LatentParams,
    pub latent_sigma: LatentSigmas,
    pub climate: Climate,
    /// Relative level-I spread of wet-day probability, depth and PET.
    pub climate_sigma: f64,
    /// Log-scale noise on the exposed attributes.
    pub attr_noise: f64,
    pub obs_noise: f64,
    pub revisit_min: usize,
    pub revisit_max: usize,
    pub target: TargetKind,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            level1: 4,
            level2: 3,
            level3: 3,
            sites_per_region: 12,
            days: 730,
            start_date: NaiveDate::from_ymd_opt(2015, 4, 1).expect("valid date"),
            latent_mean: LatentParams {
                capacity: 150.0,
                recession: 0.05,
                exponent: 2.5,
                evaporation: 0.6,
            },
            latent_sigma: LatentSigmas {
                capacity: LevelSigmas([40.0, 20.0, 10.0, 5.0]),
                recession: LevelSigmas([0.02, 0.01, 0.005, 0.003]),
                exponent: LevelSigmas([0.3, 0.2, 0.2, 0.1]),
                evaporation: LevelSigmas([0.08, 0.05, 0.05, 0.03]),
            },
            climate: Climate::default(),
            climate_sigma: 0.25,
            attr_noise: 0.05,
            obs_noise: 0.01,
            revisit_min: 2,
            revisit_max: 3,
            target: TargetKind::SoilWetness,
        }
    }
}

impl WorldConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.level1 == 0 || self.level2 == 0 || self.level3 == 0 || self.sites_per_region == 0 {
            return bad("world region and site counts must be >= 1");
        }
        if self.days == 0 {
            return bad("world.days must be >= 1");
        }
        let sig = &self.latent_sigma;
        let all = [sig.capacity, sig.recession, sig.exponent, sig.evaporation];
        if all.iter().flat_map(|s| s.0).any(|s| !(s >= 0.0 && s.is_finite())) {
            return bad("offset scales must be finite and >= 0");
        }
        self.latent_mean.validate()?;
        if !(self.climate_sigma >= 0.0 && self.attr_noise >= 0.0 && self.obs_noise >= 0.0) {
            return bad("noise levels must be >= 0");
        }
        if self.revisit_min < 1 || self.revisit_min > self.revisit_max || self.revisit_max > self.days {
            return bad("revisit range must satisfy 1 <= min <= max <= days");
        }
        let c = &self.climate;
        if !(0.0..=1.0).contains(&c.p_wet) || c.depth_mean <= 0.0 {
            return bad("climate needs p_wet in [0,1] and depth_mean > 0");
        }
        Ok(())
    }

    pub fn n_sites(&self) -> usize {
        self.level1 * self.level2 * self.level3 * self.sites_per_region
    }
}

/// Generated world: the dataset, per-site true parameters (diagnostics
/// only), and a taxonomy grouping each level-II region under one letter.
#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub dataset: Dataset,
    pub truth: Vec<(String, LatentParams)>,
    pub taxonomy: Taxonomy,
}

fn normals4(rng: &mut Stream, scale: [f64; 4]) -> [f64; 4] {
    let mut out = [0.0; 4];
    for (o, s) in out.iter_mut().zip(scale) {
        let z: f64 = StandardNormal.sample(rng);
        *o = s * z;
    }
    out
}

/// Spreadsheet-style label: A..Z, AA, AB, ...
pub fn letter_label(mut i: usize) -> String {
    let mut out = Vec::new();
    loop {
        out.push(b'A' + (i % 26) as u8);
        if i < 26 {
            break;
        }
        i = i / 26 - 1;
    }
    out.reverse();
    String::from_utf8(out).expect("ascii")
}

pub fn gen_world(cfg: &WorldConfig) -> Result<World> {
    cfg.validate()?;
    let time_axis: Vec<NaiveDate> = (0..cfg.days as u64)
        .map(|d| cfg.start_date + chrono::Days::new(d))
        .collect();
    let mut sites = Vec::with_capacity(cfg.n_sites());
    let mut truth = Vec::with_capacity(cfg.n_sites());
    let mut letters = Vec::new();

    for i in 1..=cfg.level1 {
        let l1 = format!("S{i}");
        let mut r1 = rng::child(cfg.seed, &l1);
        let d1 = normals4(&mut r1, cfg.latent_sigma.level(0));
        let climate = regional_climate(&cfg.climate, cfg.climate_sigma, &mut r1);
        for j in 1..=cfg.level2 {
            let l2 = format!("{l1}.{j}");
            letters.push(SubRegion {
                letter: letter_label(letters.len()),
                members: vec![RegionCode::parse(&l2)?],
            });
            let d2 = normals4(&mut rng::child(cfg.seed, &l2), cfg.latent_sigma.level(1));
            for k in 1..=cfg.level3 {
                let l3 = format!("{l2}.{k}");
                let d3 = normals4(&mut rng::child(cfg.seed, &l3), cfg.latent_sigma.level(2));
                let region = RegionCode::parse(&l3)?;
                let region_latent = cfg.latent_mean.offset(d1).offset(d2).offset(d3);
                for n in 1..=cfg.sites_per_region {
                    let id = format!("{l3}-{n:03}");
                    let site_seed = rng::derive_seed(cfg.seed, &id);
                    let mut r = rng::child(site_seed, "latent");
                    let latent = region_latent
                        .offset(normals4(&mut r, cfg.latent_sigma.level(3)))
                        .clamped();
                    let attrs = observe_attrs(&latent, cfg.attr_noise, &mut r);
                    let forcing = gen_forcing(&mut rng::child(site_seed, "forcing"), cfg.days, &climate);
                    let sim = simulate_site(&latent, &forcing);
                    let series = match cfg.target {
                        TargetKind::SoilWetness => sim.soil_wetness,
                        TargetKind::Runoff => sim.runoff,
                    };
                    let target = observe_target(
                        &series,
                        cfg.revisit_min,
                        cfg.revisit_max,
                        cfg.obs_noise,
                        &mut rng::child(site_seed, "observe"),
                    );
                    sites.push(Site {
                        id: id.clone(),
                        region: region.clone(),
                        static_attrs: attrs,
                        forcing,
                        target,
                    });
                    truth.push((id, latent));
                }
            }
        }
    }
    let dataset = Dataset::new(
        sites,
        time_axis,
        FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        ATTR_NAMES.iter().map(|s| s.to_string()).collect(),
    )?;
    Ok(World {
        dataset,
        truth,
        taxonomy: Taxonomy::new(letters)?,
    })
}

fn regional_climate(base: &Climate, sigma: f64, rng: &mut Stream) -> Climate {
    let mut factor = || {
        let z: f64 = StandardNormal.sample(rng);
        libm::exp(sigma * z)
    };
    let wet = factor();
    let depth = factor();
    let pet = factor();
    Climate {
        p_wet: (base.p_wet * wet).clamp(0.0, 0.95),
        depth_mean: base.depth_mean * depth,
        pet_mean: base.pet_mean * pet,
        pet_amplitude: base.pet_amplitude * pet,
        ..*base
    }
}

fn observe_attrs(latent: &LatentParams, noise: f64, rng: &mut Stream) -> Vec<f64> {
    [latent.capacity, latent.recession]
        .iter()
        .map(|v| {
            let z: f64 = StandardNormal.sample(rng);
            v * libm::exp(noise * z)
        })
        .collect()
}

fn season(t: usize) -> f64 {
    libm::sin(2.0 * PI * t as f64 / 365.25)
}

/// `days x 3` forcing matrix, time-major: precipitation, potential
/// evapotranspiration, temperature.
pub fn gen_forcing(rng: &mut Stream, days: usize, climate: &Climate) -> Vec<f64> {
    let mut out = Vec::with_capacity(days * FEATURE_NAMES.len());
    for t in 0..days {
        let s = season(t);
        let p_wet = (climate.p_wet * (1.0 + climate.p_wet_amplitude * s)).clamp(0.0, 1.0);
        let wet = rng.random::<f64>() < p_wet;
        let mean_depth = (climate.depth_mean * (1.0 + climate.depth_amplitude * s)).max(1e-6);
        let precip = if wet {
            Exp::new(1.0 / mean_depth).expect("positive rate").sample(rng)
        } else {
            0.0
        };
        let zp: f64 = StandardNormal.sample(rng);
        let zt: f64 = StandardNormal.sample(rng);
        let pet = (climate.pet_mean + climate.pet_amplitude * s + climate.pet_noise * zp).max(0.0);
        let temp = climate.temp_mean + climate.temp_amplitude * s + climate.temp_noise * zt;
        out.extend_from_slice(&[precip, pet, temp]);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    /// Storage fraction at the start of each day.
    pub soil_wetness: Vec<f64>,
    /// Outflow each day, including spill above capacity.
    pub runoff: Vec<f64>,
    pub evaporation: Vec<f64>,
    pub initial_storage: f64,
    pub final_storage: f64,
}

/// Result of one daily bucket update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BucketStep {
    pub evaporation: f64,
    pub runoff: f64,
    pub storage: f64,
}

/// One day of the bucket: evaporation and recession from the current
/// storage, spill above capacity added to runoff. When outflow would drain
/// below empty, both outflows are scaled down so storage ends at zero.
pub fn bucket_step(latent: &LatentParams, storage: f64, precip: f64, pet: f64) -> BucketStep {
    let c = latent.capacity;
    let frac = storage / c;
    let mut evap = latent.evaporation * pet * frac;
    let mut runoff = latent.recession * c * libm::pow(frac, latent.exponent);
    let available = storage + precip;
    let outflow = evap + runoff;
    let mut next = available - outflow;
    if next < 0.0 {
        let scale = if outflow > 0.0 { available / outflow } else { 0.0 };
        evap *= scale;
        runoff *= scale;
        next = 0.0;
    }
    if next > c {
        runoff += next - c;
        next = c;
    }
    BucketStep {
        evaporation: evap,
        runoff,
        storage: next,
    }
}

pub fn simulate_site(latent: &LatentParams, forcing: &[f64]) -> Simulation {
    let f = FEATURE_NAMES.len();
    let days = forcing.len() / f;
    let initial = latent.capacity / 2.0;
    let mut storage = initial;
    let mut sim = Simulation {
        soil_wetness: Vec::with_capacity(days),
        runoff: Vec::with_capacity(days),
        evaporation: Vec::with_capacity(days),
        initial_storage: initial,
        final_storage: initial,
    };
    for row in forcing.chunks_exact(f) {
        sim.soil_wetness.push(storage / latent.capacity);
        let step = bucket_step(latent, storage, row[0], row[1]);
        sim.runoff.push(step.runoff);
        sim.evaporation.push(step.evaporation);
        storage = step.storage;
    }
    sim.final_storage = storage;
    sim
}

/// Keeps observations at cumulative gaps drawn uniformly from
/// `[revisit_min, revisit_max]`, starting at `first`, with additive
/// Gaussian noise on kept values.
pub fn observe_target_from(
    series: &[f64],
    first: usize,
    revisit_min: usize,
    revisit_max: usize,
    noise: f64,
    rng: &mut Stream,
) -> Vec<Option<f64>> {
    let mut out = vec![None; series.len()];
    let mut t = first;
    while t < series.len() {
        let z: f64 = if noise > 0.0 { StandardNormal.sample(rng) } else { 0.0 };
        out[t] = Some(series[t] + noise * z);
        t += rng.random_range(revisit_min..=revisit_max);
    }
    out
}

/// As [`observe_target_from`], with the first observation uniform in
/// `[0, revisit_min)`.
pub fn observe_target(
    series: &[f64],
    revisit_min: usize,
    revisit_max: usize,
    noise: f64,
    rng: &mut Stream,
) -> Vec<Option<f64>> {
    let first = rng.random_range(0..revisit_min);
    observe_target_from(series, first, revisit_min, revisit_max, noise, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::region::classify_neighbor;

    fn latent() -> LatentParams {
        LatentParams {
            capacity: 100.0,
            recession: 0.1,
            exponent: 2.0,
            evaporation: 1.0,
        }
    }

    #[test]
    fn bucket_hand_example() {
        let s = bucket_step(&latent(), 50.0, 10.0, 4.0);
        assert!((s.evaporation - 2.0).abs() < 1e-12);
        assert!((s.runoff - 2.5).abs() < 1e-12);
        assert!((s.storage - 55.5).abs() < 1e-12);
    }

    #[test]
    fn bucket_spill_and_drain() {
        let s = bucket_step(&latent(), 99.0, 50.0, 0.0);
        assert_eq!(s.storage, 100.0);
        assert!((s.runoff - 49.0).abs() < 1e-9);
        let dry = LatentParams {
            recession: 0.9,
            exponent: 1.0,
            ..latent()
        };
        let s = bucket_step(&dry, 10.0, 0.0, 50.0);
        assert_eq!(s.storage, 0.0);
        assert!((s.evaporation + s.runoff - 10.0).abs() < 1e-12);
    }

    #[test]
    fn no_inputs_never_fills() {
        let forcing: Vec<f64> = (0..200).flat_map(|_| [0.0, 0.0, 10.0]).collect();
        let sim = simulate_site(&latent(), &forcing);
        assert!(sim.soil_wetness.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn mass_balance() {
        let mut r = rng::stream(3);
        let forcing = gen_forcing(&mut r, 2000, &Climate::default());
        let sim = simulate_site(&latent(), &forcing);
        let p: f64 = forcing.chunks(3).map(|c| c[0]).sum();
        let e: f64 = sim.evaporation.iter().sum();
        let q: f64 = sim.runoff.iter().sum();
        let lhs = sim.final_storage - sim.initial_storage;
        assert!((lhs - (p - e - q)).abs() < 1e-9, "{lhs} vs {}", p - e - q);
        assert!(sim.soil_wetness.iter().all(|w| (0.0..=1.0).contains(w)));
        assert!(sim.runoff.iter().all(|q| *q >= 0.0));
    }

    #[test]
    fn forcing_edge_cases() {
        let dry = Climate {
            p_wet: 0.0,
            ..Climate::default()
        };
        let f = gen_forcing(&mut rng::stream(1), 400, &dry);
        assert!(f.chunks(3).all(|r| r[0] == 0.0));

        let quiet = Climate {
            pet_noise: 0.0,
            temp_noise: 0.0,
            ..Climate::default()
        };
        let f = gen_forcing(&mut rng::stream(1), 400, &quiet);
        for (t, r) in f.chunks(3).enumerate() {
            let expect = (quiet.pet_mean + quiet.pet_amplitude * season(t)).max(0.0);
            assert_eq!(r[1], expect);
        }
    }

    #[test]
    fn wet_day_fraction() {
        let c = Climate {
            p_wet: 0.3,
            p_wet_amplitude: 0.0,
            ..Climate::default()
        };
        let f = gen_forcing(&mut rng::stream(11), 36_500, &c);
        let wet = f.chunks(3).filter(|r| r[0] > 0.0).count() as f64 / 36_500.0;
        assert!((wet - 0.3).abs() < 0.01, "{wet}");
    }

    #[test]
    fn observation_patterns() {
        let series: Vec<f64> = (0..10).map(f64::from).collect();
        let mut r = rng::stream(0);
        let all = observe_target(&series, 1, 1, 0.0, &mut r);
        assert_eq!(all, series.iter().map(|v| Some(*v)).collect::<Vec<_>>());
        let every3 = observe_target_from(&series, 0, 3, 3, 0.0, &mut r);
        let idx: Vec<usize> = every3.iter().enumerate().filter_map(|(i, v)| v.map(|_| i)).collect();
        assert_eq!(idx, [0, 3, 6, 9]);
        let long = vec![0.0; 1000];
        let obs = observe_target(&long, 2, 3, 0.1, &mut r);
        let frac = obs.iter().filter(|v| v.is_some()).count() as f64 / 1000.0;
        assert!((1.0 / 3.0 - 0.002..=0.5 + 0.002).contains(&frac), "{frac}");
    }

    #[test]
    fn default_world_shape() {
        let cfg = WorldConfig::default();
        assert_eq!(cfg.n_sites(), 432);
        let small = WorldConfig {
            level1: 2,
            level2: 2,
            level3: 2,
            sites_per_region: 3,
            days: 40,
            ..WorldConfig::default()
        };
        let w = gen_world(&small).unwrap();
        assert_eq!(w.dataset.len(), 24);
        let regions: Vec<String> = w.dataset.regions().iter().map(|r| r.to_string()).collect();
        assert_eq!(regions.len(), 8);
        assert_eq!(regions[0], "S1.1.1");
        assert_eq!(regions[7], "S2.2.2");
        assert_eq!(w.taxonomy.entries().len(), 4);
        assert_eq!(w.dataset.n_time(), 40);
        assert_eq!(gen_world(&small).unwrap(), w);
        for s in w.dataset.sites() {
            let letter = &w.taxonomy.subregion_of(&s.region).unwrap().letter;
            let l2 = s.region.level2().unwrap();
            for t in w.dataset.sites() {
                if classify_neighbor(&s.region, &t.region).unwrap() <= crate::region::NeighborClass::Close {
                    assert_eq!(&w.taxonomy.subregion_of(&t.region).unwrap().letter, letter);
                    assert_eq!(t.region.level2().unwrap(), l2);
                }
            }
        }
    }

    #[test]
    fn degenerate_hierarchy() {
        let cfg = WorldConfig {
            level1: 2,
            level2: 2,
            level3: 2,
            sites_per_region: 2,
            days: 30,
            latent_sigma: LatentSigmas::zero(),
            attr_noise: 0.0,
            ..WorldConfig::default()
        };
        let w = gen_world(&cfg).unwrap();
        let first = w.truth[0].1;
        assert!(w.truth.iter().all(|(_, l)| *l == first));
        let a0 = &w.dataset.sites()[0].static_attrs;
        assert!(w.dataset.sites().iter().all(|s| &s.static_attrs == a0));
    }

    #[test]
    fn region_structure_of_latents() {
        let mut sig = WorldConfig::default().latent_sigma;
        for s in [
            &mut sig.capacity,
            &mut sig.recession,
            &mut sig.exponent,
            &mut sig.evaporation,
        ] {
            s.0[2] = 0.0;
            s.0[3] = 0.0;
        }
        let cfg = WorldConfig {
            level1: 2,
            level2: 2,
            level3: 2,
            sites_per_region: 3,
            days: 10,
            latent_sigma: sig,
            ..WorldConfig::default()
        };
        let w = gen_world(&cfg).unwrap();
        let sites = w.dataset.sites();
        for (i, a) in sites.iter().enumerate() {
            for (j, b) in sites.iter().enumerate() {
                let same3 = a.region == b.region;
                let same2 = a.region.level2() == b.region.level2();
                if same3 || same2 {
                    assert_eq!(w.truth[i].1, w.truth[j].1);
                }
            }
        }
        let distinct: alloc::collections::BTreeSet<u64> = w.truth.iter().map(|(_, l)| l.capacity.to_bits()).collect();
        assert_eq!(distinct.len(), 4);
    }

    #[test]
    fn adding_sites_keeps_other_regions_stable() {
        let base = WorldConfig {
            level1: 2,
            level2: 1,
            level3: 1,
            sites_per_region: 2,
            days: 20,
            ..WorldConfig::default()
        };
        let more = WorldConfig {
            sites_per_region: 3,
            ..base.clone()
        };
        let a = gen_world(&base).unwrap();
        let b = gen_world(&more).unwrap();
        assert_eq!(a.dataset.site("S2.1.1-001"), b.dataset.site("S2.1.1-001"));
    }

    #[test]
    fn invalid_configs() {
        let c = WorldConfig {
            level2: 0,
            ..Default::default()
        };
        assert!(gen_world(&c).is_err());
        let c = WorldConfig {
            revisit_min: 4,
            revisit_max: 3,
            ..Default::default()
        };
        assert!(gen_world(&c).is_err());
        let mut c = WorldConfig::default();
        c.latent_sigma.exponent.0[1] = -1.0;
        assert!(gen_world(&c).is_err());
    }

    #[test]
    fn labels() {
        assert_eq!(letter_label(0), "A");
        assert_eq!(letter_label(25), "Z");
        assert_eq!(letter_label(26), "AA");
    }
}
