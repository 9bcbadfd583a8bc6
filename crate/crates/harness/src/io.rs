//! CSV file formats for datasets, generated worlds, metrics and training
//! logs.
//!
//! A dataset directory holds `sites.csv` (`site_id,region,<attrs>`),
//! `forcing.csv` (`site_id,date,<features>`, complete) and `target.csv`
//! (`site_id,date,value`, `NA` for missing). Numbers are written with the
//! shortest representation that parses back to the same value, so loading
//! and saving a canonical file reproduces it byte for byte.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use chrono::NaiveDate;
use sha2::{Digest, Sha256};
use synergy_core::data::{Dataset, Site};
use synergy_core::eval::SiteMetrics;
use synergy_core::region::{RegionCode, Taxonomy};
use synergy_core::synth::World;
use synergy_core::train::TrainLog;

use crate::error::{HarnessError, Result};

pub const SITES: &str = "sites.csv";
pub const FORCING: &str = "forcing.csv";
pub const TARGET: &str = "target.csv";
pub const LATENT_TRUTH: &str = "latent_truth.csv";
pub const TAXONOMY: &str = "taxonomy.csv";
pub const MISSING: &str = "NA";
const DATE_FMT: &str = "%Y-%m-%d";

struct Table {
    path: std::path::PathBuf,
    header: Vec<String>,
    rows: Vec<(u64, csv::StringRecord)>,
}

fn read_table(path: &Path, leading: &[&str]) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.len() < leading.len() || header.iter().zip(leading).any(|(h, want)| h != want) {
        return Err(HarnessError::format(
            path,
            1,
            format!("header must start with {}", leading.join(",")),
        ));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        rows.push((line, rec));
    }
    Ok(Table {
        path: path.to_path_buf(),
        header,
        rows,
    })
}

fn csv_error(path: &Path, e: csv::Error) -> HarnessError {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => HarnessError::io(path, io),
        kind => HarnessError::format(path, line, format!("{kind:?}")),
    }
}

impl Table {
    fn err(&self, line: u64, msg: impl Into<String>) -> HarnessError {
        HarnessError::format(&self.path, line, msg)
    }

    fn number(&self, line: u64, col: usize, cell: &str) -> Result<f64> {
        let v: f64 = cell
            .parse()
            .map_err(|_| self.err(line, format!("column {}: `{cell}` is not a number", self.header[col])))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(self.err(line, format!("column {}: non-finite value", self.header[col])))
        }
    }

    fn date(&self, line: u64, cell: &str) -> Result<NaiveDate> {
        NaiveDate::parse_from_str(cell, DATE_FMT)
            .map_err(|_| self.err(line, format!("`{cell}` is not an ISO-8601 date")))
    }
}

/// Reads a dataset directory, validating every file against the schema.
pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let sites_t = read_table(&dir.join(SITES), &["site_id", "region"])?;
    let attr_names = sites_t.header[2..].to_vec();
    let mut sites = Vec::with_capacity(sites_t.rows.len());
    let mut index: HashMap<String, usize> = HashMap::new();
    for (line, rec) in &sites_t.rows {
        let id = rec[0].to_string();
        let region = RegionCode::parse(&rec[1]).map_err(|e| sites_t.err(*line, e.to_string()))?;
        if !region.is_level3() {
            return Err(sites_t.err(*line, format!("region {region} is not a level-III code")));
        }
        let attrs = (2..rec.len())
            .map(|c| sites_t.number(*line, c, &rec[c]))
            .collect::<Result<Vec<_>>>()?;
        if index.insert(id.clone(), sites.len()).is_some() {
            return Err(sites_t.err(*line, format!("duplicate site id {id}")));
        }
        sites.push(Site {
            id,
            region,
            static_attrs: attrs,
            forcing: Vec::new(),
            target: Vec::new(),
        });
    }

    let forcing_t = read_table(&dir.join(FORCING), &["site_id", "date"])?;
    let feature_names = forcing_t.header[2..].to_vec();
    if feature_names.is_empty() {
        return Err(forcing_t.err(1, "no forcing columns"));
    }
    let mut dates: Vec<Vec<NaiveDate>> = vec![Vec::new(); sites.len()];
    for (line, rec) in &forcing_t.rows {
        let i = *index
            .get(&rec[0])
            .ok_or_else(|| forcing_t.err(*line, format!("unknown site id {}", &rec[0])))?;
        let date = forcing_t.date(*line, &rec[1])?;
        if dates[i].last().is_some_and(|d| *d >= date) {
            return Err(forcing_t.err(*line, format!("dates of site {} are not increasing", &rec[0])));
        }
        dates[i].push(date);
        for c in 2..rec.len() {
            if &rec[c] == MISSING {
                return Err(forcing_t.err(
                    *line,
                    format!("column {}: forcing must be complete", forcing_t.header[c]),
                ));
            }
            let v = forcing_t.number(*line, c, &rec[c])?;
            sites[i].forcing.push(v);
        }
    }
    let axis = dates.first().cloned().unwrap_or_default();
    for (i, d) in dates.iter().enumerate() {
        if *d != axis {
            return Err(forcing_t.err(
                0,
                format!(
                    "site {} has a time axis that differs from site {}",
                    sites[i].id, sites[0].id
                ),
            ));
        }
    }
    let pos: HashMap<NaiveDate, usize> = axis.iter().enumerate().map(|(t, d)| (*d, t)).collect();

    let target_t = read_table(&dir.join(TARGET), &["site_id", "date", "value"])?;
    if target_t.header.len() != 3 {
        return Err(target_t.err(1, "header must be site_id,date,value"));
    }
    let mut seen: Vec<Vec<bool>> = vec![vec![false; axis.len()]; sites.len()];
    for s in &mut sites {
        s.target = vec![None; axis.len()];
    }
    for (line, rec) in &target_t.rows {
        let i = *index
            .get(&rec[0])
            .ok_or_else(|| target_t.err(*line, format!("unknown site id {}", &rec[0])))?;
        let date = target_t.date(*line, &rec[1])?;
        let t = *pos
            .get(&date)
            .ok_or_else(|| target_t.err(*line, format!("date {date} is not on the forcing time axis")))?;
        if std::mem::replace(&mut seen[i][t], true) {
            return Err(target_t.err(*line, format!("duplicate row for site {} on {date}", &rec[0])));
        }
        sites[i].target[t] = if &rec[2] == MISSING {
            None
        } else {
            Some(target_t.number(*line, 2, &rec[2])?)
        };
    }
    if let Some((i, _)) = seen.iter().enumerate().find(|(_, s)| s.contains(&false)) {
        return Err(target_t.err(
            0,
            format!("site {} lacks target rows for part of the time axis", sites[i].id),
        ));
    }
    Ok(Dataset::new(sites, axis, feature_names, attr_names)?)
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

fn write_err(path: &Path) -> impl Fn(csv::Error) -> HarnessError + '_ {
    move |e| match e.into_kind() {
        csv::ErrorKind::Io(io) => HarnessError::io(path, io),
        kind => HarnessError::format(path, 0, format!("{kind:?}")),
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| MISSING.to_string(), |x| x.to_string())
}

fn write_sites<W: Write>(ds: &Dataset, w: W) -> csv::Result<()> {
    let mut w = csv_writer(w);
    let mut header = vec!["site_id".to_string(), "region".to_string()];
    header.extend(ds.attr_names().iter().cloned());
    w.write_record(&header)?;
    for s in ds.sites() {
        let mut row = vec![s.id.clone(), s.region.to_string()];
        row.extend(s.static_attrs.iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn write_forcing<W: Write>(ds: &Dataset, w: W) -> csv::Result<()> {
    let mut w = csv_writer(w);
    let mut header = vec!["site_id".to_string(), "date".to_string()];
    header.extend(ds.feature_names().iter().cloned());
    w.write_record(&header)?;
    for s in ds.sites() {
        for (t, d) in ds.time_axis().iter().enumerate() {
            let mut row = vec![s.id.clone(), d.format(DATE_FMT).to_string()];
            row.extend(s.forcing_at(t).iter().map(f64::to_string));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn write_target<W: Write>(ds: &Dataset, w: W) -> csv::Result<()> {
    let mut w = csv_writer(w);
    w.write_record(["site_id", "date", "value"])?;
    for s in ds.sites() {
        for (d, v) in ds.time_axis().iter().zip(&s.target) {
            w.write_record([s.id.clone(), d.format(DATE_FMT).to_string(), fmt_opt(*v)])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn create(path: &Path) -> Result<std::io::BufWriter<fs::File>> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| HarnessError::io(parent, e))?;
    }
    let f = fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    Ok(std::io::BufWriter::new(f))
}

/// Writes `sites.csv`, `forcing.csv` and `target.csv` into `dir`.
pub fn save_dataset(dir: &Path, ds: &Dataset) -> Result<()> {
    let p = dir.join(SITES);
    write_sites(ds, create(&p)?).map_err(write_err(&p))?;
    let p = dir.join(FORCING);
    write_forcing(ds, create(&p)?).map_err(write_err(&p))?;
    let p = dir.join(TARGET);
    write_target(ds, create(&p)?).map_err(write_err(&p))?;
    Ok(())
}

/// Content hash of the canonical file rendering of `ds`.
pub fn dataset_fingerprint(ds: &Dataset) -> String {
    let mut h = Sha256::new();
    let mut buf = Vec::new();
    write_sites(ds, &mut buf).expect("in-memory write");
    write_forcing(ds, &mut buf).expect("in-memory write");
    write_target(ds, &mut buf).expect("in-memory write");
    h.update(&buf);
    hex::encode(h.finalize())
}

/// Writes a generated world: the dataset files, `latent_truth.csv` and
/// `taxonomy.csv`.
pub fn save_world(dir: &Path, world: &World) -> Result<()> {
    save_dataset(dir, &world.dataset)?;
    let p = dir.join(LATENT_TRUTH);
    let mut w = csv_writer(create(&p)?);
    let res: csv::Result<()> = (|| {
        w.write_record(["site_id", "C", "k", "gamma", "beta"])?;
        for (id, l) in &world.truth {
            w.write_record([
                id.clone(),
                l.capacity.to_string(),
                l.recession.to_string(),
                l.exponent.to_string(),
                l.evaporation.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    })();
    res.map_err(write_err(&p))?;
    write_text(&dir.join(TAXONOMY), &world.taxonomy.to_csv())
}

pub fn load_taxonomy(path: &Path) -> Result<Taxonomy> {
    let text = read_text(path)?;
    Taxonomy::from_csv(&text).map_err(|e| HarnessError::format(path, 0, e.to_string()))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    write_bytes(path, text.as_bytes())
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = create(path)?;
    f.write_all(bytes)
        .and_then(|_| f.flush())
        .map_err(|e| HarnessError::io(path, e))
}

pub fn metrics_csv(rows: &[(String, SiteMetrics)]) -> String {
    let mut w = csv_writer(Vec::new());
    w.write_record(["site_id", "region", "model_id", "rmse", "corr", "nse", "n_obs"])
        .expect("in-memory write");
    for (model, m) in rows {
        w.write_record([
            m.site_id.clone(),
            m.region.to_string(),
            model.clone(),
            fmt_opt(m.rmse),
            fmt_opt(m.corr),
            fmt_opt(m.nse),
            m.n_obs.to_string(),
        ])
        .expect("in-memory write");
    }
    into_string(w)
}

/// Parses a metrics file back into `(model_id, metrics)` rows.
pub fn load_metrics(path: &Path) -> Result<Vec<(String, SiteMetrics)>> {
    let t = read_table(path, &["site_id", "region", "model_id", "rmse", "corr", "nse", "n_obs"])?;
    let opt = |line: u64, c: usize, cell: &str| -> Result<Option<f64>> {
        if cell == MISSING {
            Ok(None)
        } else {
            t.number(line, c, cell).map(Some)
        }
    };
    t.rows
        .iter()
        .map(|(line, r)| {
            Ok((
                r[2].to_string(),
                SiteMetrics {
                    site_id: r[0].to_string(),
                    region: RegionCode::parse(&r[1]).map_err(|e| t.err(*line, e.to_string()))?,
                    rmse: opt(*line, 3, &r[3])?,
                    corr: opt(*line, 4, &r[4])?,
                    nse: opt(*line, 5, &r[5])?,
                    n_obs: r[6]
                        .parse()
                        .map_err(|_| t.err(*line, format!("`{}` is not a count", &r[6])))?,
                },
            ))
        })
        .collect()
}

pub fn train_log_csv(log: &TrainLog) -> String {
    let mut w = csv_writer(Vec::new());
    w.write_record(["epoch", "mean_loss", "clip_events"])
        .expect("in-memory write");
    for e in &log.epochs {
        w.write_record([e.epoch.to_string(), e.mean_loss.to_string(), e.clip_events.to_string()])
            .expect("in-memory write");
    }
    into_string(w)
}

/// Renders rows of already-formatted cells as CSV.
pub fn rows_csv<S: AsRef<str>>(header: &[&str], rows: &[Vec<S>]) -> String {
    let mut w = csv_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r.iter().map(AsRef::as_ref)).expect("in-memory write");
    }
    into_string(w)
}

/// Reads any CSV as header plus rows of cells, keeping line numbers.
pub fn load_rows(path: &Path, header: &[&str]) -> Result<Vec<(u64, Vec<String>)>> {
    let t = read_table(path, header)?;
    if t.header.len() != header.len() {
        return Err(t.err(1, format!("header must be {}", header.join(","))));
    }
    Ok(t.rows
        .into_iter()
        .map(|(l, r)| (l, r.iter().map(str::to_string).collect()))
        .collect())
}

fn into_string(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory write")).expect("csv of utf-8 cells")
}
