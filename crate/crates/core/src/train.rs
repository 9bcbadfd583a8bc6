//! Minibatch window sampling, masked RMSE, AdaDelta, and the epoch loop.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::lstm::{self, ModelParams, NetworkDims};
use crate::rng::{self, Stream};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub hidden: usize,
    /// Window length in time steps.
    pub window: usize,
    pub batch: usize,
    pub epochs: usize,
    pub rho: f64,
    pub eps: f64,
    /// Global-norm clip threshold; `0` disables clipping.
    pub clip: f64,
    pub dropout: f64,
    /// Leading steps of each window excluded from the loss.
    pub warmup_skip: usize,
    /// Redraws allowed for a window with no observed target before it is
    /// accepted anyway.
    pub max_redraws: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden: 32,
            window: 30,
            batch: 100,
            epochs: 100,
            rho: 0.95,
            eps: 1e-6,
            clip: 5.0,
            dropout: 0.0,
            warmup_skip: 0,
            max_redraws: 10,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if self.hidden == 0 || self.window == 0 || self.batch == 0 || self.epochs == 0 {
            return bad("train.hidden, window, batch and epochs must be >= 1");
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return bad("train.rho must lie in (0, 1)");
        }
        if self.eps.is_nan() || self.eps <= 0.0 {
            return bad("train.eps must be > 0");
        }
        if self.clip.is_nan() || self.clip < 0.0 {
            return bad("train.clip must be >= 0");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("train.dropout must lie in [0, 1)");
        }
        if self.warmup_skip >= self.window {
            return bad("train.warmup_skip must be smaller than the window");
        }
        Ok(())
    }
}

/// Network inputs for a (normalized) dataset: per site an `T x D` matrix of
/// forcing with the static attributes appended at every step.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelInputs {
    pub input_size: usize,
    pub n_time: usize,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<Vec<Option<f64>>>,
}

impl ModelInputs {
    pub fn from_dataset(ds: &Dataset) -> Self {
        let f = ds.n_features();
        let d = f + ds.n_attrs();
        let t = ds.n_time();
        let x = ds
            .sites()
            .iter()
            .map(|s| {
                let mut m = Vec::with_capacity(t * d);
                for row in s.forcing.chunks_exact(f) {
                    m.extend_from_slice(row);
                    m.extend_from_slice(&s.static_attrs);
                }
                m
            })
            .collect();
        let y = ds.sites().iter().map(|s| s.target.clone()).collect();
        Self {
            input_size: d,
            n_time: t,
            x,
            y,
        }
    }

    pub fn n_sites(&self) -> usize {
        self.x.len()
    }

    pub fn window_x(&self, w: &Window, len: usize) -> &[f64] {
        let d = self.input_size;
        &self.x[w.site][w.start * d..(w.start + len) * d]
    }

    pub fn window_y(&self, w: &Window, len: usize) -> &[Option<f64>] {
        &self.y[w.site][w.start..w.start + len]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub site: usize,
    pub start: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minibatch {
    pub windows: Vec<Window>,
    /// Windows accepted with no observed target after exhausting redraws.
    pub empty_accepted: usize,
}

/// Draws `batch` windows of length `window`: sites uniformly with
/// replacement, starts uniformly in `[0, T - window]`. Windows with no
/// observed target past `skip` are redrawn up to `max_redraws` times.
pub fn sample_minibatch(
    inputs: &ModelInputs,
    window: usize,
    batch: usize,
    skip: usize,
    max_redraws: usize,
    rng: &mut Stream,
) -> Result<Minibatch> {
    if inputs.n_sites() == 0 {
        return Err(Error::Dataset("cannot sample from an empty dataset".into()));
    }
    if window == 0 || inputs.n_time < window {
        return Err(Error::Config(format!(
            "window length {window} exceeds the {} available time steps",
            inputs.n_time
        )));
    }
    let mut windows = Vec::with_capacity(batch);
    let mut empty_accepted = 0;
    for _ in 0..batch {
        let mut tries = 0;
        loop {
            let w = Window {
                site: rng.random_range(0..inputs.n_sites()),
                start: rng.random_range(0..=inputs.n_time - window),
            };
            let observed = inputs.window_y(&w, window)[skip..].iter().any(Option::is_some);
            if observed || tries == max_redraws {
                if !observed {
                    empty_accepted += 1;
                }
                windows.push(w);
                break;
            }
            tries += 1;
        }
    }
    Ok(Minibatch {
        windows,
        empty_accepted,
    })
}

/// RMSE over observed positions and its derivative with respect to every
/// prediction (zero at missing positions, and everywhere when the loss is 0).
pub fn masked_rmse_loss(yhat: &[f64], y: &[Option<f64>]) -> Result<(f64, Vec<f64>)> {
    if yhat.len() != y.len() {
        return Err(Error::Dimension(format!(
            "{} predictions for {} targets",
            yhat.len(),
            y.len()
        )));
    }
    let (n, sse) = yhat
        .iter()
        .zip(y)
        .filter_map(|(p, o)| o.map(|o| p - o))
        .fold((0usize, 0.0), |(n, s), e| (n + 1, s + e * e));
    if n == 0 {
        return Err(Error::NoObservations);
    }
    let loss = libm::sqrt(sse / n as f64);
    let scale = if loss > 0.0 { 1.0 / (n as f64 * loss) } else { 0.0 };
    let grad = yhat
        .iter()
        .zip(y)
        .map(|(p, o)| o.map_or(0.0, |o| (p - o) * scale))
        .collect();
    Ok((loss, grad))
}

/// Running averages of squared gradients and squared updates.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaDeltaState {
    pub sq_grad: Vec<f64>,
    pub sq_update: Vec<f64>,
}

impl AdaDeltaState {
    pub fn new(n: usize) -> Self {
        Self {
            sq_grad: vec![0.0; n],
            sq_update: vec![0.0; n],
        }
    }
}

/// One AdaDelta update, in place:
/// `E[g²] ← ρE[g²] + (1-ρ)g²`, `Δ = -sqrt(E[Δ²]+ε)/sqrt(E[g²]+ε)·g`,
/// `E[Δ²] ← ρE[Δ²] + (1-ρ)Δ²`, `x ← x + Δ`.
pub fn adadelta_step(params: &mut [f64], grads: &[f64], state: &mut AdaDeltaState, rho: f64, eps: f64) -> Result<()> {
    if params.len() != grads.len() || state.sq_grad.len() != grads.len() || state.sq_update.len() != grads.len() {
        return Err(Error::Dimension("optimizer shapes disagree".into()));
    }
    if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
        return Err(Error::Numeric {
            context: "adadelta step".into(),
            detail: format!("non-finite gradient at parameter {i}"),
        });
    }
    for (((x, &g), eg), ed) in params
        .iter_mut()
        .zip(grads)
        .zip(state.sq_grad.iter_mut())
        .zip(state.sq_update.iter_mut())
    {
        *eg = rho * *eg + (1.0 - rho) * g * g;
        let delta = -(libm::sqrt(*ed + eps) / libm::sqrt(*eg + eps)) * g;
        *ed = rho * *ed + (1.0 - rho) * delta * delta;
        *x += delta;
    }
    Ok(())
}

/// Rescales `grad` to norm `threshold` if it is larger; returns whether it
/// did.
pub fn clip_global_norm(grad: &mut ModelParams, threshold: f64) -> bool {
    if threshold <= 0.0 {
        return false;
    }
    let n = grad.norm();
    if n > threshold {
        grad.scale(threshold / n);
        true
    } else {
        false
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub mean_loss: f64,
    pub clip_events: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainLog {
    pub epochs: Vec<EpochRecord>,
    pub iterations: usize,
    pub empty_windows_accepted: usize,
}

/// `ceil(sites * T / (batch * window))`: one expected pass over the data.
pub fn iterations_per_epoch(n_sites: usize, n_time: usize, cfg: &TrainConfig) -> usize {
    (n_sites * n_time).div_ceil(cfg.batch * cfg.window).max(1)
}

fn at_iteration(iter: usize, e: Error) -> Error {
    match e {
        Error::Numeric { context, detail } => Error::Numeric {
            context: format!("iteration {iter}, {context}"),
            detail,
        },
        Error::NoObservations => Error::Numeric {
            context: format!("iteration {iter}"),
            detail: "minibatch has no observed targets".into(),
        },
        other => other,
    }
}

/// Trains on an already-normalized dataset. Deterministic given `cfg.seed`.
pub fn train(ds: &Dataset, cfg: &TrainConfig) -> Result<(ModelParams, TrainLog)> {
    train_inputs(&ModelInputs::from_dataset(ds), cfg)
}

pub fn train_inputs(inputs: &ModelInputs, cfg: &TrainConfig) -> Result<(ModelParams, TrainLog)> {
    cfg.validate()?;
    let dims = NetworkDims::new(inputs.input_size, cfg.hidden)?;
    let mut params = lstm::init_params(dims, &mut rng::child(cfg.seed, "init"));
    let mut sampler = rng::child(cfg.seed, "batches");
    let mut dropout_rng = rng::child(cfg.seed, "dropout");
    let mut state = AdaDeltaState::new(params.len());
    let mut grad = ModelParams::zeros(dims);
    let mut log = TrainLog::default();
    let per_epoch = iterations_per_epoch(inputs.n_sites(), inputs.n_time, cfg);
    let (len, h) = (cfg.window, cfg.hidden);
    let keep = 1.0 - cfg.dropout;

    let mut ys = Vec::with_capacity(cfg.batch * len);
    let mut masks: Vec<Vec<f64>> = Vec::new();

    for epoch in 1..=cfg.epochs {
        let mut loss_sum = 0.0;
        let mut clips = 0;
        for _ in 0..per_epoch {
            let iter = log.iterations;
            let batch = sample_minibatch(inputs, len, cfg.batch, cfg.warmup_skip, cfg.max_redraws, &mut sampler)?;
            log.empty_windows_accepted += batch.empty_accepted;
            ys.clear();
            let xs: Vec<&[f64]> = batch.windows.iter().map(|w| inputs.window_x(w, len)).collect();
            for w in &batch.windows {
                let obs = inputs.window_y(w, len);
                ys.extend(
                    obs.iter()
                        .enumerate()
                        .map(|(t, v)| if t < cfg.warmup_skip { None } else { *v }),
                );
            }
            let mask_refs: Vec<&[f64]>;
            let m = if cfg.dropout > 0.0 {
                masks.resize_with(xs.len(), || vec![0.0; len * h]);
                for mask in masks.iter_mut() {
                    for v in mask.iter_mut() {
                        *v = if dropout_rng.random::<f64>() < keep {
                            1.0 / keep
                        } else {
                            0.0
                        };
                    }
                }
                mask_refs = masks.iter().map(|m| &m[..]).collect();
                Some(&mask_refs[..])
            } else {
                None
            };
            let (yhat, cache) = lstm::forward_batch(&params, &xs, m).map_err(|e| at_iteration(iter, e))?;
            let (loss, dy) = masked_rmse_loss(&yhat, &ys).map_err(|e| at_iteration(iter, e))?;
            grad.fill(0.0);
            lstm::backward_into(&params, &cache, &dy, &mut grad)?;
            if clip_global_norm(&mut grad, cfg.clip) {
                clips += 1;
            }
            adadelta_step(params.values_mut(), grad.values(), &mut state, cfg.rho, cfg.eps)
                .map_err(|e| at_iteration(iter, e))?;
            loss_sum += loss;
            log.iterations += 1;
        }
        log.epochs.push(EpochRecord {
            epoch,
            mean_loss: loss_sum / per_epoch as f64,
            clip_events: clips,
        });
    }
    if !params.is_finite() {
        return Err(Error::Numeric {
            context: "end of training".into(),
            detail: "non-finite parameters".into(),
        });
    }
    Ok((params, log))
}

/// Masked RMSE of full-length predictions over every site.
pub fn sequence_rmse(params: &ModelParams, inputs: &ModelInputs) -> Result<f64> {
    let mut yhat = Vec::new();
    let mut ys = Vec::new();
    let xs: Vec<&[f64]> = inputs.x.iter().map(|x| &x[..]).collect();
    for (p, y) in lstm::predict_batch(params, &xs)?.into_iter().zip(&inputs.y) {
        yhat.extend(p);
        ys.extend_from_slice(y);
    }
    Ok(masked_rmse_loss(&yhat, &ys)?.0)
}
