use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::accumulate::{Estimate, MomentAccumulator};
use super::noise::NoiseStream;
use super::sde::StepOutcome;
use crate::error::{Error, Result};

/// Fraction of diverged trajectories above which a result is unreliable.
pub const UNRELIABLE_FRACTION: f64 = 0.01;

/// One stochastic trajectory type.
pub trait TrajectoryModel: Sync {
    type State: Send;
    fn observables(&self) -> usize;
    fn initial(&self, stream: &mut NoiseStream) -> Self::State;
    fn advance(&self, state: &mut Self::State, t0: f64, t1: f64, stream: &mut NoiseStream) -> StepOutcome;
    fn observe(&self, state: &Self::State, t: f64, out: &mut [f64]);
    fn weight(&self, _state: &Self::State) -> f64 {
        1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Reduction {
    /// Fixed chunking and in-order merging.
    #[default]
    Deterministic,
    /// Work-stealing fold and tree reduction.
    Fast,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub seed: u64,
    pub trajectories: usize,
    pub reduction: Reduction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    pub times: Vec<f64>,
    /// `estimates[time][observable]`
    pub estimates: Vec<Vec<Estimate>>,
    /// Trajectories contributing at each time.
    pub counts: Vec<u64>,
    /// Trajectories excluded at or before each time.
    pub diverged: Vec<usize>,
    pub trajectories: usize,
    pub unreliable: bool,
}

#[derive(Clone)]
struct Partial {
    acc: Vec<MomentAccumulator>,
    diverged: Vec<usize>,
}

impl Partial {
    fn new(times: usize, obs: usize) -> Self {
        Self {
            acc: vec![MomentAccumulator::new(obs); times],
            diverged: vec![0; times],
        }
    }

    fn merge(mut self, other: Partial) -> Partial {
        for (a, b) in self.acc.iter_mut().zip(&other.acc) {
            a.merge(b);
        }
        for (a, b) in self.diverged.iter_mut().zip(&other.diverged) {
            *a += b;
        }
        self
    }
}

fn run_one<M: TrajectoryModel>(model: &M, times: &[f64], seed: u64, index: usize, part: &mut Partial, buf: &mut [f64]) {
    let mut stream = NoiseStream::new(seed, index as u64);
    let mut state = model.initial(&mut stream);
    let mut t = 0.0;
    for (k, &tk) in times.iter().enumerate() {
        if model.advance(&mut state, t, tk, &mut stream) == StepOutcome::Diverged {
            for d in &mut part.diverged[k..] {
                *d += 1;
            }
            return;
        }
        t = tk;
        model.observe(&state, tk, buf);
        if buf.iter().any(|v| !v.is_finite()) {
            for d in &mut part.diverged[k..] {
                *d += 1;
            }
            return;
        }
        let w = model.weight(&state);
        part.acc[k].push_weighted(w, buf);
    }
}

/// Runs `cfg.trajectories` independent trajectories and records every
/// observable at each of `times` (non-decreasing, starting from t = 0).
pub fn run_ensemble<M: TrajectoryModel>(model: &M, times: &[f64], cfg: &EnsembleConfig) -> Result<EnsembleResult> {
    check(times, cfg)?;
    let total = run_range(model, times, cfg, 0..cfg.trajectories);
    Ok(finish(times, cfg.trajectories, total))
}

/// Like [`run_ensemble`] but splits the trajectories into `blocks` contiguous
/// index ranges and reports each block separately (for jackknife estimates).
/// The union of the blocks is the same ensemble `run_ensemble` would use.
pub fn run_ensemble_blocks<M: TrajectoryModel>(
    model: &M,
    times: &[f64],
    cfg: &EnsembleConfig,
    blocks: usize,
) -> Result<Vec<EnsembleResult>> {
    check(times, cfg)?;
    if blocks < 2 || blocks > cfg.trajectories / 2 {
        return Err(Error::InvalidArgument(format!(
            "{blocks} blocks do not fit {} trajectories",
            cfg.trajectories
        )));
    }
    let n = cfg.trajectories;
    Ok((0..blocks)
        .map(|b| {
            let range = b * n / blocks..(b + 1) * n / blocks;
            let len = range.len();
            finish(times, len, run_range(model, times, cfg, range))
        })
        .collect())
}

fn check(times: &[f64], cfg: &EnsembleConfig) -> Result<()> {
    if cfg.trajectories < 2 {
        return Err(Error::InvalidArgument("an ensemble needs at least two trajectories".into()));
    }
    if times.iter().any(|t| !(*t >= 0.0)) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("measurement times must be non-negative and sorted".into()));
    }
    Ok(())
}

fn run_range<M: TrajectoryModel>(model: &M, times: &[f64], cfg: &EnsembleConfig, range: std::ops::Range<usize>) -> Partial {
    let obs = model.observables();
    let nt = times.len();
    let one = |part: &mut Partial, i: usize, buf: &mut Vec<f64>| run_one(model, times, cfg.seed, i, part, buf);
    match cfg.reduction {
        Reduction::Fast => range
            .into_par_iter()
            .fold(
                || (Partial::new(nt, obs), vec![0.0; obs]),
                |(mut part, mut buf), i| {
                    one(&mut part, i, &mut buf);
                    (part, buf)
                },
            )
            .map(|(p, _)| p)
            .reduce(|| Partial::new(nt, obs), Partial::merge),
        Reduction::Deterministic => {
            const CHUNK: usize = 64;
            let start = range.start;
            let end = range.end;
            let chunks: Vec<Partial> = (0..(end - start).div_ceil(CHUNK))
                .into_par_iter()
                .map(|c| {
                    let mut part = Partial::new(nt, obs);
                    let mut buf = vec![0.0; obs];
                    for i in start + c * CHUNK..(start + (c + 1) * CHUNK).min(end) {
                        one(&mut part, i, &mut buf);
                    }
                    part
                })
                .collect();
            chunks.into_iter().fold(Partial::new(nt, obs), Partial::merge)
        }
    }
}

fn finish(times: &[f64], trajectories: usize, total: Partial) -> EnsembleResult {
    let worst = total.diverged.iter().copied().max().unwrap_or(0);
    let unreliable = worst as f64 > UNRELIABLE_FRACTION * trajectories as f64;
    if worst > 0 {
        log::warn!("{worst} of {trajectories} trajectories diverged");
    }
    EnsembleResult {
        times: times.to_vec(),
        estimates: total.acc.iter().map(|a| a.estimates()).collect(),
        counts: total.acc.iter().map(|a| a.count()).collect(),
        diverged: total.diverged,
        trajectories,
        unreliable,
    }
}
