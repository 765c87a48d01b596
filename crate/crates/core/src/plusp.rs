//! Positive-P dynamics in the doubled phase space (α, β).

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::FieldOps;
use crate::lattice::HubbardModel;
use crate::stochastic::{
    integrate, run_ensemble, EnsembleConfig, EnsembleResult, MomentAccumulator, NoiseStream, Reduction, SdeScheme,
    SdeSystem, StepOutcome, TrajectoryModel, Workspace,
};

/// One sample of the doubled phase space.
#[derive(Debug, Clone, PartialEq)]
pub struct PlusPTrajectory {
    pub alpha: Vec<Complex64>,
    pub beta: Vec<Complex64>,
    /// Gauge weight Ω.
    pub weight: Complex64,
}

impl PlusPTrajectory {
    pub fn coherent(alpha: &[Complex64]) -> Self {
        Self {
            alpha: alpha.to_vec(),
            beta: alpha.iter().map(|a| a.conj()).collect(),
            weight: Complex64::new(1.0, 0.0),
        }
    }

    pub fn modes(&self) -> usize {
        self.alpha.len()
    }

    /// ∏ β_c ∏ α_a.
    pub fn product(&self, creation: &[usize], annihilation: &[usize]) -> Complex64 {
        let mut v = Complex64::new(1.0, 0.0);
        for &c in creation {
            v *= self.beta[c];
        }
        for &a in annihilation {
            v *= self.alpha[a];
        }
        v
    }
}

/// Product states the canonical sampler supports, one entry per mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "modes")]
pub enum PlusPState {
    Coherent(Vec<Complex64>),
    Thermal(Vec<f64>),
    Fock(Vec<u32>),
}

impl PlusPState {
    pub fn modes(&self) -> usize {
        match self {
            PlusPState::Coherent(v) => v.len(),
            PlusPState::Thermal(v) => v.len(),
            PlusPState::Fock(v) => v.len(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CanonicalWidth {
    /// γ = α − β* with E|γ|² = 4.
    #[default]
    Canonical,
    /// β = α* with no spread; coherent states only.
    Delta,
}

/// Draws (α, β) from the canonical positive-P distribution: μ from the Husimi
/// function, then α = μ + γ/2, β* = μ − γ/2.
pub fn sample_canonical(state: &PlusPState, width: CanonicalWidth, stream: &mut NoiseStream) -> Result<PlusPTrajectory> {
    if width == CanonicalWidth::Delta {
        return match state {
            PlusPState::Coherent(a) => Ok(PlusPTrajectory::coherent(a)),
            _ => Err(Error::Unsupported("delta sampling needs a coherent state".into())),
        };
    }
    let mu: Vec<Complex64> = match state {
        PlusPState::Coherent(a) => a.iter().map(|a| a + stream.complex_normal(1.0)).collect(),
        PlusPState::Thermal(n) => {
            if n.iter().any(|&v| !(v >= 0.0)) {
                return Err(Error::InvalidArgument("thermal occupations must be non-negative".into()));
            }
            n.iter().map(|&v| stream.complex_normal(v + 1.0)).collect()
        }
        PlusPState::Fock(n) => n
            .iter()
            .map(|&k| {
                let r2 = Gamma::new(k as f64 + 1.0, 1.0).expect("positive shape").sample(stream.rng());
                let phase = 2.0 * std::f64::consts::PI * stream.uniform();
                Complex64::from_polar(r2.sqrt(), phase)
            })
            .collect(),
    };
    let mut alpha = Vec::with_capacity(mu.len());
    let mut beta = Vec::with_capacity(mu.len());
    for m in mu {
        let g = stream.complex_normal(4.0);
        alpha.push(m + 0.5 * g);
        beta.push((m - 0.5 * g).conj());
    }
    Ok(PlusPTrajectory {
        alpha,
        beta,
        weight: Complex64::new(1.0, 0.0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Gauge {
    #[default]
    Identity,
}

/// +P SDE in the state vector (α₁..α_M, β₁..β_M).
#[derive(Debug, Clone)]
pub struct PlusPSystem {
    ops: FieldOps,
    /// B B^T = −iχ for α; B' B'^T = +iχ for β.
    noise_alpha: DMatrix<Complex64>,
    noise_beta: DMatrix<Complex64>,
    has_noise: bool,
    gauge: Gauge,
}

impl PlusPSystem {
    pub fn new(model: HubbardModel, gauge: Gauge) -> Self {
        let ops = FieldOps::new(model);
        let noise_alpha = ops.chi_root(Complex64::new(0.0, -1.0));
        let noise_beta = ops.chi_root(Complex64::new(0.0, 1.0));
        let has_noise = noise_alpha.iter().any(|v| v.norm() > 0.0);
        Self {
            ops,
            noise_alpha,
            noise_beta,
            has_noise,
            gauge,
        }
    }

    pub fn model(&self) -> &HubbardModel {
        self.ops.model()
    }

    pub fn gauge(&self) -> Gauge {
        self.gauge
    }

    pub fn modes(&self) -> usize {
        self.ops.modes()
    }
}

impl SdeSystem for PlusPSystem {
    fn dim(&self) -> usize {
        2 * self.ops.modes()
    }

    fn noise_count(&self) -> usize {
        if self.has_noise {
            2 * self.ops.modes()
        } else {
            0
        }
    }

    fn drift(&self, t: f64, x: &[Complex64], out: &mut [Complex64]) {
        let m = self.ops.modes();
        let (spins, cells) = (self.ops.spins(), self.ops.cells());
        let (a, b) = x.split_at(m);
        let (oa, ob) = out.split_at_mut(m);
        self.ops.coupling_linear(t, a, oa, false);
        self.ops.coupling_linear(t, b, ob, true);
        let i = Complex64::i();
        for s in 0..spins {
            for n in 0..cells {
                let k = s * cells + n;
                let shift = self.ops.interaction_shift(|j| a[j] * b[j], s, n);
                oa[k] = -i * (oa[k] + shift * a[k]);
                ob[k] = i * (ob[k] + shift * b[k]);
            }
        }
    }

    fn add_diffusion(&self, _t: f64, x: &[Complex64], xi: &[f64], out: &mut [Complex64]) {
        if !self.has_noise {
            return;
        }
        let m = self.ops.modes();
        let (spins, cells) = (self.ops.spins(), self.ops.cells());
        for s in 0..spins {
            for n in 0..cells {
                let k = s * cells + n;
                let mut na = Complex64::new(0.0, 0.0);
                let mut nb = Complex64::new(0.0, 0.0);
                for u in 0..spins {
                    na += self.noise_alpha[(s, u)] * xi[u * cells + n];
                    nb += self.noise_beta[(s, u)] * xi[m + u * cells + n];
                }
                out[k] += x[k] * na;
                out[m + k] += x[m + k] * nb;
            }
        }
    }

    fn add_stratonovich_shift(&self, _t: f64, x: &[Complex64], out: &mut [Complex64]) {
        let m = self.ops.modes();
        let (spins, cells) = (self.ops.spins(), self.ops.cells());
        let half_i = Complex64::new(0.0, 0.5);
        for s in 0..spins {
            let c = self.model().chi(s, s);
            for n in 0..cells {
                let k = s * cells + n;
                out[k] += half_i * c * x[k];
                out[m + k] -= half_i * c * x[m + k];
            }
        }
    }

    fn linear_flow(&self, x: &mut [Complex64], dt: f64) {
        let m = self.ops.modes();
        let (a, b) = x.split_at_mut(m);
        self.ops.linear_flow(a, dt, 1.0);
        self.ops.linear_flow(b, dt, -1.0);
    }

    fn has_linear_flow(&self) -> bool {
        self.ops.has_flow()
    }
}

/// Per-trajectory quantities. Complex ones occupy two slots (Re, Im).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum PlusPObservable {
    /// (α + β)/2
    X { mode: usize },
    /// (α − β)/2i
    Y { mode: usize },
    /// ∏β_c ∏α_a, the normally ordered ⟨a_c†···a_a⟩.
    Moment { creation: Vec<usize>, annihilation: Vec<usize> },
    /// |α|², a measure of the phase-space spread with no physical meaning.
    AlphaNorm { mode: usize },
}

impl PlusPObservable {
    fn width(&self) -> usize {
        match self {
            PlusPObservable::AlphaNorm { .. } => 1,
            _ => 2,
        }
    }

    fn max_mode(&self) -> usize {
        match self {
            PlusPObservable::X { mode } | PlusPObservable::Y { mode } | PlusPObservable::AlphaNorm { mode } => *mode,
            PlusPObservable::Moment { creation, annihilation } => {
                creation.iter().chain(annihilation).copied().max().unwrap_or(0)
            }
        }
    }

    fn value(&self, t: &PlusPTrajectory) -> Complex64 {
        match self {
            PlusPObservable::X { mode } => 0.5 * (t.alpha[*mode] + t.beta[*mode]),
            PlusPObservable::Y { mode } => (t.alpha[*mode] - t.beta[*mode]) / Complex64::new(0.0, 2.0),
            PlusPObservable::Moment { creation, annihilation } => t.product(creation, annihilation),
            PlusPObservable::AlphaNorm { mode } => Complex64::new(t.alpha[*mode].norm_sqr(), 0.0),
        }
    }
}

/// Mean of a complex estimator with separate error bars on each part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexEstimate {
    pub mean: Complex64,
    pub error_re: f64,
    pub error_im: f64,
}

/// Weighted average of ∏β_c ∏α_a over a set of samples (weights Re Ω).
pub fn normally_ordered_moment(samples: &[PlusPTrajectory], creation: &[usize], annihilation: &[usize]) -> Result<ComplexEstimate> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("empty ensemble".into()));
    }
    let modes = samples[0].modes();
    if creation.iter().chain(annihilation).any(|&k| k >= modes) {
        return Err(Error::InvalidArgument("moment index out of range".into()));
    }
    let mut acc = MomentAccumulator::new(2);
    for s in samples {
        let v = s.product(creation, annihilation);
        acc.push_weighted(s.weight.re, &[v.re, v.im]);
    }
    let (re, im) = (acc.estimate(0), acc.estimate(1));
    Ok(ComplexEstimate {
        mean: Complex64::new(re.mean, im.mean),
        error_re: re.error,
        error_im: im.error,
    })
}

/// A +P ensemble, optionally switching to the reversed Hamiltonian at `reverse_at`.
#[derive(Debug, Clone)]
pub struct PlusPEnsemble {
    pub forward: PlusPSystem,
    pub reversal: Option<(f64, PlusPSystem)>,
    pub scheme: SdeScheme,
    pub initial: PlusPState,
    pub width: CanonicalWidth,
    pub observables: Vec<PlusPObservable>,
}

impl PlusPEnsemble {
    pub fn new(system: PlusPSystem, scheme: SdeScheme, initial: PlusPState, width: CanonicalWidth, observables: Vec<PlusPObservable>) -> Result<Self> {
        if initial.modes() != system.modes() {
            return Err(Error::DimensionMismatch {
                what: "initial state",
                expected: system.modes(),
                found: initial.modes(),
            });
        }
        if width == CanonicalWidth::Delta && !matches!(initial, PlusPState::Coherent(_)) {
            return Err(Error::Unsupported("delta sampling needs a coherent state".into()));
        }
        if let Some(o) = observables.iter().find(|o| o.max_mode() >= system.modes()) {
            return Err(Error::InvalidArgument(format!("observable {o:?} refers to a missing mode")));
        }
        if !(scheme.dt > 0.0) {
            return Err(Error::InvalidArgument("time step must be positive".into()));
        }
        Ok(Self {
            forward: system,
            reversal: None,
            scheme,
            initial,
            width,
            observables,
        })
    }

    /// Evolve with the sign-flipped Hamiltonian after `at`.
    pub fn with_reversal(mut self, at: f64) -> Self {
        let rev = PlusPSystem::new(self.forward.model().reversed(), self.forward.gauge());
        self.reversal = Some((at, rev));
        self
    }

    /// Slot of each observable's first (real) entry in the result.
    pub fn slots(&self) -> Vec<usize> {
        let mut k = 0;
        self.observables
            .iter()
            .map(|o| {
                let s = k;
                k += o.width();
                s
            })
            .collect()
    }
}

/// Per-trajectory working state.
pub struct PlusPWork {
    traj: PlusPTrajectory,
    x: Vec<Complex64>,
    ws: Workspace,
}

impl TrajectoryModel for PlusPEnsemble {
    type State = PlusPWork;

    fn observables(&self) -> usize {
        self.observables.iter().map(|o| o.width()).sum()
    }

    fn initial(&self, stream: &mut NoiseStream) -> Self::State {
        let traj = sample_canonical(&self.initial, self.width, stream).expect("validated initial state");
        let mut x = traj.alpha.clone();
        x.extend_from_slice(&traj.beta);
        PlusPWork {
            traj,
            x,
            ws: Workspace::default(),
        }
    }

    fn advance(&self, state: &mut Self::State, t0: f64, t1: f64, stream: &mut NoiseStream) -> StepOutcome {
        let mut outcome = StepOutcome::Ok;
        let mut run = |sys: &PlusPSystem, a: f64, b: f64, x: &mut Vec<Complex64>, ws: &mut Workspace| {
            if b > a && outcome == StepOutcome::Ok {
                outcome = integrate(sys, &self.scheme, a, b, x, stream, ws);
            }
        };
        match &self.reversal {
            Some((tr, rev)) => {
                let split = tr.clamp(t0, t1);
                run(&self.forward, t0, split, &mut state.x, &mut state.ws);
                run(rev, split, t1, &mut state.x, &mut state.ws);
            }
            None => run(&self.forward, t0, t1, &mut state.x, &mut state.ws),
        }
        let m = self.forward.modes();
        state.traj.alpha.copy_from_slice(&state.x[..m]);
        state.traj.beta.copy_from_slice(&state.x[m..]);
        outcome
    }

    fn observe(&self, state: &Self::State, _t: f64, out: &mut [f64]) {
        let mut k = 0;
        for o in &self.observables {
            let v = o.value(&state.traj);
            out[k] = v.re;
            if o.width() == 2 {
                out[k + 1] = v.im;
            }
            k += o.width();
        }
    }

    fn weight(&self, state: &Self::State) -> f64 {
        state.traj.weight.re
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeReversalConfig {
    pub alpha0: Complex64,
    pub chi: f64,
    pub omega: f64,
    pub reverse_at: f64,
    /// Sampled times; the last one is the end of the run.
    pub times: Vec<f64>,
    pub trajectories: usize,
    pub dt: f64,
    pub seed: u64,
    pub width: CanonicalWidth,
    /// Error bar on ⟨X⟩ at the end above which the test is inconclusive.
    pub error_ceiling: f64,
}

impl Default for TimeReversalConfig {
    fn default() -> Self {
        Self {
            alpha0: Complex64::new(10.0, 0.0),
            chi: 0.01,
            omega: 0.0,
            reverse_at: 0.5,
            times: (0..=50).map(|k| 0.02 * k as f64).collect(),
            trajectories: 10_000,
            dt: 0.002,
            seed: 1,
            width: CanonicalWidth::Delta,
            error_ceiling: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeReversalReport {
    pub times: Vec<f64>,
    /// Re⟨X⟩ and its error bar.
    pub x_mean: Vec<f64>,
    pub x_error: Vec<f64>,
    pub x_imag: Vec<f64>,
    /// E|α|² − |E α|² over the ensemble.
    pub alpha_spread: Vec<f64>,
    pub diverged: Vec<usize>,
    /// |⟨X⟩(end) − X(0)|
    pub residual: f64,
    pub inconclusive: bool,
    pub result: EnsembleResult,
}

/// Forward to `reverse_at`, flip the Hamiltonian, continue to the last time.
pub fn time_reversal_test(cfg: &TimeReversalConfig) -> Result<TimeReversalReport> {
    let model = HubbardModel::single_mode(cfg.omega, cfg.chi);
    let system = PlusPSystem::new(model, Gauge::Identity);
    let obs = vec![
        PlusPObservable::X { mode: 0 },
        PlusPObservable::Moment {
            creation: vec![],
            annihilation: vec![0],
        },
        PlusPObservable::AlphaNorm { mode: 0 },
    ];
    let ens = PlusPEnsemble::new(system, SdeScheme::midpoint(cfg.dt), PlusPState::Coherent(vec![cfg.alpha0]), cfg.width, obs)?
        .with_reversal(cfg.reverse_at);
    let ens_cfg = EnsembleConfig {
        seed: cfg.seed,
        trajectories: cfg.trajectories,
        reduction: Reduction::Deterministic,
    };
    let result = run_ensemble(&ens, &cfg.times, &ens_cfg)?;
    let x_mean: Vec<f64> = result.estimates.iter().map(|e| e[0].mean).collect();
    let x_error: Vec<f64> = result.estimates.iter().map(|e| e[0].error).collect();
    let x_imag: Vec<f64> = result.estimates.iter().map(|e| e[1].mean).collect();
    let alpha_spread = result
        .estimates
        .iter()
        .map(|e| e[4].mean - Complex64::new(e[2].mean, e[3].mean).norm_sqr())
        .collect();
    let last = x_mean.len() - 1;
    let residual = (x_mean[last] - cfg.alpha0.re).abs();
    let inconclusive = !(x_error[last] <= cfg.error_ceiling) || result.unreliable;
    Ok(TimeReversalReport {
        times: cfg.times.clone(),
        x_mean,
        x_error,
        x_imag,
        alpha_spread,
        diverged: result.diverged.clone(),
        residual,
        inconclusive,
        result,
    })
}
