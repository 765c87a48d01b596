//! Truncated-Wigner c-field dynamics with collisional losses.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::FieldOps;
use crate::lattice::HubbardModel;
use crate::spin::xi_squared;
use crate::stochastic::{
    integrate, run_ensemble_blocks, EnsembleConfig, EnsembleResult, NoiseStream, SdeScheme, SdeSystem, StepOutcome,
    TrajectoryModel, Workspace,
};

/// Largest number of spin components the Wigner engine handles.
pub const MAX_SPINS: usize = 8;

/// Local p-body loss with O = ∏_s φ_s^{l_s}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossChannel {
    /// Number of particles of each spin taking part.
    pub multiplicity: Vec<u32>,
    pub rate: f64,
}

impl LossChannel {
    pub fn one_body(spins: usize, s: usize, rate: f64) -> Self {
        let mut multiplicity = vec![0; spins];
        multiplicity[s] = 1;
        Self { multiplicity, rate }
    }

    pub fn two_body(spins: usize, s: usize, u: usize, rate: f64) -> Self {
        let mut multiplicity = vec![0; spins];
        multiplicity[s] += 1;
        multiplicity[u] += 1;
        Self { multiplicity, rate }
    }

    pub fn order(&self) -> u32 {
        self.multiplicity.iter().sum()
    }

    fn validate(&self, spins: usize) -> Result<()> {
        if self.multiplicity.len() != spins {
            return Err(Error::DimensionMismatch {
                what: "loss multiplicity",
                expected: spins,
                found: self.multiplicity.len(),
            });
        }
        if self.order() < 1 {
            return Err(Error::InvalidArgument("a loss channel removes at least one particle".into()));
        }
        if !(self.rate >= 0.0) {
            return Err(Error::InvalidArgument("loss rates must be non-negative".into()));
        }
        Ok(())
    }

    /// Derivatives of the monomial with respect to the listed spins.
    fn derivative(&self, phi: &[Complex64], wrt: &[usize]) -> Complex64 {
        let mut v = Complex64::new(1.0, 0.0);
        for (u, (p, &l)) in phi.iter().zip(&self.multiplicity).enumerate() {
            let mut e = l;
            for &s in wrt {
                if s == u {
                    if e == 0 {
                        return Complex64::new(0.0, 0.0);
                    }
                    v *= e as f64;
                    e -= 1;
                }
            }
            if e > 0 {
                v *= p.powu(e);
            }
        }
        v
    }
}

/// Wigner SDE of a Bose-Hubbard lattice in mode amplitudes.
#[derive(Debug, Clone)]
pub struct WignerSystem {
    ops: FieldOps,
    losses: Vec<LossChannel>,
    vacuum_correction: bool,
    offsets: Vec<f64>,
}

impl WignerSystem {
    /// With `vacuum_correction` the interaction and loss drifts use the
    /// symmetrically ordered forms, e.g. χ_ss (|α_s|² − 1) and χ_su (|α_u|² − ½).
    pub fn new(model: HubbardModel, losses: Vec<LossChannel>, vacuum_correction: bool) -> Result<Self> {
        let spins = model.lattice().spin_count();
        if spins > MAX_SPINS {
            return Err(Error::Unsupported(format!("at most {MAX_SPINS} spin components")));
        }
        for l in &losses {
            l.validate(spins)?;
        }
        let offsets = (0..spins)
            .map(|s| {
                if !vacuum_correction {
                    return 0.0;
                }
                (0..spins)
                    .map(|u| if u == s { model.chi(s, s) } else { 0.5 * model.chi(s, u) })
                    .sum()
            })
            .collect();
        Ok(Self {
            ops: FieldOps::new(model),
            losses,
            vacuum_correction,
            offsets,
        })
    }

    pub fn model(&self) -> &HubbardModel {
        self.ops.model()
    }

    pub fn losses(&self) -> &[LossChannel] {
        &self.losses
    }

    pub fn vacuum_correction(&self) -> bool {
        self.vacuum_correction
    }

    fn hamiltonian_drift(&self, t: f64, x: &[Complex64], out: &mut [Complex64]) {
        let (spins, cells) = (self.ops.spins(), self.ops.cells());
        self.ops.coupling_linear(t, x, out, false);
        for s in 0..spins {
            for n in 0..cells {
                let m = s * cells + n;
                let shift = self.ops.interaction_shift(|j| Complex64::new(x[j].norm_sqr(), 0.0), s, n) - self.offsets[s];
                out[m] = -Complex64::i() * (out[m] + shift * x[m]);
            }
        }
    }

    fn loss_drift(&self, x: &[Complex64], out: &mut [Complex64]) {
        let cells = self.ops.cells();
        for l in &self.losses {
            if l.rate == 0.0 {
                continue;
            }
            for n in 0..cells {
                let buf = self.site_field(x, n);
                let phi = &buf[..self.ops.spins()];
                if self.vacuum_correction {
                    for s in 0..phi.len() {
                        if l.multiplicity[s] == 0 {
                            continue;
                        }
                        let mut v = Complex64::new(l.multiplicity[s] as f64, 0.0);
                        for (u, p) in phi.iter().enumerate() {
                            let k = l.multiplicity[u];
                            v *= normal_symbol(if u == s { k - 1 } else { k }, k, *p);
                        }
                        out[s * cells + n] -= l.rate * v;
                    }
                } else {
                    let o = l.derivative(&phi, &[]);
                    for s in 0..phi.len() {
                        out[s * cells + n] -= l.rate * l.derivative(&phi, &[s]).conj() * o;
                    }
                }
            }
        }
    }

    fn site_field(&self, x: &[Complex64], n: usize) -> [Complex64; MAX_SPINS] {
        let mut phi = [Complex64::new(0.0, 0.0); MAX_SPINS];
        for (s, p) in phi.iter_mut().enumerate().take(self.ops.spins()) {
            *p = x[s * self.ops.cells() + n];
        }
        phi
    }
}

impl SdeSystem for WignerSystem {
    fn dim(&self) -> usize {
        self.ops.modes()
    }

    fn noise_count(&self) -> usize {
        2 * self.ops.cells() * self.losses.len()
    }

    fn drift(&self, t: f64, x: &[Complex64], out: &mut [Complex64]) {
        self.hamiltonian_drift(t, x, out);
        self.loss_drift(x, out);
    }

    fn add_diffusion(&self, _t: f64, x: &[Complex64], xi: &[f64], out: &mut [Complex64]) {
        let cells = self.ops.cells();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        for (c, l) in self.losses.iter().enumerate() {
            let amp = l.rate.sqrt();
            for n in 0..cells {
                let k = 2 * (c * cells + n);
                let zeta = Complex64::new(r * xi[k], r * xi[k + 1]);
                let buf = self.site_field(x, n);
                let phi = &buf[..self.ops.spins()];
                for s in 0..phi.len() {
                    if l.multiplicity[s] > 0 {
                        out[s * cells + n] += amp * l.derivative(&phi, &[s]).conj() * zeta;
                    }
                }
            }
        }
    }

    fn add_stratonovich_shift(&self, _t: f64, x: &[Complex64], out: &mut [Complex64]) {
        let cells = self.ops.cells();
        for l in &self.losses {
            if l.rate == 0.0 || l.order() < 2 {
                continue;
            }
            for n in 0..cells {
                let buf = self.site_field(x, n);
                let phi = &buf[..self.ops.spins()];
                for s in 0..phi.len() {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for u in 0..phi.len() {
                        acc += l.derivative(&phi, &[u]) * l.derivative(&phi, &[u, s]).conj();
                    }
                    out[s * cells + n] -= 0.5 * l.rate * acc;
                }
            }
        }
    }

    fn linear_flow(&self, x: &mut [Complex64], dt: f64) {
        self.ops.linear_flow(x, dt, 1.0);
    }

    fn has_linear_flow(&self) -> bool {
        self.ops.has_flow()
    }
}

/// Wigner symbol of the normally ordered a†^m a^n.
fn normal_symbol(m: u32, n: u32, z: Complex64) -> Complex64 {
    let mut total = Complex64::new(0.0, 0.0);
    let mut c = 1.0;
    for k in 0..=m.min(n) {
        if k > 0 {
            c *= -0.5 * ((m - k + 1) * (n - k + 1)) as f64 / k as f64;
        }
        total += c * z.conj().powu(m - k) * z.powu(n - k);
    }
    total
}

/// α = α₀ + δα with E|δα|² = ½ per mode.
pub fn sample_initial_wigner(alpha0: &[Complex64], stream: &mut NoiseStream) -> Vec<Complex64> {
    alpha0.iter().map(|a| a + stream.complex_normal(0.5)).collect()
}

/// Euler increment of the loss terms alone over `dt`: drift plus noise.
pub fn apply_losses(system: &WignerSystem, field: &[Complex64], stream: &mut NoiseStream, dt: f64) -> Vec<Complex64> {
    let mut drift = vec![Complex64::new(0.0, 0.0); field.len()];
    system.loss_drift(field, &mut drift);
    let mut xi = vec![0.0; system.noise_count()];
    stream.fill_normal(&mut xi);
    let scale = dt.sqrt();
    for v in &mut xi {
        *v *= scale;
    }
    let mut out: Vec<Complex64> = drift.iter().map(|d| d * dt).collect();
    system.add_diffusion(0.0, field, &xi, &mut out);
    out
}

/// Full deterministic Wigner drift including the kinetic term.
pub fn wigner_drift(system: &WignerSystem, t: f64, field: &[Complex64]) -> Result<Vec<Complex64>> {
    if field.len() != system.dim() {
        return Err(Error::DimensionMismatch {
            what: "Wigner field",
            expected: system.dim(),
            found: field.len(),
        });
    }
    let mut out = vec![Complex64::new(0.0, 0.0); field.len()];
    system.hamiltonian_drift(t, field, &mut out);
    for (o, v) in out.iter_mut().zip(system.ops.apply_linear(field)) {
        *o -= Complex64::i() * v;
    }
    Ok(out)
}

/// Symmetrically ordered per-trajectory quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "mode")]
pub enum FieldObservable {
    /// (α + α*)/2
    X(usize),
    /// (α − α*)/2i
    Y(usize),
    /// |α|² − ½
    Number(usize),
    /// Σ_m (|α_m|² − ½)
    TotalNumber,
    /// Total spin component (0, 1, 2) = (x, y, z) of spins 0 and 1, summed over cells.
    Spin(usize),
    /// Product of two total spin components of the same trajectory.
    SpinProduct(usize, usize),
}

/// The ten observables [`squeezing_xi2`] needs, in its expected order.
pub fn spin_observables() -> Vec<FieldObservable> {
    let mut v = vec![FieldObservable::Spin(0), FieldObservable::Spin(1), FieldObservable::Spin(2)];
    for i in 0..3 {
        for j in i..3 {
            v.push(FieldObservable::SpinProduct(i, j));
        }
    }
    v.push(FieldObservable::TotalNumber);
    v
}

fn total_spin(x: &[Complex64], cells: usize) -> [f64; 3] {
    let mut s = [0.0; 3];
    for n in 0..cells {
        let (a, b) = (x[n], x[cells + n]);
        let ab = a.conj() * b;
        s[0] += ab.re;
        s[1] += ab.im;
        s[2] += 0.5 * (a.norm_sqr() - b.norm_sqr());
    }
    s
}

/// Ensemble of Wigner trajectories from a coherent mean field.
#[derive(Debug, Clone)]
pub struct WignerEnsemble {
    pub system: WignerSystem,
    pub scheme: SdeScheme,
    pub initial: Vec<Complex64>,
    pub observables: Vec<FieldObservable>,
}

impl WignerEnsemble {
    pub fn new(system: WignerSystem, scheme: SdeScheme, initial: Vec<Complex64>, observables: Vec<FieldObservable>) -> Result<Self> {
        let modes = system.dim();
        if initial.len() != modes {
            return Err(Error::DimensionMismatch {
                what: "initial field",
                expected: modes,
                found: initial.len(),
            });
        }
        let spins = system.model().lattice().spin_count();
        for o in &observables {
            let ok = match *o {
                FieldObservable::X(m) | FieldObservable::Y(m) | FieldObservable::Number(m) => m < modes,
                FieldObservable::TotalNumber => true,
                FieldObservable::Spin(i) => i < 3 && spins >= 2,
                FieldObservable::SpinProduct(i, j) => i < 3 && j < 3 && spins >= 2,
            };
            if !ok {
                return Err(Error::InvalidArgument(format!("observable {o:?} does not fit the model")));
            }
        }
        if !(scheme.dt > 0.0) {
            return Err(Error::InvalidArgument("time step must be positive".into()));
        }
        Ok(Self {
            system,
            scheme,
            initial,
            observables,
        })
    }
}

impl TrajectoryModel for WignerEnsemble {
    type State = (Vec<Complex64>, Workspace);

    fn observables(&self) -> usize {
        self.observables.len()
    }

    fn initial(&self, stream: &mut NoiseStream) -> Self::State {
        (sample_initial_wigner(&self.initial, stream), Workspace::default())
    }

    fn advance(&self, state: &mut Self::State, t0: f64, t1: f64, stream: &mut NoiseStream) -> StepOutcome {
        integrate(&self.system, &self.scheme, t0, t1, &mut state.0, stream, &mut state.1)
    }

    fn observe(&self, state: &Self::State, _t: f64, out: &mut [f64]) {
        let x = &state.0;
        let cells = self.system.ops.cells();
        let spin = if self.observables.iter().any(|o| matches!(o, FieldObservable::Spin(_) | FieldObservable::SpinProduct(..))) {
            total_spin(x, cells)
        } else {
            [0.0; 3]
        };
        for (o, v) in self.observables.iter().zip(out.iter_mut()) {
            *v = match *o {
                FieldObservable::X(m) => x[m].re,
                FieldObservable::Y(m) => x[m].im,
                FieldObservable::Number(m) => x[m].norm_sqr() - 0.5,
                FieldObservable::TotalNumber => x.iter().map(|a| a.norm_sqr() - 0.5).sum(),
                FieldObservable::Spin(i) => spin[i],
                FieldObservable::SpinProduct(i, j) => spin[i] * spin[j],
            };
        }
    }
}

/// ξ² with a jackknife error bar. Undefined when |⟨S⟩| is within three
/// standard errors of zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Squeezing {
    pub xi2: f64,
    pub error: f64,
}

/// ξ² from the Wigner means of [`spin_observables`] for a two-component
/// lattice of `cells` sites. The symmetric-order spin second moments exceed
/// the quantum ones by cells/8 on the diagonal.
pub fn xi2_from_means(means: &[f64], cells: usize) -> Option<f64> {
    let mean = [means[0], means[1], means[2]];
    let mut cov = [[0.0; 3]; 3];
    let mut k = 3;
    for i in 0..3 {
        for j in i..3 {
            let mut c = means[k] - mean[i] * mean[j];
            if i == j {
                c -= cells as f64 / 8.0;
            }
            cov[i][j] = c;
            cov[j][i] = c;
            k += 1;
        }
    }
    xi_squared(means[9], mean, cov)
}

/// Jackknife ξ² over ensemble blocks produced with [`spin_observables`].
pub fn squeezing_xi2(blocks: &[EnsembleResult], time_index: usize, cells: usize) -> Result<Squeezing> {
    let nb = blocks.len();
    if nb < 2 {
        return Err(Error::InvalidArgument("jackknife needs at least two blocks".into()));
    }
    let weights: Vec<f64> = blocks.iter().map(|b| b.counts[time_index] as f64).collect();
    let total: f64 = weights.iter().sum();
    let obs = blocks[0].estimates[time_index].len();
    let pooled = |skip: Option<usize>| -> Vec<f64> {
        (0..obs)
            .map(|o| {
                let mut s = 0.0;
                let mut w = 0.0;
                for (b, blk) in blocks.iter().enumerate() {
                    if Some(b) == skip {
                        continue;
                    }
                    s += weights[b] * blk.estimates[time_index][o].mean;
                    w += weights[b];
                }
                s / w
            })
            .collect()
    };
    let undefined = || Error::Undefined("mean spin is below the noise floor".into());
    let spin_error2: f64 = (0..3)
        .map(|o| {
            blocks
                .iter()
                .zip(&weights)
                .map(|(b, w)| (w * b.estimates[time_index][o].error).powi(2))
                .sum::<f64>()
        })
        .sum::<f64>()
        / total.powi(2);
    let full_means = pooled(None);
    let m2: f64 = full_means[..3].iter().map(|v| v * v).sum();
    if m2 <= 9.0 * spin_error2 {
        return Err(undefined());
    }
    let full = xi2_from_means(&full_means, cells).ok_or_else(undefined)?;
    let mut leave: Vec<f64> = Vec::with_capacity(nb);
    for b in 0..nb {
        leave.push(xi2_from_means(&pooled(Some(b)), cells).ok_or_else(undefined)?);
    }
    let mean_leave = leave.iter().sum::<f64>() / nb as f64;
    let var = (nb as f64 - 1.0) / nb as f64 * leave.iter().map(|v| (v - mean_leave).powi(2)).sum::<f64>();
    Ok(Squeezing {
        xi2: full,
        error: var.sqrt(),
    })
}

/// Runs a spin-squeezing ensemble and returns ξ² at each time.
pub fn run_squeezing(
    system: WignerSystem,
    scheme: SdeScheme,
    initial: Vec<Complex64>,
    times: &[f64],
    cfg: &EnsembleConfig,
    blocks: usize,
) -> Result<Vec<Squeezing>> {
    let cells = system.model().lattice().cell_count();
    let ens = WignerEnsemble::new(system, scheme, initial, spin_observables())?;
    let res = run_ensemble_blocks(&ens, times, cfg, blocks)?;
    (0..times.len()).map(|k| squeezing_xi2(&res, k, cells)).collect()
}

/// Two-component condensate tuned near an inter-species Feshbach resonance.
///
/// Single-cell model with χ_ij = g a_ij. Approaching the resonance lowers a₁₂
/// and raises the inter-species two-body loss as κ₁₂ = c (a_bg − a₁₂)²; the
/// F = 2 component also loses atoms pairwise at a fixed rate κ₂₂.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeshbachConfig {
    pub atoms: f64,
    /// a₁₁, a₂₂ in Bohr radii.
    pub a11: f64,
    pub a22: f64,
    pub a12_values: Vec<f64>,
    /// Background inter-species scattering length.
    pub a_background: f64,
    /// g: interaction frequency per Bohr radius.
    pub chi_per_bohr: f64,
    /// c in κ₁₂ = c (a_bg − a₁₂)².
    pub resonance_loss: f64,
    pub kappa22: f64,
    pub times: Vec<f64>,
    pub dt: f64,
    pub trajectories: usize,
    pub blocks: usize,
    pub seed: u64,
}

impl Default for FeshbachConfig {
    fn default() -> Self {
        Self {
            atoms: 200.0,
            a11: 100.4,
            a22: 95.5,
            a12_values: vec![80.0, 85.0, 90.0, 95.0],
            a_background: 97.7,
            chi_per_bohr: 1e-3,
            resonance_loss: 5e-5,
            kappa22: 1e-5,
            times: (0..=48).map(|k| 0.125 * k as f64).collect(),
            dt: 0.01,
            trajectories: 4000,
            blocks: 20,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeshbachCurve {
    pub a12: f64,
    pub kappa12: f64,
    pub times: Vec<f64>,
    /// `None` where ξ² is undefined.
    pub xi2: Vec<Option<Squeezing>>,
}

impl FeshbachCurve {
    /// Smallest defined ξ² and its time.
    pub fn minimum(&self) -> Option<(f64, Squeezing)> {
        self.times
            .iter()
            .zip(&self.xi2)
            .filter_map(|(&t, q)| q.map(|q| (t, q)))
            .min_by(|a, b| a.1.xi2.total_cmp(&b.1.xi2))
    }
}

/// ξ²(t) from a Ramsey-split coherent state for each a₁₂.
pub fn feshbach_scan(cfg: &FeshbachConfig) -> Result<Vec<FeshbachCurve>> {
    if !(cfg.atoms > 0.0) || !(cfg.dt > 0.0) || cfg.times.is_empty() {
        return Err(Error::InvalidArgument("atoms, dt and times must be positive and non-empty".into()));
    }
    let lattice = crate::lattice::LatticeSpec::new(vec![1], vec![1.0], vec![1.0, 1.0], crate::lattice::Units::Dimensionless)?;
    let amp = Complex64::new((0.5 * cfg.atoms).sqrt(), 0.0);
    let ens_cfg = EnsembleConfig {
        seed: cfg.seed,
        trajectories: cfg.trajectories,
        reduction: crate::stochastic::Reduction::Deterministic,
    };
    cfg.a12_values
        .iter()
        .map(|&a12| {
            let g = cfg.chi_per_bohr;
            let model = crate::lattice::build_dispersion(lattice.clone(), &[0.0, 0.0])?
                .with_interaction(vec![g * cfg.a11, g * a12, g * a12, g * cfg.a22])?;
            let kappa12 = cfg.resonance_loss * (cfg.a_background - a12).max(0.0).powi(2);
            let losses = vec![LossChannel::two_body(2, 0, 1, kappa12), LossChannel::two_body(2, 1, 1, cfg.kappa22)];
            let system = WignerSystem::new(model, losses, true)?;
            let ens = WignerEnsemble::new(system, SdeScheme::midpoint(cfg.dt), vec![amp, amp], spin_observables())?;
            let res = run_ensemble_blocks(&ens, &cfg.times, &ens_cfg, cfg.blocks)?;
            let xi2 = (0..cfg.times.len()).map(|k| squeezing_xi2(&res, k, 1).ok()).collect();
            Ok(FeshbachCurve {
                a12,
                kappa12,
                times: cfg.times.clone(),
                xi2,
            })
        })
        .collect()
}
