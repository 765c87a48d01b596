//! Lattice discretization of the second-quantized Bose-Hubbard Hamiltonian.
//!
//! Modes are indexed spin-major: `mode = spin * cell_count + cell`, with cells
//! laid out row-major over the spatial axes (last axis fastest). All engine
//! equations work in angular-frequency units (the Hamiltonian divided by ħ);
//! [`Units`] only matters when converting energies or masses into those units.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_bigint::BigUint;
use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduced Planck constant in J·s.
pub const HBAR_SI: f64 = 1.054_571_817e-34;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Units {
    /// ħ = 1, masses and lengths dimensionless.
    #[default]
    Dimensionless,
    Si,
}

impl Units {
    pub fn hbar(self) -> f64 {
        match self {
            Units::Dimensionless => 1.0,
            Units::Si => HBAR_SI,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeSpec {
    dims: Vec<usize>,
    box_length: Vec<f64>,
    masses: Vec<f64>,
    units: Units,
}

impl LatticeSpec {
    /// `dims` and `box_length` are per spatial axis (1 to 3 axes); `masses`
    /// has one entry per spin component.
    pub fn new(dims: Vec<usize>, box_length: Vec<f64>, masses: Vec<f64>, units: Units) -> Result<Self> {
        if dims.is_empty() || dims.len() > 3 {
            return Err(Error::InvalidArgument(format!(
                "lattice needs 1 to 3 axes, got {}",
                dims.len()
            )));
        }
        if box_length.len() != dims.len() {
            return Err(Error::DimensionMismatch {
                what: "box lengths",
                expected: dims.len(),
                found: box_length.len(),
            });
        }
        if dims.iter().any(|&m| m == 0) {
            return Err(Error::InvalidArgument("every axis needs at least one cell".into()));
        }
        if box_length.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return Err(Error::InvalidArgument("box lengths must be positive".into()));
        }
        if masses.is_empty() {
            return Err(Error::InvalidArgument("at least one spin component is required".into()));
        }
        if masses.iter().any(|&m| !(m > 0.0 && m.is_finite())) {
            return Err(Error::InvalidArgument("masses must be positive".into()));
        }
        Ok(Self {
            dims,
            box_length,
            masses,
            units,
        })
    }

    /// A single cell holding one spin component: the few-mode / single-mode limit.
    pub fn single_mode() -> Self {
        Self::new(vec![1], vec![1.0], vec![1.0], Units::Dimensionless).expect("valid single-mode lattice")
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn box_length(&self) -> &[f64] {
        &self.box_length
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn units(&self) -> Units {
        self.units
    }

    pub fn spin_count(&self) -> usize {
        self.masses.len()
    }

    pub fn cell_count(&self) -> usize {
        self.dims.iter().product()
    }

    /// Total mode count: spins times cells.
    pub fn mode_count(&self) -> usize {
        self.spin_count() * self.cell_count()
    }

    pub fn volume(&self) -> f64 {
        self.box_length.iter().product()
    }

    pub fn cell_volume(&self) -> f64 {
        self.dims
            .iter()
            .zip(&self.box_length)
            .map(|(&m, &l)| l / m as f64)
            .product()
    }

    /// Δk = 2π/L per axis.
    pub fn momentum_spacing(&self) -> Vec<f64> {
        self.box_length.iter().map(|&l| 2.0 * PI / l).collect()
    }

    /// Integer momentum index in the symmetric window (−M/2, M/2].
    pub fn signed_index(j: usize, m: usize) -> i64 {
        let j = j as i64;
        let m = m as i64;
        if 2 * j > m {
            j - m
        } else {
            j
        }
    }

    /// Split a flat cell index into per-axis indices.
    pub fn cell_coords(&self, mut cell: usize) -> Vec<usize> {
        let mut coords = vec![0; self.dims.len()];
        for axis in (0..self.dims.len()).rev() {
            coords[axis] = cell % self.dims[axis];
            cell /= self.dims[axis];
        }
        coords
    }

    /// Wavevector of k-cell `cell` (same flat layout as sites).
    pub fn wavevector(&self, cell: usize) -> Vec<f64> {
        let dk = self.momentum_spacing();
        self.cell_coords(cell)
            .iter()
            .enumerate()
            .map(|(axis, &j)| dk[axis] * Self::signed_index(j, self.dims[axis]) as f64)
            .collect()
    }

    /// Position of site `cell`, centred so the box spans [−L/2, L/2).
    pub fn position(&self, cell: usize) -> Vec<f64> {
        self.cell_coords(cell)
            .iter()
            .enumerate()
            .map(|(axis, &n)| {
                let dx = self.box_length[axis] / self.dims[axis] as f64;
                (n as f64 - (self.dims[axis] / 2) as f64) * dx
            })
            .collect()
    }
}

pub type CouplingFn = Arc<dyn Fn(f64) -> Vec<Complex64> + Send + Sync>;

/// The shared physical model: dispersion, local potential, local interactions.
///
/// Everything is stored in angular-frequency units.
#[derive(Clone)]
pub struct HubbardModel {
    lattice: LatticeSpec,
    /// ħk²/2m per k-mode, spin-major like sites.
    kinetic: Vec<f64>,
    /// V_s(x)/ħ per site mode.
    potential: Vec<f64>,
    /// χ_ss', row-major S×S.
    chi: Vec<f64>,
    internal: Vec<f64>,
    coupling: Option<CouplingFn>,
}

impl fmt::Debug for HubbardModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HubbardModel")
            .field("lattice", &self.lattice)
            .field("chi", &self.chi)
            .field("internal", &self.internal)
            .field("has_coupling", &self.coupling.is_some())
            .finish()
    }
}

/// Build the kinetic dispersion and attach a local potential (energy units,
/// one value per site mode).
pub fn build_dispersion(lattice: LatticeSpec, potential: &[f64]) -> Result<HubbardModel> {
    let modes = lattice.mode_count();
    if potential.len() != modes {
        return Err(Error::DimensionMismatch {
            what: "potential",
            expected: modes,
            found: potential.len(),
        });
    }
    let hbar = lattice.units().hbar();
    let cells = lattice.cell_count();
    let mut kinetic = Vec::with_capacity(modes);
    for &mass in lattice.masses() {
        for cell in 0..cells {
            let k2: f64 = lattice.wavevector(cell).iter().map(|k| k * k).sum();
            kinetic.push(hbar * k2 / (2.0 * mass));
        }
    }
    let s = lattice.spin_count();
    Ok(HubbardModel {
        kinetic,
        potential: potential.iter().map(|v| v / hbar).collect(),
        chi: vec![0.0; s * s],
        internal: vec![0.0; s],
        coupling: None,
        lattice,
    })
}

impl HubbardModel {
    /// Single mode with frequency `omega` and Kerr coefficient `chi`
    /// (H = ω a†a + ½χ a†a†aa).
    pub fn single_mode(omega: f64, chi: f64) -> Self {
        let mut model = build_dispersion(LatticeSpec::single_mode(), &[omega]).expect("single mode");
        model.chi[0] = chi;
        model
    }

    /// χ_ss' in frequency units, row-major S×S. Must be real symmetric.
    pub fn with_interaction(mut self, chi: Vec<f64>) -> Result<Self> {
        let s = self.lattice.spin_count();
        if chi.len() != s * s {
            return Err(Error::DimensionMismatch {
                what: "interaction matrix",
                expected: s * s,
                found: chi.len(),
            });
        }
        for i in 0..s {
            for j in 0..i {
                if (chi[i * s + j] - chi[j * s + i]).abs() > 1e-12 * (1.0 + chi[i * s + j].abs()) {
                    return Err(Error::InvalidArgument("interaction matrix must be symmetric".into()));
                }
            }
        }
        self.chi = chi;
        Ok(self)
    }

    pub fn with_internal_energies(mut self, omega_s: Vec<f64>) -> Result<Self> {
        if omega_s.len() != self.lattice.spin_count() {
            return Err(Error::DimensionMismatch {
                what: "internal energies",
                expected: self.lattice.spin_count(),
                found: omega_s.len(),
            });
        }
        self.internal = omega_s;
        Ok(self)
    }

    /// Time-dependent Rabi coupling Ω̃_ss'(t), returned row-major S×S.
    pub fn with_coupling(mut self, coupling: CouplingFn) -> Self {
        self.coupling = Some(coupling);
        self
    }

    pub fn lattice(&self) -> &LatticeSpec {
        &self.lattice
    }

    pub fn mode_count(&self) -> usize {
        self.lattice.mode_count()
    }

    pub fn kinetic(&self) -> &[f64] {
        &self.kinetic
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    pub fn chi(&self, s: usize, t: usize) -> f64 {
        self.chi[s * self.lattice.spin_count() + t]
    }

    pub fn internal_energies(&self) -> &[f64] {
        &self.internal
    }

    pub fn coupling_at(&self, t: f64) -> Option<Vec<Complex64>> {
        self.coupling.as_ref().map(|c| c(t))
    }

    /// Same model with every Hamiltonian term negated (used for time reversal).
    pub fn reversed(&self) -> Self {
        let coupling = self.coupling.clone().map(|c| {
            let f: CouplingFn = Arc::new(move |t| c(t).into_iter().map(|z| -z).collect());
            f
        });
        Self {
            lattice: self.lattice.clone(),
            kinetic: self.kinetic.iter().map(|v| -v).collect(),
            potential: self.potential.iter().map(|v| -v).collect(),
            chi: self.chi.iter().map(|v| -v).collect(),
            internal: self.internal.iter().map(|v| -v).collect(),
            coupling,
        }
    }

    /// Dense hopping matrix ω_nn' over site modes (spin-diagonal kinetic and
    /// potential parts plus the Rabi coupling at time `t`). Intended for small
    /// lattices and checks.
    pub fn hopping_matrix(&self, t: f64) -> DMatrix<Complex64> {
        let cells = self.lattice.cell_count();
        let spins = self.lattice.spin_count();
        let modes = self.mode_count();
        let mut w = DMatrix::<Complex64>::zeros(modes, modes);
        let inv = 1.0 / cells as f64;
        for s in 0..spins {
            for n in 0..cells {
                let rn = self.lattice.cell_coords(n);
                for np in 0..cells {
                    let rp = self.lattice.cell_coords(np);
                    let mut sum = Complex64::new(0.0, 0.0);
                    for k in 0..cells {
                        let jk = self.lattice.cell_coords(k);
                        let phase: f64 = (0..rn.len())
                            .map(|a| {
                                let m = self.lattice.dims[a] as f64;
                                2.0 * PI * jk[a] as f64 * (rn[a] as f64 - rp[a] as f64) / m
                            })
                            .sum();
                        sum += Complex64::from_polar(self.kinetic[s * cells + k], phase);
                    }
                    w[(s * cells + n, s * cells + np)] = sum * inv;
                }
                let d = s * cells + n;
                w[(d, d)] += self.potential[d] + self.internal[s];
            }
        }
        if let Some(c) = self.coupling_at(t) {
            for s in 0..spins {
                for u in 0..spins {
                    for n in 0..cells {
                        w[(s * cells + n, u * cells + n)] += c[s * spins + u];
                    }
                }
            }
        }
        w
    }
}

/// Unitary discrete Fourier transform between k-modes and lattice sites.
#[derive(Clone)]
pub struct ModeTransform {
    dims: Vec<usize>,
    spins: usize,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
    scale: f64,
}

impl fmt::Debug for ModeTransform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModeTransform").field("dims", &self.dims).field("spins", &self.spins).finish()
    }
}

impl ModeTransform {
    pub fn new(lattice: &LatticeSpec) -> Self {
        let mut planner = FftPlanner::new();
        let forward = lattice.dims().iter().map(|&m| planner.plan_fft(m, FftDirection::Forward)).collect();
        let inverse = lattice.dims().iter().map(|&m| planner.plan_fft(m, FftDirection::Inverse)).collect();
        Self {
            dims: lattice.dims().to_vec(),
            spins: lattice.spin_count(),
            forward,
            inverse,
            scale: 1.0 / (lattice.cell_count() as f64).sqrt(),
        }
    }

    pub fn len(&self) -> usize {
        self.spins * self.dims.iter().product::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// a_n = C^{-1/2} Σ_k ã_k e^{+2πi k·n/M}.
    pub fn to_sites(&self, field: &mut [Complex64]) -> Result<()> {
        self.apply(field, FftDirection::Inverse)
    }

    /// Inverse of [`ModeTransform::to_sites`].
    pub fn to_momentum(&self, field: &mut [Complex64]) -> Result<()> {
        self.apply(field, FftDirection::Forward)
    }

    fn apply(&self, field: &mut [Complex64], dir: FftDirection) -> Result<()> {
        if field.len() != self.len() {
            return Err(Error::DimensionMismatch {
                what: "mode transform field",
                expected: self.len(),
                found: field.len(),
            });
        }
        let plans = match dir {
            FftDirection::Forward => &self.forward,
            FftDirection::Inverse => &self.inverse,
        };
        let cells: usize = self.dims.iter().product();
        for block in field.chunks_mut(cells) {
            let mut stride = cells;
            for (axis, &m) in self.dims.iter().enumerate() {
                stride /= m;
                if m == 1 {
                    continue;
                }
                let mut line = vec![Complex64::new(0.0, 0.0); m];
                let outer = cells / (m * stride);
                for o in 0..outer {
                    for inner in 0..stride {
                        let base = o * m * stride + inner;
                        for (j, v) in line.iter_mut().enumerate() {
                            *v = block[base + j * stride];
                        }
                        plans[axis].process(&mut line);
                        for (j, v) in line.iter().enumerate() {
                            block[base + j * stride] = *v;
                        }
                    }
                }
            }
            for v in block.iter_mut() {
                *v *= self.scale;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Statistics {
    Boson,
    Fermion,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HilbertCount {
    /// Exact count, omitted when it would have more than [`EXACT_DIGIT_LIMIT`] digits.
    pub exact: Option<BigUint>,
    pub log10: f64,
}

pub const EXACT_DIGIT_LIMIT: f64 = 20_000.0;

/// Number of many-body states: bosons with `particles` fixed, fermions summed
/// over all fillings.
pub fn hilbert_dimension(particles: u64, modes: u64, statistics: Statistics) -> Result<HilbertCount> {
    if modes == 0 {
        return Err(Error::InvalidArgument("mode count must be at least 1".into()));
    }
    match statistics {
        Statistics::Boson => {
            let n = particles as f64;
            let m = modes as f64;
            let ln = statrs::function::gamma::ln_gamma(m + n) - statrs::function::gamma::ln_gamma(m)
                - statrs::function::gamma::ln_gamma(n + 1.0);
            let log10 = ln / std::f64::consts::LN_10;
            let exact = (log10 <= EXACT_DIGIT_LIMIT).then(|| binomial(modes + particles - 1, particles));
            Ok(HilbertCount { exact, log10 })
        }
        Statistics::Fermion => {
            let log10 = modes as f64 * std::f64::consts::LOG10_2;
            let exact = (log10 <= EXACT_DIGIT_LIMIT).then(|| BigUint::from(1u32) << modes);
            Ok(HilbertCount { exact, log10 })
        }
    }
}

fn binomial(n: u64, k: u64) -> BigUint {
    let k = k.min(n - k);
    let mut acc = BigUint::from(1u32);
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// Harmonic trap V = ½ m ω² x² per spin (energy units), `freqs[s][axis]`.
pub fn harmonic_potential(lattice: &LatticeSpec, freqs: &[Vec<f64>]) -> Result<Vec<f64>> {
    if freqs.len() != lattice.spin_count() {
        return Err(Error::DimensionMismatch {
            what: "trap frequencies",
            expected: lattice.spin_count(),
            found: freqs.len(),
        });
    }
    let cells = lattice.cell_count();
    let mut v = Vec::with_capacity(lattice.mode_count());
    for (s, f) in freqs.iter().enumerate() {
        if f.len() != lattice.dims().len() {
            return Err(Error::DimensionMismatch {
                what: "trap frequencies per axis",
                expected: lattice.dims().len(),
                found: f.len(),
            });
        }
        let m = lattice.masses()[s];
        for cell in 0..cells {
            let x = lattice.position(cell);
            v.push(x.iter().zip(f).map(|(x, w)| 0.5 * m * w * w * x * x).sum());
        }
    }
    Ok(v)
}
