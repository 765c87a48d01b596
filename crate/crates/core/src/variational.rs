//! Coherent-state superposition ("multiverse") variational dynamics.
//!
//! `|ψ⟩ = Σ_n exp(α₀⁽ⁿ⁾ + α⁽ⁿ⁾·a†)|0⟩`. Parameters are advanced by a
//! Tikhonov-regularized implicit midpoint step. The linear part `a†ωa` is
//! integrated exactly by working in its interaction frame, re-anchored at the
//! start of every step.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);
const MAX_EXPONENT: f64 = 700.0;

/// Normally ordered polynomial Hamiltonian
/// `H = a†ωa + Σ_k K_k a_k†²a_k² + Σ C_kl a_k†a_l†a_k a_l`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolynomialHamiltonian {
    modes: usize,
    omega: Vec<Complex64>,
    kerr: Vec<f64>,
    cross_kerr: Vec<(usize, usize, f64)>,
}

impl PolynomialHamiltonian {
    pub fn new(modes: usize) -> Result<Self> {
        if modes == 0 {
            return Err(Error::InvalidArgument("need at least one mode".into()));
        }
        Ok(PolynomialHamiltonian {
            modes,
            omega: vec![ZERO; modes * modes],
            kerr: vec![0.0; modes],
            cross_kerr: Vec::new(),
        })
    }

    /// Single-mode `(U/2) a†²a²`, which revives at t = 2π/U.
    pub fn kerr_oscillator(u: f64) -> Self {
        let mut h = Self::new(1).unwrap();
        h.kerr[0] = 0.5 * u;
        h
    }

    pub fn with_linear(mut self, omega: &CMatrix) -> Result<Self> {
        if omega.nrows() != self.modes || omega.ncols() != self.modes {
            return Err(Error::DimensionMismatch { what: "ω matrix", expected: self.modes, found: omega.nrows() });
        }
        let dev = linalg::hermitian_deviation(omega);
        if dev > 1e-12 {
            return Err(Error::NotHermitian { deviation: dev });
        }
        for i in 0..self.modes {
            for j in 0..self.modes {
                self.omega[i * self.modes + j] = omega[(i, j)];
            }
        }
        Ok(self)
    }

    pub fn with_kerr(mut self, k: usize, coeff: f64) -> Result<Self> {
        if k >= self.modes {
            return Err(Error::InvalidArgument(format!("mode {k} out of range")));
        }
        self.kerr[k] = coeff;
        Ok(self)
    }

    pub fn with_cross_kerr(mut self, k: usize, l: usize, coeff: f64) -> Result<Self> {
        if k >= self.modes || l >= self.modes || k == l {
            return Err(Error::InvalidArgument(format!("invalid cross-Kerr pair ({k}, {l})")));
        }
        self.cross_kerr.push((k.min(l), k.max(l), coeff));
        Ok(self)
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn omega(&self) -> CMatrix {
        CMatrix::from_row_slice(self.modes, self.modes, &self.omega)
    }

    pub fn is_linear(&self) -> bool {
        self.kerr.iter().all(|&k| k == 0.0) && self.cross_kerr.iter().all(|c| c.2 == 0.0)
    }

    /// `H(β*, α)`; pass `bc = β*` directly.
    pub fn value(&self, bc: &[Complex64], alpha: &[Complex64]) -> Complex64 {
        let m = self.modes;
        let mut h = ZERO;
        for i in 0..m {
            for j in 0..m {
                h += bc[i] * self.omega[i * m + j] * alpha[j];
            }
        }
        h + self.nonlinear_value(bc, alpha)
    }

    pub fn nonlinear_value(&self, bc: &[Complex64], alpha: &[Complex64]) -> Complex64 {
        let mut h = ZERO;
        for (k, &kk) in self.kerr.iter().enumerate() {
            if kk != 0.0 {
                h += kk * (bc[k] * alpha[k]).powi(2);
            }
        }
        for &(k, l, c) in &self.cross_kerr {
            h += c * bc[k] * bc[l] * alpha[k] * alpha[l];
        }
        h
    }

    /// `∂H/∂β*_k` written into `out`.
    pub fn gradient(&self, bc: &[Complex64], alpha: &[Complex64], out: &mut [Complex64]) {
        let m = self.modes;
        self.nonlinear_gradient(bc, alpha, out);
        for i in 0..m {
            for j in 0..m {
                out[i] += self.omega[i * m + j] * alpha[j];
            }
        }
    }

    pub fn nonlinear_gradient(&self, bc: &[Complex64], alpha: &[Complex64], out: &mut [Complex64]) {
        out.iter_mut().for_each(|z| *z = ZERO);
        for (k, &kk) in self.kerr.iter().enumerate() {
            if kk != 0.0 {
                out[k] += 2.0 * kk * bc[k] * alpha[k] * alpha[k];
            }
        }
        for &(k, l, c) in &self.cross_kerr {
            out[k] += c * bc[l] * alpha[k] * alpha[l];
            out[l] += c * bc[k] * alpha[k] * alpha[l];
        }
    }
}

/// 𝒩 components, each `(α₀, α₁, …, α_M)`, stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariationalState {
    components: usize,
    modes: usize,
    x: Vec<Complex64>,
}

/// Gram matrix `ρ⁽ᵐⁿ⁾ = ⟨ψ_m|ψ_n⟩`, scaled by `exp(−log_scale)` when the exponents overflow.
#[derive(Clone, Debug)]
pub struct Gram {
    pub rho: CMatrix,
    pub log_scale: f64,
}

impl VariationalState {
    pub fn from_parameters(components: usize, modes: usize, x: Vec<Complex64>) -> Result<Self> {
        if components == 0 || modes == 0 {
            return Err(Error::InvalidArgument("empty variational state".into()));
        }
        if x.len() != components * (modes + 1) {
            return Err(Error::DimensionMismatch { what: "variational parameters", expected: components * (modes + 1), found: x.len() });
        }
        Ok(VariationalState { components, modes, x })
    }

    /// A normalized coherent state as one component.
    pub fn coherent(alpha: &[Complex64]) -> Result<Self> {
        Self::ring(alpha, 1, 0.0)
    }

    /// `components` copies of a coherent state on a ring of `radius` around `alpha`,
    /// with weights adding up to the target.
    pub fn ring(alpha: &[Complex64], components: usize, radius: f64) -> Result<Self> {
        if components == 0 || alpha.is_empty() {
            return Err(Error::InvalidArgument("empty variational state".into()));
        }
        let m = alpha.len();
        let mut x = Vec::with_capacity(components * (m + 1));
        let norm2: f64 = alpha.iter().map(|a| a.norm_sqr()).sum();
        let offset = -0.5 * norm2 - (components as f64).ln();
        for n in 0..components {
            let shift = if components > 1 {
                Complex64::from_polar(radius, 2.0 * std::f64::consts::PI * n as f64 / components as f64)
            } else {
                ZERO
            };
            x.push(Complex64::new(offset, 0.0));
            x.extend(alpha.iter().map(|a| a + shift));
        }
        Self::from_parameters(components, m, x)
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn parameters(&self) -> &[Complex64] {
        &self.x
    }

    pub fn weight(&self, n: usize) -> Complex64 {
        self.x[n * (self.modes + 1)]
    }

    pub fn amplitudes(&self, n: usize) -> &[Complex64] {
        let w = self.modes + 1;
        &self.x[n * w + 1..(n + 1) * w]
    }

    fn exponent(&self, m: usize, n: usize) -> Complex64 {
        let dot: Complex64 = self.amplitudes(m).iter().zip(self.amplitudes(n)).map(|(a, b)| a.conj() * b).sum();
        self.weight(m).conj() + self.weight(n) + dot
    }

    pub fn inner_product_matrix(&self) -> Gram {
        let c = self.components;
        let e = DMatrix::from_fn(c, c, |m, n| self.exponent(m, n));
        let top = e.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        let log_scale = if top > MAX_EXPONENT { top } else { 0.0 };
        let rho = e.map(|z| (z - log_scale).exp());
        Gram { rho, log_scale }
    }

    /// `⟨ψ|ψ⟩`.
    pub fn norm(&self) -> f64 {
        let g = self.inner_product_matrix();
        g.rho.iter().map(|z| z.re).sum::<f64>() * g.log_scale.exp()
    }

    pub fn observables(&self, h: Option<&PolynomialHamiltonian>) -> Result<Moments> {
        let g = self.inner_product_matrix();
        let total: Complex64 = g.rho.iter().sum();
        let scale: f64 = g.rho.iter().map(|z| z.norm()).sum();
        if !(total.re > 1e-12 * scale) || !total.re.is_finite() {
            return Err(Error::Undefined("vanishing state norm".into()));
        }
        let m = self.modes;
        let mut mean = vec![ZERO; m];
        let mut second = CMatrix::zeros(m, m);
        let mut energy = ZERO;
        let mut bc = vec![ZERO; m];
        for a in 0..self.components {
            let am = self.amplitudes(a);
            for (b, z) in bc.iter_mut().zip(am) {
                *b = z.conj();
            }
            for n in 0..self.components {
                let r = g.rho[(a, n)];
                let an = self.amplitudes(n);
                for k in 0..m {
                    mean[k] += an[k] * r;
                    for l in 0..m {
                        second[(k, l)] += bc[k] * an[l] * r;
                    }
                }
                if let Some(h) = h {
                    energy += h.value(&bc, an) * r;
                }
            }
        }
        for z in mean.iter_mut() {
            *z /= total;
        }
        second /= total;
        Ok(Moments {
            norm: total.re * g.log_scale.exp(),
            mean,
            second,
            energy: energy.re / total.re,
        })
    }
}

/// Normalized expectation values of a variational state.
#[derive(Clone, Debug)]
pub struct Moments {
    pub norm: f64,
    /// `⟨a_k⟩`
    pub mean: Vec<Complex64>,
    /// `⟨a_k† a_l⟩`
    pub second: CMatrix,
    pub energy: f64,
}

impl Moments {
    pub fn x(&self, k: usize) -> f64 {
        self.mean[k].re
    }

    pub fn y(&self, k: usize) -> f64 {
        self.mean[k].im
    }
}

/// Variational matrix 𝒱 and H-vector ℋ for `h`.
///
/// Row index `(m, k)`, column `(n, l)`, flattened as `component·(M+1) + k`.
pub fn variational_system(state: &VariationalState, h: &PolynomialHamiltonian) -> Result<(CMatrix, Vec<Complex64>)> {
    if h.modes() != state.modes {
        return Err(Error::DimensionMismatch { what: "Hamiltonian modes", expected: state.modes, found: h.modes() });
    }
    Ok(build_system(state, |bc, a, grad| {
        h.gradient(bc, a, grad);
        h.value(bc, a)
    }))
}

fn build_system<F>(state: &VariationalState, mut energy: F) -> (CMatrix, Vec<Complex64>)
where
    F: FnMut(&[Complex64], &[Complex64], &mut [Complex64]) -> Complex64,
{
    let c = state.components;
    let m = state.modes;
    let w = m + 1;
    let p = c * w;
    let g = state.inner_product_matrix();
    let tilde = |n: usize, k: usize| if k == 0 { ONE } else { state.x[n * w + k] };
    let mut v = CMatrix::zeros(p, p);
    let mut hv = vec![ZERO; p];
    let mut bc = vec![ZERO; m];
    let mut grad = vec![ZERO; m];
    for a in 0..c {
        for (b, z) in bc.iter_mut().zip(state.amplitudes(a)) {
            *b = z.conj();
        }
        for n in 0..c {
            let r = g.rho[(a, n)];
            for k in 0..w {
                for l in 0..w {
                    let delta = if k > 0 && k == l { ONE } else { ZERO };
                    v[(a * w + k, n * w + l)] = (delta + tilde(a, l).conj() * tilde(n, k)) * r;
                }
            }
            let e = energy(&bc, state.amplitudes(n), &mut grad);
            hv[a * w] += e * r;
            for k in 1..w {
                hv[a * w + k] += (grad[k - 1] + e * tilde(n, k)) * r;
            }
        }
    }
    (v, hv)
}

/// One Tikhonov-regularized fixed-point update of the midpoint increment.
///
/// Returns the new increment and the residual `‖rhs − 𝒱ΔX‖` before the update.
pub fn tikhonov_solve(v: &CMatrix, rhs: &[Complex64], dx: &[Complex64], lambda: f64) -> Result<(Vec<Complex64>, f64)> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument("Tikhonov λ must be positive".into()));
    }
    let p = rhs.len();
    if v.nrows() != p || dx.len() != p {
        return Err(Error::DimensionMismatch { what: "Tikhonov system", expected: p, found: v.nrows() });
    }
    let dxv = nalgebra::DVector::from_column_slice(dx);
    let r = nalgebra::DVector::from_column_slice(rhs) - v * &dxv;
    let residual = r.norm();
    let a = v + CMatrix::identity(p, p) * (I * lambda);
    let step = a
        .lu()
        .solve(&r)
        .ok_or_else(|| Error::Singular("regularized variational matrix".into()))?;
    Ok(((dxv + step).iter().copied().collect(), residual))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropagatorConfig {
    pub dt: f64,
    pub lambda: f64,
    pub iterations: usize,
    pub max_halvings: u32,
}

impl Default for PropagatorConfig {
    fn default() -> Self {
        PropagatorConfig {
            dt: 2.0 * std::f64::consts::PI / 2000.0,
            lambda: 1e-4,
            iterations: 4,
            max_halvings: 8,
        }
    }
}

/// Time stepper for one Hamiltonian.
pub struct Propagator {
    h: PolynomialHamiltonian,
    cfg: PropagatorConfig,
    omega_eigvecs: CMatrix,
    omega_eigvals: Vec<f64>,
}

impl Propagator {
    pub fn new(h: PolynomialHamiltonian, cfg: PropagatorConfig) -> Result<Self> {
        if !(cfg.dt > 0.0 && cfg.dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("time step {} must be positive", cfg.dt)));
        }
        if !(cfg.lambda > 0.0) || cfg.iterations == 0 {
            return Err(Error::InvalidArgument("need λ > 0 and at least one iteration".into()));
        }
        let eig = h.omega().symmetric_eigen();
        Ok(Propagator {
            omega_eigvals: eig.eigenvalues.iter().copied().collect(),
            omega_eigvecs: eig.eigenvectors,
            h,
            cfg,
        })
    }

    pub fn hamiltonian(&self) -> &PolynomialHamiltonian {
        &self.h
    }

    pub fn config(&self) -> &PropagatorConfig {
        &self.cfg
    }

    /// `exp(−iωt)`.
    pub fn linear_propagator(&self, t: f64) -> CMatrix {
        let d = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            self.omega_eigvals.len(),
            self.omega_eigvals.iter().map(|&w| Complex64::from_polar(1.0, -w * t)),
        ));
        &self.omega_eigvecs * d * self.omega_eigvecs.adjoint()
    }

    fn rotate(&self, state: &VariationalState, u: &CMatrix) -> VariationalState {
        let m = state.modes;
        let mut out = state.clone();
        for n in 0..state.components {
            let a = state.amplitudes(n);
            for i in 0..m {
                out.x[n * (m + 1) + 1 + i] = (0..m).map(|j| u[(i, j)] * a[j]).sum();
            }
        }
        out
    }

    /// Interaction-frame system at frame time `s`: the nonlinear part evaluated
    /// at lab amplitudes `U(s)α`, gradient pulled back by `U(s)†`.
    fn frame_system(&self, state: &VariationalState, u: &CMatrix) -> (CMatrix, Vec<Complex64>) {
        let m = state.modes;
        let mut lab_bc = vec![ZERO; m];
        let mut lab_a = vec![ZERO; m];
        let mut lab_grad = vec![ZERO; m];
        let uc = u.map(|z| z.conj());
        build_system(state, |bc, a, grad| {
            for i in 0..m {
                lab_bc[i] = (0..m).map(|j| uc[(i, j)] * bc[j]).sum();
                lab_a[i] = (0..m).map(|j| u[(i, j)] * a[j]).sum();
            }
            self.h.nonlinear_gradient(&lab_bc, &lab_a, &mut lab_grad);
            for k in 0..m {
                grad[k] = (0..m).map(|j| uc[(j, k)] * lab_grad[j]).sum();
            }
            self.h.nonlinear_value(&lab_bc, &lab_a)
        })
    }

    /// One midpoint step of length `dt`; `Err` on residual growth.
    fn try_step(&self, state: &VariationalState, dt: f64) -> Result<VariationalState> {
        let p = state.x.len();
        let mut dx = vec![ZERO; p];
        if !self.h.is_linear() {
            let u_mid = self.linear_propagator(0.5 * dt);
            let mut first = None;
            let mut last = 0.0;
            for _ in 0..self.cfg.iterations {
                let mut mid = state.clone();
                for (x, d) in mid.x.iter_mut().zip(&dx) {
                    *x += d;
                }
                let (v, hv) = self.frame_system(&mid, &u_mid);
                let rhs: Vec<Complex64> = hv.iter().map(|z| -I * z * (0.5 * dt)).collect();
                let (next, residual) = tikhonov_solve(&v, &rhs, &dx, self.cfg.lambda)?;
                first.get_or_insert(residual);
                last = residual;
                dx = next;
            }
            let first = first.unwrap_or(0.0);
            let scale = rhs_scale(&dx);
            if !dx.iter().all(|z| z.is_finite()) || (last > first && last > 1e-10 * scale.max(1.0)) {
                return Err(Error::StepRejected { t: 0.0, dt });
            }
        }
        let mut next = state.clone();
        for (x, d) in next.x.iter_mut().zip(&dx) {
            *x += 2.0 * d;
        }
        if self.h.omega.iter().all(|z| *z == ZERO) {
            return Ok(next);
        }
        Ok(self.rotate(&next, &self.linear_propagator(dt)))
    }

    /// Advances by `dt`, halving on rejection.
    pub fn step(&self, state: &VariationalState, dt: f64) -> Result<VariationalState> {
        self.step_inner(state, dt, 0)
    }

    fn step_inner(&self, state: &VariationalState, dt: f64, depth: u32) -> Result<VariationalState> {
        match self.try_step(state, dt) {
            Ok(s) => Ok(s),
            Err(Error::StepRejected { .. }) if depth < self.cfg.max_halvings => {
                log::debug!("variational step rejected at dt = {dt:e}, halving");
                let half = self.step_inner(state, 0.5 * dt, depth + 1)?;
                self.step_inner(&half, 0.5 * dt, depth + 1)
            }
            Err(e) => Err(e),
        }
    }

    /// Propagates to each of `times` (ascending, from t = 0) with the configured step.
    pub fn propagate(&self, initial: &VariationalState, times: &[f64]) -> Result<Vec<VariationalState>> {
        if initial.modes != self.h.modes() {
            return Err(Error::DimensionMismatch { what: "Hamiltonian modes", expected: initial.modes, found: self.h.modes() });
        }
        let mut out = Vec::with_capacity(times.len());
        let mut state = initial.clone();
        let mut t = 0.0;
        for &target in times {
            if target < t - 1e-12 {
                return Err(Error::InvalidArgument("output times must be ascending from 0".into()));
            }
            while t < target - 1e-12 {
                let dt = self.cfg.dt.min(target - t);
                state = self.step(&state, dt).map_err(|e| match e {
                    Error::StepRejected { dt, .. } => Error::StepRejected { t, dt },
                    e => e,
                })?;
                t += dt;
            }
            out.push(state.clone());
        }
        Ok(out)
    }
}

fn rhs_scale(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Row of a variational run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariationalSample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub norm: f64,
    pub energy: f64,
}

/// Runs `initial` under `h` and reports mode-0 quadratures, norm and energy.
pub fn run(h: PolynomialHamiltonian, cfg: PropagatorConfig, initial: &VariationalState, times: &[f64]) -> Result<Vec<VariationalSample>> {
    let prop = Propagator::new(h, cfg)?;
    let states = prop.propagate(initial, times)?;
    states
        .iter()
        .zip(times)
        .map(|(s, &t)| {
            let m = s.observables(Some(prop.hamiltonian()))?;
            Ok(VariationalSample { t, x: m.x(0), y: m.y(0), norm: m.norm, energy: m.energy })
        })
        .collect()
}

/// Kerr recurrence scenario: `(U/2)a†²a²` from a coherent state, over one revival.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnharmonicConfig {
    pub alpha: Complex64,
    pub u: f64,
    pub components: usize,
    pub ring_radius: f64,
    pub t_max: f64,
    pub samples: usize,
    pub propagator: PropagatorConfig,
}

impl Default for AnharmonicConfig {
    fn default() -> Self {
        AnharmonicConfig {
            alpha: Complex64::new(3f64.sqrt(), 0.0),
            u: 1.0,
            components: 16,
            ring_radius: 0.1,
            t_max: 2.0 * std::f64::consts::PI,
            samples: 200,
            propagator: PropagatorConfig::default(),
        }
    }
}

impl AnharmonicConfig {
    pub fn times(&self) -> Vec<f64> {
        (0..=self.samples).map(|i| self.t_max * i as f64 / self.samples as f64).collect()
    }
}

pub fn anharmonic_run(cfg: &AnharmonicConfig) -> Result<Vec<VariationalSample>> {
    if cfg.samples == 0 || !(cfg.t_max > 0.0) {
        return Err(Error::InvalidArgument("need a positive duration and at least one sample".into()));
    }
    let init = VariationalState::ring(&[cfg.alpha], cfg.components, cfg.ring_radius)?;
    run(PolynomialHamiltonian::kerr_oscillator(cfg.u), cfg.propagator, &init, &cfg.times())
}
