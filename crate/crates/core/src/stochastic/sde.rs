use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::noise::NoiseStream;

/// Trajectories whose amplitudes exceed this are treated as diverged.
pub const DIVERGENCE_BOUND: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    Euler,
    #[default]
    Midpoint,
}

/// How the Ito equations supplied by an [`SdeSystem`] are integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Interpretation {
    /// Integrate the drift as given.
    Ito,
    /// Add the Ito→Stratonovich drift shift first; right for the midpoint scheme.
    #[default]
    Stratonovich,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdeScheme {
    pub kind: SchemeKind,
    pub dt: f64,
    pub midpoint_iters: usize,
    pub interpretation: Interpretation,
}

impl SdeScheme {
    pub fn midpoint(dt: f64) -> Self {
        Self {
            kind: SchemeKind::Midpoint,
            dt,
            midpoint_iters: 4,
            interpretation: Interpretation::Stratonovich,
        }
    }

    pub fn euler(dt: f64) -> Self {
        Self {
            kind: SchemeKind::Euler,
            dt,
            midpoint_iters: 0,
            interpretation: Interpretation::Ito,
        }
    }
}

/// dx = A(x, t) dt + B(x, t) dW in Ito form, with complex state and real noises.
pub trait SdeSystem {
    fn dim(&self) -> usize;
    fn noise_count(&self) -> usize;
    /// Writes A(x, t).
    fn drift(&self, t: f64, x: &[Complex64], out: &mut [Complex64]);
    /// Adds B(x, t)·ξ to `out`.
    fn add_diffusion(&self, t: f64, x: &[Complex64], xi: &[f64], out: &mut [Complex64]);
    /// Adds −½ Σ_k (B_k·∇) B_k, the shift turning the Ito drift into the Stratonovich one.
    fn add_stratonovich_shift(&self, _t: f64, _x: &[Complex64], _out: &mut [Complex64]) {}
    /// Optional exactly solvable linear part applied outside the stochastic step.
    fn linear_flow(&self, _x: &mut [Complex64], _dt: f64) {}
    fn has_linear_flow(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    Ok,
    Diverged,
}

/// Scratch buffers for [`step`].
#[derive(Debug, Clone, Default)]
pub struct Workspace {
    xi: Vec<f64>,
    rate: Vec<Complex64>,
    mid: Vec<Complex64>,
}

fn rate(sys: &dyn SdeSystem, scheme: &SdeScheme, t: f64, x: &[Complex64], xi: &[f64], out: &mut [Complex64]) {
    sys.drift(t, x, out);
    if scheme.interpretation == Interpretation::Stratonovich {
        sys.add_stratonovich_shift(t, x, out);
    }
    if !xi.is_empty() {
        sys.add_diffusion(t, x, xi, out);
    }
}

/// Advance one step of length `dt`, drawing the noise from `stream`.
///
/// The noises passed to the system are ξ = ΔW/dt with variance 1/dt. A system
/// with a linear flow is split symmetrically around the stochastic step.
pub fn step(
    sys: &dyn SdeSystem,
    scheme: &SdeScheme,
    t: f64,
    dt: f64,
    x: &mut [Complex64],
    stream: &mut NoiseStream,
    ws: &mut Workspace,
) -> StepOutcome {
    let n = sys.dim();
    ws.xi.resize(sys.noise_count(), 0.0);
    ws.rate.resize(n, Complex64::new(0.0, 0.0));
    ws.mid.resize(n, Complex64::new(0.0, 0.0));
    stream.fill_normal(&mut ws.xi);
    let scale = 1.0 / dt.sqrt();
    for v in &mut ws.xi {
        *v *= scale;
    }
    let split = sys.has_linear_flow();
    if split {
        sys.linear_flow(x, 0.5 * dt);
    }
    match scheme.kind {
        SchemeKind::Euler => {
            rate(sys, scheme, t, x, &ws.xi, &mut ws.rate);
            for (xi, r) in x.iter_mut().zip(&ws.rate) {
                *xi += r * dt;
            }
        }
        SchemeKind::Midpoint => {
            let tm = t + 0.5 * dt;
            ws.mid.copy_from_slice(x);
            for _ in 0..scheme.midpoint_iters.max(1) {
                rate(sys, scheme, tm, &ws.mid, &ws.xi, &mut ws.rate);
                for ((m, x0), r) in ws.mid.iter_mut().zip(x.iter()).zip(&ws.rate) {
                    *m = x0 + r * (0.5 * dt);
                }
            }
            for (x0, m) in x.iter_mut().zip(&ws.mid) {
                *x0 = 2.0 * m - *x0;
            }
        }
    }
    if split {
        sys.linear_flow(x, 0.5 * dt);
    }
    if x.iter().all(|v| v.re.is_finite() && v.im.is_finite() && v.norm() < DIVERGENCE_BOUND) {
        StepOutcome::Ok
    } else {
        StepOutcome::Diverged
    }
}

/// Integrate from `t0` to `t1` in equal steps no longer than `scheme.dt`.
pub fn integrate(
    sys: &dyn SdeSystem,
    scheme: &SdeScheme,
    t0: f64,
    t1: f64,
    x: &mut [Complex64],
    stream: &mut NoiseStream,
    ws: &mut Workspace,
) -> StepOutcome {
    let span = t1 - t0;
    if span <= 0.0 {
        return StepOutcome::Ok;
    }
    let steps = (span / scheme.dt - 1e-9).ceil().max(1.0) as usize;
    let dt = span / steps as f64;
    for k in 0..steps {
        if step(sys, scheme, t0 + k as f64 * dt, dt, x, stream, ws) == StepOutcome::Diverged {
            return StepOutcome::Diverged;
        }
    }
    StepOutcome::Ok
}
