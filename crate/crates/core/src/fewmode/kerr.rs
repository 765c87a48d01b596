use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use statrs::function::gamma::ln_gamma;

use super::basis::{FockBasis, StateVector};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;

/// Discarded Poisson weight above which a coherent preparation is reported.
pub const TRUNCATION_WARN: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct CoherentState {
    pub state: StateVector,
    /// Probability that fell outside the truncated basis before renormalizing.
    pub discarded_weight: f64,
}

/// Smallest cutoff whose Poisson tail above it carries less than `tol`.
pub fn poisson_cutoff(mean: f64, tol: f64) -> u32 {
    if mean <= 0.0 {
        return 0;
    }
    let mut n = 0u32;
    let mut p = (-mean).exp();
    let mut cdf = p;
    // for large means e^{-mean} underflows; walk in log space instead
    if p == 0.0 {
        let mut logp = -mean;
        let mut cdf_tail_start = 0.0;
        loop {
            n += 1;
            logp += mean.ln() - (n as f64).ln();
            let pn = logp.exp();
            cdf_tail_start += pn;
            if n as f64 > mean && 1.0 - cdf_tail_start < tol {
                return n;
            }
            if n > 10_000_000 {
                return n;
            }
        }
    }
    while 1.0 - cdf >= tol {
        n += 1;
        p *= mean / n as f64;
        cdf += p;
        if n as f64 > mean && p < tol * 1e-3 && 1.0 - cdf < tol {
            break;
        }
        if n > 10_000_000 {
            break;
        }
    }
    n
}

/// Product coherent state ∏ |α_i⟩ projected onto `basis` and renormalized.
pub fn coherent_state(alpha: &[Complex64], basis: &Arc<FockBasis>) -> Result<CoherentState> {
    if alpha.len() != basis.modes() {
        return Err(Error::DimensionMismatch {
            what: "coherent amplitudes",
            expected: basis.modes(),
            found: alpha.len(),
        });
    }
    let amps: Vec<Complex64> = (0..basis.dim())
        .map(|idx| {
            let occ = basis.occupation(idx);
            let mut log_mag = 0.0;
            let mut phase = 0.0;
            for (&n, a) in occ.iter().zip(alpha) {
                let r = a.norm();
                log_mag -= 0.5 * r * r;
                if n > 0 {
                    if r == 0.0 {
                        return Complex64::new(0.0, 0.0);
                    }
                    log_mag += n as f64 * r.ln() - 0.5 * ln_gamma(n as f64 + 1.0);
                    phase += n as f64 * a.arg();
                }
            }
            Complex64::from_polar(log_mag.exp(), phase)
        })
        .collect();
    let mut state = StateVector::new(basis.clone(), amps)?;
    let kept = state.norm_sqr();
    let discarded_weight = (1.0 - kept).max(0.0);
    if discarded_weight > TRUNCATION_WARN {
        log::warn!("coherent state truncated: discarded weight {discarded_weight:e}");
    }
    state.normalize();
    Ok(CoherentState {
        state,
        discarded_weight,
    })
}

/// Closed-form moments of a coherent state evolved by H = ½ Σ χ_ij a_i†a_j†a_j a_i.
#[derive(Debug, Clone)]
pub struct KerrMoments {
    /// ⟨a_i⟩
    pub mean: Vec<Complex64>,
    /// ⟨a_i† a_j⟩
    pub coherence: CMatrix,
    /// ⟨a_i a_j⟩
    pub pair: CMatrix,
    /// ⟨n_i n_j⟩ (time independent)
    pub number_corr: DMatrix<f64>,
}

/// Uses a_i(t) = exp[−i Σ_j χ_ij N_j t] a_i(0) with the number operators to the left.
pub fn kerr_oracle(alpha: &[Complex64], chi: &DMatrix<f64>, t: f64) -> KerrMoments {
    let n = alpha.len();
    let occ: Vec<f64> = alpha.iter().map(|a| a.norm_sqr()).collect();
    // ⟨α| exp(−i t Σ_k c_k N_k) |α⟩
    let phase_factor = |c: &dyn Fn(usize) -> f64| -> Complex64 {
        let mut expo = Complex64::new(0.0, 0.0);
        for (k, &nk) in occ.iter().enumerate() {
            expo += nk * (Complex64::from_polar(1.0, -c(k) * t) - 1.0);
        }
        expo.exp()
    };
    let mean = (0..n).map(|i| alpha[i] * phase_factor(&|k| chi[(i, k)])).collect();
    let coherence = CMatrix::from_fn(n, n, |i, j| {
        alpha[i].conj() * alpha[j] * phase_factor(&|k| chi[(j, k)] - chi[(i, k)])
    });
    let pair = CMatrix::from_fn(n, n, |i, j| {
        alpha[i] * alpha[j] * Complex64::from_polar(1.0, -chi[(i, j)] * t) * phase_factor(&|k| chi[(i, k)] + chi[(j, k)])
    });
    let number_corr = DMatrix::from_fn(n, n, |i, j| occ[i] * occ[j] + if i == j { occ[i] } else { 0.0 });
    KerrMoments {
        mean,
        coherence,
        pair,
        number_corr,
    }
}
