use std::f64::consts::FRAC_PI_4;

use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::basis::StateVector;
use crate::error::{Error, Result};
use crate::linalg::CMatrix;

/// Two-mode mixer U = exp[θ(e^{iφ} a†b − e^{−iφ} b†a)], so that
/// U†aU = cos θ a + e^{iφ} sin θ b and U†bU = cos θ b − e^{−iφ} sin θ a.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamSplitter {
    pub angle: f64,
    pub phase: f64,
}

impl Default for BeamSplitter {
    fn default() -> Self {
        Self::fifty_fifty(0.0)
    }
}

impl BeamSplitter {
    pub fn fifty_fifty(phase: f64) -> Self {
        Self {
            angle: FRAC_PI_4,
            phase,
        }
    }

    /// 2×2 Heisenberg map of (a, b).
    pub fn pair_matrix(&self) -> CMatrix {
        let (s, c) = self.angle.sin_cos();
        let e = Complex64::from_polar(1.0, self.phase);
        CMatrix::from_row_slice(
            2,
            2,
            &[Complex64::new(c, 0.0), e * s, -e.conj() * s, Complex64::new(c, 0.0)],
        )
    }

    /// Heisenberg map on `modes` modes mixing each listed (a, b) pair.
    pub fn mode_matrix(&self, modes: usize, pairs: &[(usize, usize)]) -> CMatrix {
        let p = self.pair_matrix();
        let mut s = CMatrix::identity(modes, modes);
        for &(a, b) in pairs {
            let mut m = CMatrix::identity(modes, modes);
            m[(a, a)] = p[(0, 0)];
            m[(a, b)] = p[(0, 1)];
            m[(b, a)] = p[(1, 0)];
            m[(b, b)] = p[(1, 1)];
            s = m * s;
        }
        s
    }

    /// Unitary on the (n_a, n − n_a) sector, basis ordered by n_a.
    fn sector_unitary(&self, n: usize) -> CMatrix {
        // U = exp(−iK), K = iθ(e^{iφ} a†b − h.c.)
        let e = Complex64::from_polar(1.0, self.phase);
        let mut k = CMatrix::zeros(n + 1, n + 1);
        for na in 0..n {
            let amp = ((na + 1) as f64 * (n - na) as f64).sqrt() * self.angle;
            k[(na + 1, na)] = Complex64::i() * e * amp;
            k[(na, na + 1)] = (Complex64::i() * e * amp).conj();
        }
        let eig = SymmetricEigen::new(k);
        let phases = CMatrix::from_diagonal(&eig.eigenvalues.map(|l| Complex64::from_polar(1.0, -l)));
        &eig.eigenvectors * phases * eig.eigenvectors.adjoint()
    }
}

/// Mixes modes `a` and `b` of a full Fock state. Weight pushed past the cutoff is
/// dropped and returned alongside the state.
pub fn beam_splitter(state: &StateVector, bs: BeamSplitter, a: usize, b: usize) -> Result<(StateVector, f64)> {
    let basis = state.basis().clone();
    if a >= basis.modes() || b >= basis.modes() || a == b {
        return Err(Error::InvalidArgument(format!("bad beam-splitter modes ({a}, {b})")));
    }
    let cutoff = basis.cutoff() as usize;
    let amps = state.amplitudes();
    let mut out = vec![Complex64::new(0.0, 0.0); amps.len()];
    let mut done = vec![false; amps.len()];
    let mut unitaries: Vec<Option<CMatrix>> = vec![None; 2 * cutoff + 1];
    let mut lost = 0.0;
    for start in 0..amps.len() {
        if done[start] {
            continue;
        }
        let occ = basis.occupation(start).to_vec();
        let n = (occ[a] + occ[b]) as usize;
        let indices: Vec<Option<usize>> = (0..=n)
            .map(|na| {
                if na > cutoff || n - na > cutoff {
                    return None;
                }
                let mut o = occ.clone();
                o[a] = na as u32;
                o[b] = (n - na) as u32;
                basis.index_of(&o)
            })
            .collect();
        for i in indices.iter().flatten() {
            done[*i] = true;
        }
        if indices.iter().flatten().all(|&i| amps[i] == Complex64::new(0.0, 0.0)) {
            continue;
        }
        let u = unitaries[n].get_or_insert_with(|| bs.sector_unitary(n));
        for (row, target) in indices.iter().enumerate() {
            let mut v = Complex64::new(0.0, 0.0);
            for (col, src) in indices.iter().enumerate() {
                if let Some(s) = src {
                    v += u[(row, col)] * amps[*s];
                }
            }
            match target {
                Some(t) => out[*t] = v,
                None => lost += v.norm_sqr(),
            }
        }
    }
    if lost > 1e-10 {
        log::warn!("beam splitter pushed weight {lost:e} past the Fock cutoff");
    }
    Ok((StateVector::new(basis, out)?, lost))
}
