use std::collections::HashMap;

use num_complex::Complex64;

use super::basis::{Ladder, StateVector};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;

/// Observable Σ_ij A_ij a_i† a_j.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm {
    coeffs: CMatrix,
}

impl QuadraticForm {
    pub fn zeros(modes: usize) -> Self {
        Self {
            coeffs: CMatrix::zeros(modes, modes),
        }
    }

    pub fn from_matrix(coeffs: CMatrix) -> Self {
        assert!(coeffs.is_square());
        Self { coeffs }
    }

    /// a_i† a_i.
    pub fn number(modes: usize, i: usize) -> Self {
        let mut q = Self::zeros(modes);
        q.coeffs[(i, i)] = Complex64::new(1.0, 0.0);
        q
    }

    pub fn modes(&self) -> usize {
        self.coeffs.nrows()
    }

    pub fn coeffs(&self) -> &CMatrix {
        &self.coeffs
    }

    pub fn add_term(&mut self, i: usize, j: usize, c: Complex64) {
        self.coeffs[(i, j)] += c;
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            coeffs: &self.coeffs * Complex64::new(s, 0.0),
        }
    }

    pub fn plus(&self, other: &Self) -> Self {
        Self {
            coeffs: &self.coeffs + &other.coeffs,
        }
    }

    /// Heisenberg picture of the form after the modes map as a → S a.
    pub fn transformed(&self, s: &CMatrix) -> Self {
        Self {
            coeffs: s.adjoint() * &self.coeffs * s,
        }
    }
}

/// First, second and fourth order normally-indexed moments of a few-mode state.
///
/// `m4[i,j,k,l]` is ⟨a_i† a_j a_k† a_l⟩ (not normal ordered), which is all that
/// products of two quadratic forms need.
#[derive(Debug, Clone)]
pub struct MomentTable {
    modes: usize,
    m1: Vec<Complex64>,
    m2: CMatrix,
    m4: Vec<Complex64>,
}

impl MomentTable {
    pub fn from_state(state: &StateVector) -> Self {
        let n = state.basis().modes();
        let m1 = if state.basis().sector().is_some() {
            vec![Complex64::new(0.0, 0.0); n]
        } else {
            (0..n).map(|i| state.expect_annihilate(i)).collect()
        };
        let hops: Vec<Vec<Complex64>> = (0..n * n).map(|ij| state.hop(ij / n, ij % n)).collect();
        let amps = state.amplitudes();
        let dot = |u: &[Complex64], v: &[Complex64]| -> Complex64 { u.iter().zip(v).map(|(a, b)| a.conj() * b).sum() };
        let m2 = CMatrix::from_fn(n, n, |i, j| dot(amps, &hops[i * n + j]));
        let mut m4 = vec![Complex64::new(0.0, 0.0); n * n * n * n];
        for i in 0..n {
            for j in 0..n {
                // (a_i† a_j)† = a_j† a_i
                let left = &hops[j * n + i];
                for k in 0..n {
                    for l in 0..n {
                        m4[((i * n + j) * n + k) * n + l] = dot(left, &hops[k * n + l]);
                    }
                }
            }
        }
        Self { modes: n, m1, m2, m4 }
    }

    /// Moments of the tensor product of independent states, modes concatenated
    /// in the order given.
    pub fn product(states: &[&StateVector]) -> Result<Self> {
        let mut owner = Vec::new();
        for (s, st) in states.iter().enumerate() {
            if st.basis().sector().is_some() {
                return Err(Error::Unsupported("product moments need full Fock bases".into()));
            }
            for local in 0..st.basis().modes() {
                owner.push((s, local));
            }
        }
        let n = owner.len();
        let mut cache: Vec<HashMap<Vec<Ladder>, Complex64>> = vec![HashMap::new(); states.len()];
        let mut expect = |ops: &[Ladder]| -> Result<Complex64> {
            let mut value = Complex64::new(1.0, 0.0);
            for (s, st) in states.iter().enumerate() {
                let local: Vec<Ladder> = ops
                    .iter()
                    .filter_map(|op| match *op {
                        Ladder::Create(m) if owner[m].0 == s => Some(Ladder::Create(owner[m].1)),
                        Ladder::Annihilate(m) if owner[m].0 == s => Some(Ladder::Annihilate(owner[m].1)),
                        _ => None,
                    })
                    .collect();
                if local.is_empty() {
                    continue;
                }
                let v = match cache[s].get(&local) {
                    Some(v) => *v,
                    None => {
                        let v = st.expect_ladder(&local)?;
                        cache[s].insert(local, v);
                        v
                    }
                };
                value *= v;
            }
            Ok(value)
        };
        let mut m1 = Vec::with_capacity(n);
        for i in 0..n {
            m1.push(expect(&[Ladder::Annihilate(i)])?);
        }
        let mut m2 = CMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m2[(i, j)] = expect(&[Ladder::Create(i), Ladder::Annihilate(j)])?;
            }
        }
        let mut m4 = vec![Complex64::new(0.0, 0.0); n * n * n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        m4[((i * n + j) * n + k) * n + l] = expect(&[
                            Ladder::Create(i),
                            Ladder::Annihilate(j),
                            Ladder::Create(k),
                            Ladder::Annihilate(l),
                        ])?;
                    }
                }
            }
        }
        Ok(Self { modes: n, m1, m2, m4 })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    /// ⟨a_i⟩.
    pub fn mean_field(&self, i: usize) -> Complex64 {
        self.m1[i]
    }

    /// ⟨a_i† a_j⟩.
    pub fn coherence(&self, i: usize, j: usize) -> Complex64 {
        self.m2[(i, j)]
    }

    /// ⟨a_i† a_j a_k† a_l⟩.
    pub fn fourth(&self, i: usize, j: usize, k: usize, l: usize) -> Complex64 {
        let n = self.modes;
        self.m4[((i * n + j) * n + k) * n + l]
    }

    pub fn mean(&self, q: &QuadraticForm) -> Complex64 {
        self.check(q);
        q.coeffs.iter().zip(self.m2.iter()).map(|(a, m)| a * m).sum()
    }

    /// ⟨Q R⟩.
    pub fn product_mean(&self, q: &QuadraticForm, r: &QuadraticForm) -> Complex64 {
        self.check(q);
        self.check(r);
        let n = self.modes;
        let mut s = Complex64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                let a = q.coeffs[(i, j)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for k in 0..n {
                    for l in 0..n {
                        let b = r.coeffs[(k, l)];
                        if b != Complex64::new(0.0, 0.0) {
                            s += a * b * self.fourth(i, j, k, l);
                        }
                    }
                }
            }
        }
        s
    }

    /// Symmetrized covariance ½⟨{Q,R}⟩ − ⟨Q⟩⟨R⟩ for Hermitian forms.
    pub fn covariance(&self, q: &QuadraticForm, r: &QuadraticForm) -> f64 {
        let qr = self.product_mean(q, r);
        let rq = self.product_mean(r, q);
        0.5 * (qr + rq).re - self.mean(q).re * self.mean(r).re
    }

    pub fn variance(&self, q: &QuadraticForm) -> f64 {
        self.covariance(q, q)
    }

    fn check(&self, q: &QuadraticForm) {
        assert_eq!(q.modes(), self.modes, "quadratic form acts on a different number of modes");
    }
}
