use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const MAX_MODES: usize = 6;
/// Memory guard on the number of basis states.
pub const MAX_DIM: usize = 8_000_000;

/// Occupation-number basis for up to six bosonic modes.
///
/// Without a number sector the states are ordered as a mixed-radix counter
/// (last mode fastest), so index arithmetic needs no lookup table.
#[derive(Debug, Clone)]
pub struct FockBasis {
    modes: usize,
    cutoff: u32,
    sector: Option<u32>,
    occ: Vec<u32>,
    strides: Vec<usize>,
    lookup: Option<HashMap<Vec<u32>, usize>>,
}

impl FockBasis {
    /// Every occupation vector with 0 ≤ n_i ≤ `cutoff`.
    pub fn new(modes: usize, cutoff: u32) -> Result<Self> {
        check_modes(modes)?;
        let radix = cutoff as usize + 1;
        let dim = radix
            .checked_pow(modes as u32)
            .filter(|&d| d <= MAX_DIM)
            .ok_or(Error::Capacity {
                what: "Fock basis",
                requested: radix.saturating_pow(modes as u32),
                limit: MAX_DIM,
            })?;
        let mut strides = vec![1usize; modes];
        for i in (0..modes.saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * radix;
        }
        let mut occ = Vec::with_capacity(dim * modes);
        for idx in 0..dim {
            for &s in &strides {
                occ.push(((idx / s) % radix) as u32);
            }
        }
        Ok(Self {
            modes,
            cutoff,
            sector: None,
            occ,
            strides,
            lookup: None,
        })
    }

    /// States with Σ n_i = `total` and each n_i ≤ `cutoff`.
    pub fn with_sector(modes: usize, cutoff: u32, total: u32) -> Result<Self> {
        check_modes(modes)?;
        let mut occ = Vec::new();
        let mut current = vec![0u32; modes];
        let mut count = 0usize;
        enumerate_sector(&mut current, 0, total, cutoff, &mut occ, &mut count)?;
        let lookup = occ
            .chunks(modes)
            .enumerate()
            .map(|(i, n)| (n.to_vec(), i))
            .collect();
        Ok(Self {
            modes,
            cutoff,
            sector: Some(total),
            occ,
            strides: Vec::new(),
            lookup: Some(lookup),
        })
    }

    pub fn dim(&self) -> usize {
        self.occ.len() / self.modes
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn cutoff(&self) -> u32 {
        self.cutoff
    }

    pub fn sector(&self) -> Option<u32> {
        self.sector
    }

    pub fn occupation(&self, index: usize) -> &[u32] {
        &self.occ[index * self.modes..(index + 1) * self.modes]
    }

    pub fn index_of(&self, occ: &[u32]) -> Option<usize> {
        if occ.len() != self.modes || occ.iter().any(|&n| n > self.cutoff) {
            return None;
        }
        match &self.lookup {
            Some(map) => map.get(occ).copied(),
            None => Some(occ.iter().zip(&self.strides).map(|(&n, &s)| n as usize * s).sum()),
        }
    }

    /// Index of the state reached by changing mode `mode` by `delta` quanta.
    #[inline]
    pub(crate) fn shifted(&self, index: usize, mode: usize, delta: i32) -> Option<usize> {
        let n = self.occupation(index)[mode] as i64 + delta as i64;
        if n < 0 || n > self.cutoff as i64 {
            return None;
        }
        match &self.lookup {
            None => Some((index as i64 + delta as i64 * self.strides[mode] as i64) as usize),
            Some(map) => {
                let mut occ = self.occupation(index).to_vec();
                occ[mode] = n as u32;
                map.get(&occ).copied()
            }
        }
    }

    /// Index reached by a†_i a_j (number conserving).
    #[inline]
    pub(crate) fn hopped(&self, index: usize, to: usize, from: usize) -> Option<usize> {
        if to == from {
            return Some(index);
        }
        let occ = self.occupation(index);
        if occ[from] == 0 || occ[to] >= self.cutoff {
            return None;
        }
        match &self.lookup {
            None => Some(index + self.strides[to] - self.strides[from]),
            Some(map) => {
                let mut o = occ.to_vec();
                o[from] -= 1;
                o[to] += 1;
                map.get(&o).copied()
            }
        }
    }
}

fn check_modes(modes: usize) -> Result<()> {
    if modes == 0 || modes > MAX_MODES {
        return Err(Error::Capacity {
            what: "few-mode basis modes",
            requested: modes,
            limit: MAX_MODES,
        });
    }
    Ok(())
}

fn enumerate_sector(
    current: &mut [u32],
    pos: usize,
    remaining: u32,
    cutoff: u32,
    out: &mut Vec<u32>,
    count: &mut usize,
) -> Result<()> {
    if pos + 1 == current.len() {
        if remaining <= cutoff {
            current[pos] = remaining;
            out.extend_from_slice(current);
            *count += 1;
            if *count > MAX_DIM {
                return Err(Error::Capacity {
                    what: "Fock basis",
                    requested: *count,
                    limit: MAX_DIM,
                });
            }
        }
        return Ok(());
    }
    for n in (0..=remaining.min(cutoff)).rev() {
        current[pos] = n;
        enumerate_sector(current, pos + 1, remaining - n, cutoff, out, count)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Ladder {
    Create(usize),
    Annihilate(usize),
}

/// Complex amplitudes over a [`FockBasis`].
#[derive(Debug, Clone)]
pub struct StateVector {
    basis: Arc<FockBasis>,
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn new(basis: Arc<FockBasis>, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != basis.dim() {
            return Err(Error::DimensionMismatch {
                what: "state amplitudes",
                expected: basis.dim(),
                found: amps.len(),
            });
        }
        Ok(Self { basis, amps })
    }

    pub fn basis_state(basis: Arc<FockBasis>, occ: &[u32]) -> Result<Self> {
        let idx = basis
            .index_of(occ)
            .ok_or_else(|| Error::InvalidArgument(format!("occupation {occ:?} is not in the basis")))?;
        let mut amps = vec![Complex64::new(0.0, 0.0); basis.dim()];
        amps[idx] = Complex64::new(1.0, 0.0);
        Ok(Self { basis, amps })
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalize(&mut self) {
        let n = self.norm_sqr().sqrt();
        if n > 0.0 {
            for a in &mut self.amps {
                *a /= n;
            }
        }
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.inner(other).norm_sqr() / (self.norm_sqr() * other.norm_sqr())
    }

    pub fn mean_number(&self, mode: usize) -> f64 {
        let b = &self.basis;
        self.amps
            .iter()
            .enumerate()
            .map(|(i, a)| a.norm_sqr() * b.occupation(i)[mode] as f64)
            .sum()
    }

    pub fn total_number(&self) -> f64 {
        (0..self.basis.modes()).map(|m| self.mean_number(m)).sum()
    }

    /// a†_to a_from |ψ⟩, dropping components pushed past the cutoff.
    pub fn hop(&self, to: usize, from: usize) -> Vec<Complex64> {
        let b = &self.basis;
        let mut out = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        for (i, &a) in self.amps.iter().enumerate() {
            if a == Complex64::new(0.0, 0.0) {
                continue;
            }
            let occ = b.occupation(i);
            if to == from {
                out[i] += a * occ[to] as f64;
            } else if let Some(j) = b.hopped(i, to, from) {
                out[j] += a * ((occ[from] as f64) * (occ[to] as f64 + 1.0)).sqrt();
            }
        }
        out
    }

    /// Apply a ladder operator. Only defined on bases without a number sector.
    pub fn apply_ladder(&self, amps: &[Complex64], op: Ladder) -> Result<Vec<Complex64>> {
        if self.basis.sector().is_some() {
            return Err(Error::Unsupported(
                "ladder operators leave a fixed-number sector".into(),
            ));
        }
        let b = &self.basis;
        let mut out = vec![Complex64::new(0.0, 0.0); amps.len()];
        for (i, &a) in amps.iter().enumerate() {
            if a == Complex64::new(0.0, 0.0) {
                continue;
            }
            let n = b.occupation(i);
            match op {
                Ladder::Annihilate(m) => {
                    if let Some(j) = b.shifted(i, m, -1) {
                        out[j] += a * (n[m] as f64).sqrt();
                    }
                }
                Ladder::Create(m) => {
                    if let Some(j) = b.shifted(i, m, 1) {
                        out[j] += a * (n[m] as f64 + 1.0).sqrt();
                    }
                }
            }
        }
        Ok(out)
    }

    /// ⟨ψ| ops[0] ops[1] … |ψ⟩ with the rightmost operator applied first.
    pub fn expect_ladder(&self, ops: &[Ladder]) -> Result<Complex64> {
        let shift: i32 = ops
            .iter()
            .map(|op| match op {
                Ladder::Create(_) => 1,
                Ladder::Annihilate(_) => -1,
            })
            .sum();
        if self.basis.sector().is_some() {
            if shift != 0 {
                return Ok(Complex64::new(0.0, 0.0));
            }
            if ops.is_empty() {
                return Ok(Complex64::new(self.norm_sqr(), 0.0));
            }
            if let [Ladder::Create(i), Ladder::Annihilate(j)] = ops {
                let v = self.hop(*i, *j);
                return Ok(self.amps.iter().zip(&v).map(|(a, b)| a.conj() * b).sum());
            }
        }
        let mut v = self.amps.clone();
        for &op in ops.iter().rev() {
            v = self.apply_ladder(&v, op)?;
        }
        Ok(self.amps.iter().zip(&v).map(|(a, b)| a.conj() * b).sum())
    }

    /// ⟨a_mode⟩.
    pub fn expect_annihilate(&self, mode: usize) -> Complex64 {
        let b = &self.basis;
        let mut s = Complex64::new(0.0, 0.0);
        for (i, &a) in self.amps.iter().enumerate() {
            let n = b.occupation(i)[mode];
            if n == 0 {
                continue;
            }
            if let Some(j) = b.shifted(i, mode, -1) {
                s += self.amps[j].conj() * a * (n as f64).sqrt();
            }
        }
        s
    }
}
