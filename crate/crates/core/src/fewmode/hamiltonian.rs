use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use super::basis::{FockBasis, StateVector};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_deviation, CMatrix};

/// Largest nonzero count accepted when assembling a sparse Hamiltonian.
pub const MAX_NONZEROS: usize = 60_000_000;
/// Dimensions up to this are propagated by full diagonalization.
pub const DENSE_LIMIT: usize = 400;

const HERMITIAN_TOL: f64 = 1e-10;

/// H = Σ ω_ij a_i†a_j + ½ Σ χ_ij a_i†a_j†a_j a_i on a handful of modes.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeHamiltonian {
    linear: CMatrix,
    chi: DMatrix<f64>,
}

impl ModeHamiltonian {
    pub fn new(linear: CMatrix, chi: DMatrix<f64>) -> Result<Self> {
        let n = linear.nrows();
        if !linear.is_square() || chi.nrows() != n || chi.ncols() != n {
            return Err(Error::DimensionMismatch {
                what: "mode Hamiltonian",
                expected: n,
                found: chi.nrows(),
            });
        }
        let dev = hermitian_deviation(&linear);
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation: dev });
        }
        if (&chi - chi.transpose()).abs().max() > HERMITIAN_TOL {
            return Err(Error::InvalidArgument("χ must be symmetric".into()));
        }
        Ok(Self { linear, chi })
    }

    /// Pure Kerr / cross-Kerr Hamiltonian.
    pub fn kerr(chi: DMatrix<f64>) -> Result<Self> {
        let n = chi.nrows();
        Self::new(CMatrix::zeros(n, n), chi)
    }

    /// Two wells, two spins: modes ordered (a₁, a₂, b₁, b₂).
    ///
    /// H = ω Σ_i (a_i†b_i + b_i†a_i) + ½ Σ_ij χ_ij (a_i†a_j†a_j a_i + b_i†b_j†b_j b_i).
    pub fn double_well(omega: f64, chi: [[f64; 2]; 2]) -> Result<Self> {
        let mut linear = CMatrix::zeros(4, 4);
        for i in 0..2 {
            linear[(i, 2 + i)] = Complex64::new(omega, 0.0);
            linear[(2 + i, i)] = Complex64::new(omega, 0.0);
        }
        let mut k = DMatrix::zeros(4, 4);
        for i in 0..2 {
            for j in 0..2 {
                k[(i, j)] = chi[i][j];
                k[(2 + i, 2 + j)] = chi[i][j];
            }
        }
        Self::new(linear, k)
    }

    pub fn modes(&self) -> usize {
        self.linear.nrows()
    }

    pub fn linear(&self) -> &CMatrix {
        &self.linear
    }

    pub fn chi(&self) -> &DMatrix<f64> {
        &self.chi
    }

    /// Diagonal energy ½ Σ χ_ij n_i (n_j − δ_ij) + Σ ω_ii n_i of an occupation vector.
    pub fn diagonal_energy(&self, occ: &[u32]) -> f64 {
        let n = self.modes();
        let mut e = 0.0;
        for i in 0..n {
            let ni = occ[i] as f64;
            e += self.linear[(i, i)].re * ni;
            for j in 0..n {
                let nj = occ[j] as f64 - if i == j { 1.0 } else { 0.0 };
                e += 0.5 * self.chi[(i, j)] * ni * nj;
            }
        }
        e
    }
}

/// Compressed-row Hermitian matrix over a Fock basis.
#[derive(Debug, Clone)]
pub struct SparseHamiltonian {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
    diagonal_only: bool,
}

/// Assemble H on `basis`. Hopping that would leave the truncated basis is dropped.
pub fn build_hamiltonian(h: &ModeHamiltonian, basis: &Arc<FockBasis>) -> Result<SparseHamiltonian> {
    if h.modes() != basis.modes() {
        return Err(Error::DimensionMismatch {
            what: "Hamiltonian modes",
            expected: basis.modes(),
            found: h.modes(),
        });
    }
    let n = h.modes();
    let hops: Vec<(usize, usize, Complex64)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| i != j)
        .map(|(i, j)| (i, j, h.linear[(i, j)]))
        .filter(|(_, _, w)| w.norm() > 0.0)
        .collect();
    let dim = basis.dim();
    let estimate = dim.saturating_mul(1 + hops.len());
    if estimate > MAX_NONZEROS {
        return Err(Error::Capacity {
            what: "sparse Hamiltonian nonzeros",
            requested: estimate,
            limit: MAX_NONZEROS,
        });
    }
    let mut row_ptr = Vec::with_capacity(dim + 1);
    let mut cols = Vec::with_capacity(estimate);
    let mut vals = Vec::with_capacity(estimate);
    row_ptr.push(0);
    for row in 0..dim {
        let occ = basis.occupation(row);
        cols.push(row);
        vals.push(Complex64::new(h.diagonal_energy(occ), 0.0));
        // ⟨row| ω_ij a_i† a_j |col⟩ with |row⟩ = a_i†a_j|col⟩ up to normalization
        for &(i, j, w) in &hops {
            if let Some(col) = basis.hopped(row, j, i) {
                let amp = ((occ[i] as f64) * (occ[j] as f64 + 1.0)).sqrt();
                cols.push(col);
                vals.push(w * amp);
            }
        }
        row_ptr.push(cols.len());
    }
    Ok(SparseHamiltonian {
        dim,
        row_ptr,
        cols,
        vals,
        diagonal_only: hops.is_empty(),
    })
}

impl SparseHamiltonian {
    /// Wrap an arbitrary dense matrix (checked for Hermiticity when propagating).
    pub fn from_dense(m: &CMatrix) -> Self {
        let dim = m.nrows();
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut diagonal_only = true;
        for i in 0..dim {
            for j in 0..dim {
                let v = m[(i, j)];
                if v.norm() > 0.0 || i == j {
                    if i != j {
                        diagonal_only = false;
                    }
                    cols.push(j);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Self {
            dim,
            row_ptr,
            cols,
            vals,
            diagonal_only,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nonzeros(&self) -> usize {
        self.vals.len()
    }

    pub fn is_diagonal(&self) -> bool {
        self.diagonal_only
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for r in 0..self.dim {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                m[(r, self.cols[k])] += self.vals[k];
            }
        }
        m
    }

    pub fn matvec(&self, x: &[Complex64], y: &mut [Complex64]) {
        for (r, out) in y.iter_mut().enumerate() {
            let mut s = Complex64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            *out = s;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim)
            .map(|r| {
                (self.row_ptr[r]..self.row_ptr[r + 1])
                    .filter(|&k| self.cols[k] == r)
                    .map(|k| self.vals[k].re)
                    .sum()
            })
            .collect()
    }

    /// Largest |H_ij − conj(H_ji)|, including imaginary diagonal parts.
    pub fn hermitian_deviation(&self) -> f64 {
        let mut dev: f64 = 0.0;
        for r in 0..self.dim {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.cols[k];
                let v = self.vals[k];
                let back = self.get(c, r);
                dev = dev.max((v - back.conj()).norm());
            }
        }
        dev
    }

    fn get(&self, r: usize, c: usize) -> Complex64 {
        let row = &self.cols[self.row_ptr[r]..self.row_ptr[r + 1]];
        row.iter()
            .enumerate()
            .filter(|(_, &cc)| cc == c)
            .map(|(k, _)| self.vals[self.row_ptr[r] + k])
            .sum()
    }

    pub fn expectation(&self, state: &StateVector) -> f64 {
        let x = state.amplitudes();
        let mut y = vec![Complex64::new(0.0, 0.0); self.dim];
        self.matvec(x, &mut y);
        let e: Complex64 = x.iter().zip(&y).map(|(a, b)| a.conj() * b).sum();
        e.re / state.norm_sqr()
    }
}

/// Reusable e^{−iHt} for one Hamiltonian.
#[derive(Debug, Clone)]
pub enum Propagator {
    Diagonal(Vec<f64>),
    Dense { values: Vec<f64>, vectors: CMatrix },
    Krylov(SparseHamiltonian),
}

impl Propagator {
    pub fn new(h: &SparseHamiltonian) -> Result<Self> {
        let dev = h.hermitian_deviation();
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation: dev });
        }
        if h.is_diagonal() {
            return Ok(Propagator::Diagonal(h.diagonal()));
        }
        if h.dim() <= DENSE_LIMIT {
            let dense = h.to_dense();
            let dense = (&dense + dense.adjoint()) * Complex64::new(0.5, 0.0);
            let eig = SymmetricEigen::new(dense);
            return Ok(Propagator::Dense {
                values: eig.eigenvalues.iter().copied().collect(),
                vectors: eig.eigenvectors,
            });
        }
        Ok(Propagator::Krylov(h.clone()))
    }

    /// Lanczos stepping regardless of size.
    pub fn krylov(h: &SparseHamiltonian) -> Result<Self> {
        let dev = h.hermitian_deviation();
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation: dev });
        }
        Ok(Propagator::Krylov(h.clone()))
    }

    pub fn apply(&self, state: &StateVector, t: f64) -> Result<StateVector> {
        let amps = state.amplitudes();
        let out = match self {
            Propagator::Diagonal(e) => amps
                .iter()
                .zip(e)
                .map(|(a, &e)| a * Complex64::from_polar(1.0, -e * t))
                .collect(),
            Propagator::Dense { values, vectors } => {
                let v = nalgebra::DVector::from_column_slice(amps);
                let mut coeff = vectors.adjoint() * v;
                for (c, &e) in coeff.iter_mut().zip(values) {
                    *c *= Complex64::from_polar(1.0, -e * t);
                }
                (vectors * coeff).iter().copied().collect()
            }
            Propagator::Krylov(h) => krylov_evolve(h, amps, t),
        };
        StateVector::new(state.basis().clone(), out)
    }
}

/// e^{−iHt}|ψ⟩ on a Hermitian Hamiltonian.
pub fn evolve(state: &StateVector, h: &SparseHamiltonian, t: f64) -> Result<StateVector> {
    if h.dim() != state.basis().dim() {
        return Err(Error::DimensionMismatch {
            what: "Hamiltonian vs state",
            expected: state.basis().dim(),
            found: h.dim(),
        });
    }
    Propagator::new(h)?.apply(state, t)
}

const KRYLOV_DIM: usize = 30;
const KRYLOV_TOL: f64 = 1e-13;

fn krylov_evolve(h: &SparseHamiltonian, v0: &[Complex64], t: f64) -> Vec<Complex64> {
    let mut v = v0.to_vec();
    let mut remaining = t;
    let mut step = t;
    while remaining.abs() > 0.0 {
        if step.abs() > remaining.abs() {
            step = remaining;
        }
        let (next, err) = lanczos_step(h, &v, step);
        if err > KRYLOV_TOL && step.abs() > 1e-12 * t.abs() {
            step *= 0.5;
            continue;
        }
        v = next;
        remaining -= step;
        if err < 0.01 * KRYLOV_TOL {
            step *= 2.0;
        }
    }
    v
}

fn lanczos_step(h: &SparseHamiltonian, v: &[Complex64], dt: f64) -> (Vec<Complex64>, f64) {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return (v.to_vec(), 0.0);
    }
    let dim = v.len();
    let mut q: Vec<Vec<Complex64>> = vec![v.iter().map(|z| z / norm).collect()];
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![Complex64::new(0.0, 0.0); dim];
    let mut last_beta = 0.0;
    for j in 0..KRYLOV_DIM.min(dim) {
        h.matvec(&q[j], &mut w);
        let a: Complex64 = q[j].iter().zip(&w).map(|(x, y)| x.conj() * y).sum();
        alpha.push(a.re);
        // full reorthogonalization; m is small
        for qi in &q {
            let c: Complex64 = qi.iter().zip(&w).map(|(x, y)| x.conj() * y).sum();
            for (wk, qk) in w.iter_mut().zip(qi) {
                *wk -= c * qk;
            }
        }
        let b = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        last_beta = b;
        if b < 1e-12 || j + 1 == KRYLOV_DIM.min(dim) {
            break;
        }
        beta.push(b);
        q.push(w.iter().map(|z| z / b).collect());
    }
    let m = alpha.len();
    let mut tri = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        tri[(i, i)] = alpha[i];
        if i + 1 < m {
            tri[(i, i + 1)] = beta[i];
            tri[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(tri);
    let mut coeff = vec![Complex64::new(0.0, 0.0); m];
    for k in 0..m {
        let phase = Complex64::from_polar(1.0, -eig.eigenvalues[k] * dt) * eig.eigenvectors[(0, k)];
        for (i, c) in coeff.iter_mut().enumerate() {
            *c += eig.eigenvectors[(i, k)] * phase;
        }
    }
    let err = if last_beta < 1e-12 { 0.0 } else { last_beta * coeff[m - 1].norm() };
    let mut out = vec![Complex64::new(0.0, 0.0); dim];
    for (qi, c) in q.iter().zip(&coeff) {
        for (o, x) in out.iter_mut().zip(qi) {
            *o += c * x * norm;
        }
    }
    (out, err)
}
