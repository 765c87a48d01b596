//! Linear and density-dependent pieces of the lattice equations shared by the
//! Wigner and positive-P engines.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::lattice::{HubbardModel, ModeTransform};

#[derive(Debug, Clone)]
pub struct FieldOps {
    model: HubbardModel,
    transform: ModeTransform,
    has_kinetic: bool,
    has_diagonal: bool,
    spins: usize,
    cells: usize,
}

impl FieldOps {
    pub fn new(model: HubbardModel) -> Self {
        let transform = ModeTransform::new(model.lattice());
        let has_kinetic = model.kinetic().iter().any(|&k| k != 0.0);
        let spins = model.lattice().spin_count();
        let cells = model.lattice().cell_count();
        let has_diagonal =
            model.potential().iter().any(|&v| v != 0.0) || model.internal_energies().iter().any(|&v| v != 0.0);
        Self {
            model,
            transform,
            has_kinetic,
            has_diagonal,
            spins,
            cells,
        }
    }

    pub fn model(&self) -> &HubbardModel {
        &self.model
    }

    pub fn spins(&self) -> usize {
        self.spins
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn modes(&self) -> usize {
        self.spins * self.cells
    }

    pub fn has_kinetic(&self) -> bool {
        self.has_kinetic
    }

    /// True when the kinetic or site-diagonal linear terms are present.
    pub fn has_flow(&self) -> bool {
        self.has_kinetic || self.has_diagonal
    }

    /// V_s(x) + ω_s at a mode.
    pub fn diagonal(&self, m: usize) -> f64 {
        self.model.potential()[m] + self.model.internal_energies()[m / self.cells]
    }

    /// x ← exp(−i·sign·(K + D)·dt) x, with the dispersion K applied in k-space
    /// between two half-steps of the site-diagonal part D.
    pub fn linear_flow(&self, x: &mut [Complex64], dt: f64, sign: f64) {
        if self.has_diagonal {
            self.diagonal_flow(x, 0.5 * dt, sign);
        }
        if self.has_kinetic {
            self.transform.to_momentum(x).expect("field length matches lattice");
            for (v, &k) in x.iter_mut().zip(self.model.kinetic()) {
                *v *= Complex64::from_polar(1.0, -sign * k * dt);
            }
            self.transform.to_sites(x).expect("field length matches lattice");
        }
        if self.has_diagonal {
            self.diagonal_flow(x, 0.5 * dt, sign);
        }
    }

    fn diagonal_flow(&self, x: &mut [Complex64], dt: f64, sign: f64) {
        for (m, v) in x.iter_mut().enumerate() {
            *v *= Complex64::from_polar(1.0, -sign * self.diagonal(m) * dt);
        }
    }

    /// out = C(t) x for the time-dependent spin coupling C; `conjugate`
    /// applies C* instead. Zero when the model has no coupling.
    pub fn coupling_linear(&self, t: f64, x: &[Complex64], out: &mut [Complex64], conjugate: bool) {
        out.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        if let Some(c) = self.model.coupling_at(t) {
            for s in 0..self.spins {
                for u in 0..self.spins {
                    let mut k = c[s * self.spins + u];
                    if conjugate {
                        k = k.conj();
                    }
                    if k == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    for n in 0..self.cells {
                        out[s * self.cells + n] += k * x[u * self.cells + n];
                    }
                }
            }
        }
    }

    /// (K + D) x, the full time-independent linear part.
    pub fn apply_linear(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut out: Vec<Complex64> = x.iter().enumerate().map(|(m, v)| v * self.diagonal(m)).collect();
        if self.has_kinetic {
            let mut k = x.to_vec();
            self.transform.to_momentum(&mut k).expect("field length matches lattice");
            for (v, &e) in k.iter_mut().zip(self.model.kinetic()) {
                *v *= e;
            }
            self.transform.to_sites(&mut k).expect("field length matches lattice");
            for (o, v) in out.iter_mut().zip(&k) {
                *o += v;
            }
        }
        out
    }

    /// Σ_u χ_su d(u·cells + n) at mode (s, n) for a per-mode density d.
    pub fn interaction_shift(&self, density: impl Fn(usize) -> Complex64, s: usize, n: usize) -> Complex64 {
        let mut v = Complex64::new(0.0, 0.0);
        for u in 0..self.spins {
            v += self.model.chi(s, u) * density(u * self.cells + n);
        }
        v
    }

    /// B with B Bᵀ = c·χ (χ real symmetric, c a phase such as −i).
    pub fn chi_root(&self, c: Complex64) -> DMatrix<Complex64> {
        let s = self.spins;
        let chi = DMatrix::from_fn(s, s, |i, j| self.model.chi(i, j));
        let eig = SymmetricEigen::new(chi);
        let q = eig.eigenvectors.map(|v| Complex64::new(v, 0.0));
        let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| (c * l).sqrt()));
        &q * d * q.transpose()
    }
}
