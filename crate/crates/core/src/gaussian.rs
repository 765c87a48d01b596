//! Number-conserving Gaussian operator bases and sampled Rényi entropy.
//!
//! A phase point carries the stochastic Green's function `n` with
//! `n_ij = Tr[Λ a_i† a_j]`; the kernel matrix `μ` of
//! `Λ = :exp(−a† μ a):/𝒩` is derived from it on demand.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};

const MAX_CONDITION: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Species {
    Boson,
    Fermion,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaussianPhasePoint {
    pub species: Species,
    pub n: CMatrix,
    pub weight: f64,
    /// Coherent displacement of a bosonic point, if any.
    pub displacement: Option<Vec<Complex64>>,
}

impl GaussianPhasePoint {
    pub fn new(species: Species, n: CMatrix) -> Result<Self> {
        if !n.is_square() {
            return Err(Error::InvalidArgument("n must be square".into()));
        }
        Ok(GaussianPhasePoint { species, n, weight: 1.0, displacement: None })
    }

    pub fn with_weight(mut self, weight: f64) -> Self {
        self.weight = weight;
        self
    }

    pub fn with_displacement(mut self, d: Vec<Complex64>) -> Result<Self> {
        if self.species == Species::Fermion {
            return Err(Error::InvalidArgument("fermionic points cannot be displaced".into()));
        }
        if d.len() != self.modes() {
            return Err(Error::DimensionMismatch { what: "displacement", expected: self.modes(), found: d.len() });
        }
        self.displacement = Some(d);
        Ok(self)
    }

    pub fn modes(&self) -> usize {
        self.n.nrows()
    }

    pub fn thermal(species: Species, occupations: &[f64]) -> Self {
        let d = occupations.iter().map(|&f| Complex64::new(f, 0.0));
        GaussianPhasePoint {
            species,
            n: DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(occupations.len(), d)),
            weight: 1.0,
            displacement: None,
        }
    }

    /// Checks Hermiticity and the occupation bounds of a physical state.
    pub fn check_physical(&self, tol: f64) -> Result<()> {
        let dev = linalg::hermitian_deviation(&self.n);
        if dev > tol {
            return Err(Error::NotHermitian { deviation: dev });
        }
        let h = (&self.n + self.n.adjoint()).map(|z| z * 0.5);
        let eig = h.symmetric_eigenvalues();
        for &e in eig.iter() {
            let bad = match self.species {
                Species::Boson => e < -tol,
                Species::Fermion => e < -tol || e > 1.0 + tol,
            };
            if bad {
                return Err(Error::InvalidArgument(format!("occupation eigenvalue {e} outside the physical range")));
            }
        }
        Ok(())
    }
}

fn identity(m: usize) -> CMatrix {
    CMatrix::identity(m, m)
}

/// Kernel μ of the Gaussian operator with Green's function `n`.
pub fn mu_from_n(point: &GaussianPhasePoint) -> Result<CMatrix> {
    let m = point.modes();
    let id = identity(m);
    match point.species {
        Species::Boson => {
            let a = (&id + &point.n).transpose();
            linalg::inverse_checked(&a, "I + n", MAX_CONDITION)
        }
        Species::Fermion => {
            let a = (&id - &point.n).transpose();
            let inv = linalg::inverse_checked(&a, "I − n", MAX_CONDITION)?;
            Ok(id * Complex64::new(2.0, 0.0) - inv)
        }
    }
}

pub fn n_from_mu(species: Species, mu: &CMatrix) -> Result<CMatrix> {
    if !mu.is_square() {
        return Err(Error::InvalidArgument("μ must be square".into()));
    }
    let id = identity(mu.nrows());
    match species {
        Species::Boson => {
            let inv = linalg::inverse_checked(&mu.transpose(), "μ", MAX_CONDITION)?;
            Ok(inv - id)
        }
        Species::Fermion => {
            let a = (&id * Complex64::new(2.0, 0.0) - mu).transpose();
            let inv = linalg::inverse_checked(&a, "2I − μ", MAX_CONDITION)?;
            Ok(id - inv)
        }
    }
}

/// Trace of the unnormalized operator `:exp(−a† μ a):`.
pub fn normalization(species: Species, mu: &CMatrix) -> Result<Complex64> {
    let id = identity(mu.nrows());
    match species {
        Species::Boson => {
            let (l, p) = linalg::log_det(mu).ok_or_else(|| Error::Singular("det μ = 0".into()))?;
            Ok(Complex64::from_polar((-l).exp(), -p))
        }
        Species::Fermion => {
            let a = id * Complex64::new(2.0, 0.0) - mu;
            let (l, p) = linalg::log_det(&a).ok_or_else(|| Error::Singular("det(2I − μ) = 0".into()))?;
            Ok(Complex64::from_polar(l.exp(), p))
        }
    }
}

/// Normalized overlap `Tr[Λ(a) Λ(b)]`.
pub fn inner_product(a: &GaussianPhasePoint, b: &GaussianPhasePoint) -> Result<Complex64> {
    if a.species != b.species {
        return Err(Error::InvalidArgument("inner product between different species".into()));
    }
    if a.modes() != b.modes() {
        return Err(Error::DimensionMismatch { what: "inner product", expected: a.modes(), found: b.modes() });
    }
    let id = identity(a.modes());
    match a.species {
        Species::Fermion => {
            let m = (&id - &a.n) * (&id - &b.n) + &a.n * &b.n;
            Ok(linalg::det(&m))
        }
        Species::Boson => {
            let m = &id + &a.n + &b.n;
            let (l, p) = linalg::log_det(&m).ok_or_else(|| Error::Singular("det(I + n + m) = 0".into()))?;
            Ok(Complex64::from_polar((-l).exp(), -p))
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pairing {
    /// Samples (0,1), (2,3), ...; independent pair values.
    #[default]
    DisjointPairs,
    /// Every unordered pair i ≠ j. Costs O(samples²) inner products.
    AllPairs,
    /// The ensemble is a discrete distribution: full weighted double sum, including i = j.
    Exact,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyEstimate {
    /// `None` when the purity estimate is not positive.
    pub s2: Option<f64>,
    /// NaN when a single pair gives no spread to estimate from.
    pub error: f64,
    pub purity: Complex64,
    pub purity_error: f64,
    pub pair_count: usize,
    pub sign_problem: bool,
}

fn check_displacements(points: &[GaussianPhasePoint]) -> Result<()> {
    let first = points[0].displacement.as_deref();
    for p in &points[1..] {
        let same = match (first, p.displacement.as_deref()) {
            (None, None) => true,
            (Some(a), Some(b)) => a.iter().zip(b).all(|(x, y)| (x - y).norm() <= 1e-12 * (1.0 + x.norm())),
            (Some(a), None) | (None, Some(a)) => a.iter().all(|x| x.norm() == 0.0),
        };
        if !same {
            return Err(Error::Unsupported(
                "ensemble members have different displacements; only a common displacement can be shifted away".into(),
            ));
        }
    }
    Ok(())
}

/// Second Rényi entropy `S₂ = −ln Tr ρ²` of `ρ = ∫ P(n) Λ(n)`.
///
/// A common displacement is removed first (it does not change Tr ρ²).
pub fn renyi_entropy(points: &[GaussianPhasePoint], pairing: Pairing) -> Result<EntropyEstimate> {
    if points.len() < 2 {
        return Err(Error::InvalidArgument("renyi_entropy needs at least two samples".into()));
    }
    let species = points[0].species;
    let modes = points[0].modes();
    for p in points {
        if p.species != species {
            return Err(Error::InvalidArgument("mixed species in ensemble".into()));
        }
        if p.modes() != modes {
            return Err(Error::DimensionMismatch { what: "ensemble", expected: modes, found: p.modes() });
        }
        if !(p.weight.is_finite() && p.weight >= 0.0) {
            return Err(Error::InvalidArgument(format!("invalid weight {}", p.weight)));
        }
    }
    check_displacements(points)?;

    let (purity, purity_error, pair_count) = match pairing {
        Pairing::DisjointPairs => {
            let mut w = Vec::new();
            let mut v = Vec::new();
            for pair in points.chunks_exact(2) {
                w.push(pair[0].weight * pair[1].weight);
                v.push(inner_product(&pair[0], &pair[1])?);
            }
            let (mean, err) = weighted_mean(&w, &v);
            (mean, err, v.len())
        }
        Pairing::AllPairs => {
            let n = points.len();
            let mut row_sums = vec![Complex64::new(0.0, 0.0); n];
            let mut row_weights = vec![0.0; n];
            let mut total = Complex64::new(0.0, 0.0);
            let mut total_w = 0.0;
            for i in 0..n {
                for j in i + 1..n {
                    let w = points[i].weight * points[j].weight;
                    let t = inner_product(&points[i], &points[j])? * w;
                    row_sums[i] += t;
                    row_sums[j] += t;
                    row_weights[i] += w;
                    row_weights[j] += w;
                    total += t;
                    total_w += w;
                }
            }
            if total_w <= 0.0 {
                return Err(Error::InvalidArgument("ensemble weights sum to zero".into()));
            }
            let mean = total / total_w;
            // First-order projection variance of the order-2 U-statistic: 4σ₁²/N.
            let h1: Vec<Complex64> = row_sums
                .iter()
                .zip(&row_weights)
                .map(|(s, &w)| if w > 0.0 { s / w } else { mean })
                .collect();
            let var = h1.iter().map(|h| (h - mean).norm_sqr()).sum::<f64>() / (n as f64 - 1.0).max(1.0);
            (mean, (4.0 * var / n as f64).sqrt(), n * (n - 1) / 2)
        }
        Pairing::Exact => {
            let n = points.len();
            let mut total = Complex64::new(0.0, 0.0);
            let mut total_w = 0.0;
            for i in 0..n {
                for j in i..n {
                    let mult = if i == j { 1.0 } else { 2.0 };
                    let w = points[i].weight * points[j].weight * mult;
                    total += inner_product(&points[i], &points[j])? * w;
                    total_w += w;
                }
            }
            if total_w <= 0.0 {
                return Err(Error::InvalidArgument("ensemble weights sum to zero".into()));
            }
            (total / total_w, 0.0, n * (n + 1) / 2)
        }
    };

    let sign_problem = !(purity.re > 0.0) || purity.re <= purity_error;
    let s2 = if purity.re > 0.0 { Some(-purity.re.ln()) } else { None };
    let error = if purity.re > 0.0 { purity_error / purity.re } else { f64::INFINITY };
    if sign_problem {
        log::warn!("purity estimate {purity} not resolved above zero (error {purity_error:e})");
    }
    Ok(EntropyEstimate { s2, error, purity, purity_error, pair_count, sign_problem })
}

fn weighted_mean(w: &[f64], v: &[Complex64]) -> (Complex64, f64) {
    let sw: f64 = w.iter().sum();
    if sw <= 0.0 {
        return (Complex64::new(f64::NAN, 0.0), f64::INFINITY);
    }
    let mean = w.iter().zip(v).map(|(&wi, vi)| vi * wi).sum::<Complex64>() / sw;
    if v.len() < 2 {
        return (mean, f64::NAN);
    }
    let ss = w.iter().zip(v).map(|(&wi, vi)| wi * wi * (vi - mean).norm_sqr()).sum::<f64>();
    let n = v.len() as f64;
    (mean, (ss / (sw * sw) * n / (n - 1.0)).sqrt())
}
