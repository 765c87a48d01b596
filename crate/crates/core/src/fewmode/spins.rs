use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::basis::StateVector;
use super::moments::{MomentTable, QuadraticForm};
use crate::error::{Error, Result};

/// Below this both the anisotropy and the covariance count as zero.
pub const ISOTROPY_TOL: f64 = 1e-14;
/// Denominators of the entanglement criteria below this are undefined.
pub const CRITERION_TOL: f64 = 1e-14;

/// How the spin phase shift Δθ is chosen for each well.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "value")]
pub enum PhasePolicy {
    /// Δθ = π/2 − arg⟨a₂†a₁⟩, which puts the mean spin along J_y.
    Auto,
    Fixed(f64),
}

/// Phase-rotated Schwinger operators of one well built from modes (p, q) = (1, 2).
#[derive(Debug, Clone)]
pub struct SpinForms {
    pub jx: QuadraticForm,
    pub jy: QuadraticForm,
    pub jz: QuadraticForm,
}

impl SpinForms {
    pub fn new(modes: usize, p: usize, q: usize, dtheta: f64) -> Self {
        let e = Complex64::from_polar(1.0, dtheta);
        let mut jx = QuadraticForm::zeros(modes);
        jx.add_term(q, p, 0.5 * e);
        jx.add_term(p, q, 0.5 * e.conj());
        let mut jy = QuadraticForm::zeros(modes);
        let half_i = Complex64::new(0.0, 0.5);
        jy.add_term(q, p, e / (2.0 * Complex64::i()));
        jy.add_term(p, q, e.conj() * half_i);
        let mut jz = QuadraticForm::zeros(modes);
        jz.add_term(q, q, Complex64::new(0.5, 0.0));
        jz.add_term(p, p, Complex64::new(-0.5, 0.0));
        Self { jx, jy, jz }
    }

    /// J(θ) = cos θ J_z + sin θ J_x.
    pub fn rotated(&self, theta: f64) -> QuadraticForm {
        self.jz.scaled(theta.cos()).plus(&self.jx.scaled(theta.sin()))
    }
}

/// Single-well spin statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WellSpin {
    pub dtheta: f64,
    /// (⟨J_x⟩, ⟨J_y⟩, ⟨J_z⟩)
    pub mean: [f64; 3],
    pub var_z: f64,
    pub var_x: f64,
    pub cov_zx: f64,
    pub var_y: f64,
}

impl WellSpin {
    /// Δ²J(θ) = Δ²(cos θ J_z + sin θ J_x).
    pub fn variance_at(&self, theta: f64) -> f64 {
        let (s, c) = theta.sin_cos();
        c * c * self.var_z + s * s * self.var_x + 2.0 * s * c * self.cov_zx
    }

    /// |⟨J_y⟩|/2, the coherent-state level of Δ²J(θ).
    pub fn shot_noise(&self) -> f64 {
        0.5 * self.mean[1].abs()
    }
}

/// Spin moments of two wells plus their cross covariances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinMoments {
    pub wells: [WellSpin; 2],
    /// cov(J_z^A, J_z^B), cov(J_x^A, J_x^B), cov(J_z^A, J_x^B), cov(J_x^A, J_z^B)
    pub cross_zz: f64,
    pub cross_xx: f64,
    pub cross_zx: f64,
    pub cross_xz: f64,
}

impl SpinMoments {
    /// Build from a moment table with well A = (0, 1) and well B = (2, 3).
    pub fn from_table(table: &MomentTable, policy: PhasePolicy) -> Self {
        Self::from_table_with(table, policy, &|q| q.clone())
    }

    /// Same, but every spin operator is first mapped through `heisenberg`, e.g. a
    /// beam splitter acting before the measurement.
    pub fn from_table_with(
        table: &MomentTable,
        policy: PhasePolicy,
        heisenberg: &dyn Fn(&QuadraticForm) -> QuadraticForm,
    ) -> Self {
        let n = table.modes();
        assert!(n >= 4, "two wells need four modes");
        let forms: Vec<(f64, SpinForms)> = [(0usize, 1usize), (2, 3)]
            .iter()
            .map(|&(p, q)| {
                let dtheta = match policy {
                    PhasePolicy::Fixed(d) => d,
                    PhasePolicy::Auto => {
                        let mut hop = QuadraticForm::zeros(n);
                        hop.add_term(q, p, Complex64::new(1.0, 0.0));
                        let c = table.mean(&heisenberg(&hop));
                        if c.norm() > 0.0 {
                            PI / 2.0 - c.arg()
                        } else {
                            0.0
                        }
                    }
                };
                let f = SpinForms::new(n, p, q, dtheta);
                let f = SpinForms {
                    jx: heisenberg(&f.jx),
                    jy: heisenberg(&f.jy),
                    jz: heisenberg(&f.jz),
                };
                (dtheta, f)
            })
            .collect();
        let well = |f: &SpinForms, dtheta: f64| WellSpin {
            dtheta,
            mean: [table.mean(&f.jx).re, table.mean(&f.jy).re, table.mean(&f.jz).re],
            var_z: table.variance(&f.jz),
            var_x: table.variance(&f.jx),
            cov_zx: table.covariance(&f.jz, &f.jx),
            var_y: table.variance(&f.jy),
        };
        let (a, b) = (&forms[0].1, &forms[1].1);
        Self {
            wells: [well(a, forms[0].0), well(b, forms[1].0)],
            cross_zz: table.covariance(&a.jz, &b.jz),
            cross_xx: table.covariance(&a.jx, &b.jx),
            cross_zx: table.covariance(&a.jz, &b.jx),
            cross_xz: table.covariance(&a.jx, &b.jz),
        }
    }

    /// cov(J_θ^A, J_θ^B).
    pub fn cross_at(&self, theta: f64) -> f64 {
        let (s, c) = theta.sin_cos();
        c * c * self.cross_zz + s * s * self.cross_xx + s * c * (self.cross_zx + self.cross_xz)
    }

    /// Δ²(J_θ^A − J_θ^B).
    pub fn difference_variance(&self, theta: f64) -> f64 {
        self.wells[0].variance_at(theta) + self.wells[1].variance_at(theta) - 2.0 * self.cross_at(theta)
    }

    /// Δ²(J_θ^A + J_θ^B).
    pub fn sum_variance(&self, theta: f64) -> f64 {
        self.wells[0].variance_at(theta) + self.wells[1].variance_at(theta) + 2.0 * self.cross_at(theta)
    }
}

/// Spin moments of a four-mode state, wells (a₁, a₂) = modes (0, 1) and (b₁, b₂) = (2, 3).
pub fn schwinger_spins(state: &StateVector, policy: PhasePolicy) -> SpinMoments {
    SpinMoments::from_table(&MomentTable::from_state(state), policy)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaChoice {
    pub theta: f64,
    pub variance: f64,
    /// Set when Δ²J_z = Δ²J_x and the covariance vanishes, so every θ is optimal.
    pub isotropic: bool,
}

/// θ ∈ (−π/2, π/2] minimizing Δ²(cos θ J_z + sin θ J_x).
pub fn optimal_theta(well: &WellSpin) -> ThetaChoice {
    let d = well.var_z - well.var_x;
    let c = well.cov_zx;
    if d.abs() < ISOTROPY_TOL && c.abs() < ISOTROPY_TOL {
        return ThetaChoice {
            theta: 0.0,
            variance: well.variance_at(0.0),
            isotropic: true,
        };
    }
    // V(θ) = ½(V_z+V_x) + ½d cos 2θ + c sin 2θ
    let theta = 0.5 * f64::atan2(-2.0 * c, -d);
    let other = if theta > 0.0 { theta - PI / 2.0 } else { theta + PI / 2.0 };
    let (v1, v2) = (well.variance_at(theta), well.variance_at(other));
    let (theta, variance) = if v2 < v1 { (other, v2) } else { (theta, v1) };
    ThetaChoice {
        theta,
        variance,
        isotropic: false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Criteria {
    pub theta: f64,
    /// (|⟨J_y^A⟩| + |⟨J_y^B⟩|)/2
    pub n0: f64,
    /// Δ²(J_θ^A − J_θ^B)
    pub var_plus: f64,
    /// Δ²(J_{θ+π/2}^A + J_{θ+π/2}^B)
    pub var_minus: f64,
    pub e_product: f64,
    pub e_sum: f64,
    pub s_plus_db: f64,
    pub s_minus_db: f64,
}

impl Criteria {
    pub fn entangled(&self) -> bool {
        self.e_product < 1.0 || self.e_sum < 1.0
    }
}

/// Product and sum criteria at a given θ.
pub fn entanglement_criteria(m: &SpinMoments, theta: f64) -> Result<Criteria> {
    let n0 = 0.5 * (m.wells[0].mean[1].abs() + m.wells[1].mean[1].abs());
    if !(n0 >= CRITERION_TOL) {
        return Err(Error::Undefined(format!("mean J_y is {n0:e}; entanglement criteria undefined")));
    }
    let var_plus = m.difference_variance(theta).max(0.0);
    let var_minus = m.sum_variance(theta + PI / 2.0).max(0.0);
    Ok(Criteria {
        theta,
        n0,
        var_plus,
        var_minus,
        e_product: (var_plus * var_minus).sqrt() / n0,
        e_sum: (var_plus + var_minus) / (2.0 * n0),
        s_plus_db: 10.0 * (var_plus / n0).log10(),
        s_minus_db: 10.0 * (var_minus / n0).log10(),
    })
}

/// θ minimizing E_product: dense grid over [0, π) then golden-section refinement.
pub fn best_criteria(m: &SpinMoments) -> Result<Criteria> {
    const GRID: usize = 720;
    let f = |t: f64| m.difference_variance(t).max(0.0) * m.sum_variance(t + PI / 2.0).max(0.0);
    let step = PI / GRID as f64;
    let best = (0..GRID)
        .map(|k| k as f64 * step)
        .min_by(|a, b| f(*a).total_cmp(&f(*b)))
        .unwrap_or(0.0);
    let (mut lo, mut hi) = (best - step, best + step);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let x1 = hi - g * (hi - lo);
        let x2 = lo + g * (hi - lo);
        if f(x1) <= f(x2) {
            hi = x2;
        } else {
            lo = x1;
        }
    }
    let mut theta = 0.5 * (lo + hi);
    if f(best) < f(theta) {
        theta = best;
    }
    entanglement_criteria(m, theta)
}
