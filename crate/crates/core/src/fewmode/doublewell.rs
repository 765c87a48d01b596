use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::basis::{FockBasis, StateVector};
use super::beamsplitter::BeamSplitter;
use super::hamiltonian::{build_hamiltonian, evolve, ModeHamiltonian};
use super::kerr::{coherent_state, poisson_cutoff};
use super::moments::MomentTable;
use super::spins::{best_criteria, optimal_theta, PhasePolicy, SpinMoments};
use crate::error::{Error, Result};

/// Rb-87 scattering lengths a₁₁, a₁₂, a₂₂ in Bohr radii.
pub const RB_SCATTERING: [f64; 3] = [100.4, 80.8, 95.5];

/// χ_ij ∝ a_ij normalized to χ₁₁ = 1.
pub fn rubidium_chi() -> [[f64; 2]; 2] {
    let [a11, a12, a22] = RB_SCATTERING;
    [[1.0, a12 / a11], [a12 / a11, a22 / a11]]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Scan {
    /// τ = χ₁₁ N_A t at fixed atom number.
    Tau { taus: Vec<f64> },
    /// Atom number at fixed τ.
    AtomNumber { atoms: Vec<f64>, tau: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoubleWellConfig {
    /// Mean atom number in well A, shared equally between its two spin modes.
    pub atoms_a: f64,
    /// Mean atom number in well B; equal to `atoms_a` when absent.
    pub atoms_b: Option<f64>,
    pub chi: [[f64; 2]; 2],
    /// Inter-well tunneling during the evolution.
    pub omega: f64,
    pub scan: Scan,
    pub phase_policy: PhasePolicy,
    /// Applied to both spin pairs before the cross-well criteria.
    pub beam_splitter: Option<BeamSplitter>,
    /// Poisson tail allowed outside the Fock cutoff.
    pub truncation_tol: f64,
}

impl Default for DoubleWellConfig {
    fn default() -> Self {
        Self {
            atoms_a: 200.0,
            atoms_b: None,
            chi: rubidium_chi(),
            omega: 0.0,
            scan: Scan::Tau {
                taus: (0..=40).map(|k| 0.5 * k as f64).collect(),
            },
            phase_policy: PhasePolicy::Auto,
            beam_splitter: Some(BeamSplitter::fifty_fifty(std::f64::consts::FRAC_PI_2)),
            truncation_tol: 1e-10,
        }
    }
}

/// One row of the scan output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoubleWellPoint {
    pub tau: f64,
    pub atoms_a: f64,
    /// Well-A squeezing angle and 10 log10(Δ²J/n₀) along it and its conjugate.
    pub theta: f64,
    pub s_db_theta: f64,
    pub s_db_theta_perp: f64,
    /// |⟨J_y^A⟩|/2
    pub n0: f64,
    pub cross_theta: f64,
    pub s_plus_db: f64,
    pub s_minus_db: f64,
    pub e_product: f64,
    pub e_sum: f64,
    pub discarded_weight: f64,
}

impl DoubleWellConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if !(self.atoms_a > 0.0) || self.atoms_b.is_some_and(|b| !(b > 0.0)) {
            return bad("atom numbers must be positive");
        }
        if self.chi[0][1] != self.chi[1][0] {
            return bad("χ must be symmetric");
        }
        if !(self.chi[0][0] > 0.0) {
            return bad("χ₁₁ sets the time unit and must be positive");
        }
        if !(self.truncation_tol > 0.0 && self.truncation_tol < 1.0) {
            return bad("truncation tolerance must lie in (0, 1)");
        }
        let points = match &self.scan {
            Scan::Tau { taus } => taus.len(),
            Scan::AtomNumber { atoms, .. } => atoms.len(),
        };
        if points == 0 {
            return bad("empty scan");
        }
        Ok(())
    }
}

/// Runs the scan. Points are independent and evaluated in parallel.
pub fn run_double_well(cfg: &DoubleWellConfig) -> Result<Vec<DoubleWellPoint>> {
    cfg.validate()?;
    let jobs: Vec<(f64, f64)> = match &cfg.scan {
        Scan::Tau { taus } => taus.iter().map(|&t| (t, cfg.atoms_a)).collect(),
        Scan::AtomNumber { atoms, tau } => atoms.iter().map(|&n| (*tau, n)).collect(),
    };
    jobs.par_iter().map(|&(tau, n)| point(cfg, tau, n)).collect()
}

fn point(cfg: &DoubleWellConfig, tau: f64, atoms_a: f64) -> Result<DoubleWellPoint> {
    let atoms_b = cfg.atoms_b.map(|b| b * atoms_a / cfg.atoms_a).unwrap_or(atoms_a);
    let t = tau / (cfg.chi[0][0] * atoms_a);
    let amp = |n: f64| Complex64::new((0.5 * n).sqrt(), 0.0);
    let (table, discarded) = if cfg.omega == 0.0 {
        let chi = DMatrix::from_fn(2, 2, |i, j| cfg.chi[i][j]);
        let h = ModeHamiltonian::kerr(chi)?;
        let mut wells = Vec::new();
        let mut discarded = 0.0;
        for n in [atoms_a, atoms_b] {
            let cutoff = poisson_cutoff(0.5 * n, 0.5 * cfg.truncation_tol);
            let basis = Arc::new(FockBasis::new(2, cutoff)?);
            let psi = coherent_state(&[amp(n), amp(n)], &basis)?;
            discarded += psi.discarded_weight;
            let hs = build_hamiltonian(&h, &basis)?;
            wells.push(evolve(&psi.state, &hs, t)?);
        }
        let refs: Vec<&StateVector> = wells.iter().collect();
        (MomentTable::product(&refs)?, discarded)
    } else {
        let h = ModeHamiltonian::double_well(cfg.omega, cfg.chi)?;
        let cutoff = poisson_cutoff(0.5 * atoms_a.max(atoms_b), 0.25 * cfg.truncation_tol);
        let basis = Arc::new(FockBasis::new(4, cutoff)?);
        let psi = coherent_state(&[amp(atoms_a), amp(atoms_a), amp(atoms_b), amp(atoms_b)], &basis)?;
        let hs = build_hamiltonian(&h, &basis)?;
        (MomentTable::from_state(&evolve(&psi.state, &hs, t)?), psi.discarded_weight)
    };
    let local = SpinMoments::from_table(&table, cfg.phase_policy);
    let well = local.wells[0];
    let choice = optimal_theta(&well);
    let n0 = well.shot_noise();
    let db = |v: f64| 10.0 * (v / n0).log10();
    let cross = match cfg.beam_splitter {
        Some(bs) => {
            let s = bs.mode_matrix(4, &[(0, 2), (1, 3)]);
            SpinMoments::from_table_with(&table, cfg.phase_policy, &|q| q.transformed(&s))
        }
        None => local,
    };
    let crit = best_criteria(&cross)?;
    Ok(DoubleWellPoint {
        tau,
        atoms_a,
        theta: choice.theta,
        s_db_theta: db(choice.variance),
        s_db_theta_perp: db(well.variance_at(choice.theta + std::f64::consts::FRAC_PI_2)),
        n0,
        cross_theta: crit.theta,
        s_plus_db: crit.s_plus_db,
        s_minus_db: crit.s_minus_db,
        e_product: crit.e_product,
        e_sum: crit.e_sum,
        discarded_weight: discarded,
    })
}
