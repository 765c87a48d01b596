//! Exact Schrödinger-picture dynamics of a few bosonic modes in a truncated Fock basis.

mod basis;
mod beamsplitter;
mod doublewell;
mod hamiltonian;
mod kerr;
mod moments;
mod spins;

pub use basis::{FockBasis, Ladder, StateVector, MAX_DIM, MAX_MODES};
pub use beamsplitter::{beam_splitter, BeamSplitter};
pub use doublewell::{rubidium_chi, run_double_well, DoubleWellConfig, DoubleWellPoint, Scan, RB_SCATTERING};
pub use hamiltonian::{build_hamiltonian, evolve, ModeHamiltonian, Propagator, SparseHamiltonian, DENSE_LIMIT, MAX_NONZEROS};
pub use kerr::{coherent_state, kerr_oracle, poisson_cutoff, CoherentState, KerrMoments, TRUNCATION_WARN};
pub use moments::{MomentTable, QuadraticForm};
pub use spins::{
    best_criteria, entanglement_criteria, optimal_theta, schwinger_spins, Criteria, PhasePolicy, SpinForms, SpinMoments,
    ThetaChoice, WellSpin,
};
