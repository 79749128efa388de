//! Trimmed configuration interaction (TrimCI).
//!
//! Starting from random Slater determinants, the solver alternates between
//! expanding a core determinant set along strong Hamiltonian couplings and
//! trimming the expanded pool back down by coefficient magnitude. The
//! projected Hamiltonian over the core yields a variational ground-state
//! energy, which can be corrected perturbatively and extrapolated.
//!
//! Modules:
//! * [`determinants`]: bitstring determinants, excitations, Slater–Condon rules
//! * [`integrals`]: FCIDUMP input/output, Hubbard lattices, heat-bath lists
//! * [`eigensolver`]: projected Hamiltonians and Davidson iteration
//! * [`engine`]: the expansion/trimming loop and ensemble restarts
//! * [`pt2`]: Epstein–Nesbet correction and linear extrapolation
//! * [`analysis`]: amplitude statistics, complexity indices, MDS embedding
//! * [`fci`]: exact sector diagonalization and fidelities for small systems
//! * [`wavefunction`]: text persistence of explicit wavefunctions

pub mod analysis;
pub mod connections;
pub mod determinants;
pub mod eigensolver;
pub mod engine;
mod error;
pub mod fci;
pub mod integrals;
pub mod pt2;
pub mod wavefunction;

pub use determinants::{Determinant, Excitation};
pub use eigensolver::{EigenResult, ProjectedHamiltonian};
pub use engine::{IterationRecord, TrimCiConfig, WavefunctionState};

pub use error::{Error, Result};
pub use integrals::{HubbardSpec, IntegralTable};
