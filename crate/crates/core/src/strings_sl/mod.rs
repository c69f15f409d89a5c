//! Krein strings and Sturm-Liouville problems, reduced to canonical systems.

pub mod krein;
pub mod sturm;

pub use krein::{
    delta_of, string_to_hamiltonian, tau_hat_and_f, theorem_a41_check, A41Record, KreinString, MassKind,
    StringScales,
};
pub use sturm::{sl_solutions, sl_to_hamiltonian, theorem_t9_check, Coef, SlProblem, SlSolutions, T9Record};
