//! Weyl coefficients of two-dimensional canonical systems `y' = z J H y` on `[a, b)`.
//!
//! The crate evaluates `q_H(z)` with a certified error radius from nested Weyl disks,
//! computes the scale functions `t_hat`, `t_ring` and the envelopes `A(r)`, `L(r)`
//! bounding `Im q_H(ir)`, and ships a zoo of model Hamiltonians together with
//! Krein-string and Sturm-Liouville reductions and spectral tail diagnostics.

// `!(x > 0.0)` is the idiom used throughout to reject NaN along with non-positive input.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimates;
pub mod hamiltonian;
pub mod linalg;
pub mod models;
pub mod quad;
pub mod report;
pub mod scales;
pub mod spec_file;
pub mod special;
pub mod strings_sl;
pub mod tails;
pub mod verify;
pub mod weyl;
pub mod zoo;

pub use error::{Result, WeylError};
pub use hamiltonian::{Density, Hamiltonian, HamiltonianModel, IndivisibleInfo, LogOmega, OmegaMatrix, Tail};
pub use linalg::C64;
pub use weyl::{eval_q, QEvaluation, TransferMatrix, WeylDisk};
