//! Example Hamiltonians with closed-form ingredients and their asymptotic predictors.

pub mod hpl;
pub mod powerlog;
pub mod prescribed;

pub use hpl::{hpl_predict, make_hpl, make_r3_variant, Hpl, HplParams, HplQuantity, HplVariant};
pub use powerlog::{make_powerlog, powerlog_predict, PowerLog, PowerLogParams, PowerLogPrediction};
pub use prescribed::{make_prescribed_angle, PrescribedAngle, PrescribedAngleSpec, Profile, Split};

use crate::error::{Result, WeylError};
use crate::hamiltonian::{Density, Hamiltonian, HamiltonianModel, OmegaMatrix};
use crate::models::PiecewiseConstant;

/// Rank-one polynomial densities on `[0, inf)` whose primitives are polynomials.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Quadratic {
    /// `[[1, -t], [-t, t^2]]`: the free Schroedinger operator with a Dirichlet condition
    FreeSchrodinger,
    /// `[[t^2, t], [t, 1]]`: the string with unit mass density
    UniformString,
}

impl Hamiltonian for Quadratic {
    fn label(&self) -> String {
        match self {
            Quadratic::FreeSchrodinger => "free_schrodinger".into(),
            Quadratic::UniformString => "uniform_string".into(),
        }
    }

    fn left(&self) -> f64 {
        0.0
    }

    fn density(&self, t: f64) -> Density {
        match self {
            Quadratic::FreeSchrodinger => Density::new(1.0, t * t, -t),
            Quadratic::UniformString => Density::new(t * t, 1.0, t),
        }
    }

    fn primitive(&self, t: f64) -> Option<OmegaMatrix> {
        let (t2, t3) = (t * t / 2.0, t * t * t / 3.0);
        Some(match self {
            Quadratic::FreeSchrodinger => OmegaMatrix::new(t, t3, -t2, t),
            Quadratic::UniformString => OmegaMatrix::new(t3, t, t2, t),
        })
    }
}

/// `H_0 = [[1, -t], [-t, t^2]]` on `[0, inf)`, with `q(z) = i sqrt(z)`.
pub fn free_schrodinger() -> HamiltonianModel {
    HamiltonianModel::new(Quadratic::FreeSchrodinger)
}

/// `[[t^2, t], [t, 1]]` on `[0, inf)`, with `q(z) = 1/sqrt(-z)`.
pub fn uniform_string_hamiltonian() -> HamiltonianModel {
    HamiltonianModel::new(Quadratic::UniformString)
}

pub fn constant(h1: f64, h2: f64, h3: f64) -> Result<HamiltonianModel> {
    Ok(HamiltonianModel::new(PiecewiseConstant::new(vec![(0.0, Density::new(h1, h2, h3))])?))
}

/// `diag(1, 0)` on `[0, 1)` followed by the identity.
pub fn type_zero_prefix() -> HamiltonianModel {
    let rows = vec![(0.0, Density::new(1.0, 0.0, 0.0)), (1.0, Density::new(1.0, 1.0, 0.0))];
    HamiltonianModel::new(PiecewiseConstant::new(rows).expect("valid table"))
}

/// `diag(0, 1)` on `[0, 1)` followed by the identity.
pub fn type_half_pi_prefix() -> HamiltonianModel {
    let rows = vec![(0.0, Density::new(0.0, 1.0, 0.0)), (1.0, Density::new(1.0, 1.0, 0.0))];
    HamiltonianModel::new(PiecewiseConstant::new(rows).expect("valid table"))
}

/// Names accepted by [`by_name`].
pub const ZOO_NAMES: &[&str] = &[
    "identity",
    "diag41",
    "powerlog",
    "hpl",
    "hpl13",
    "r3",
    "free_schrodinger",
    "uniform_string",
    "type0_prefix",
    "type_half_pi_prefix",
];

/// Parameters of the `r3` zoo entry.
pub const R3_DEFAULT: (f64, f64) = (0.25, 0.6);

pub fn by_name(name: &str) -> Result<HamiltonianModel> {
    match name {
        "identity" => constant(1.0, 1.0, 0.0),
        "diag41" => constant(4.0, 1.0, 0.0),
        "powerlog" => make_powerlog(PowerLogParams::new(2.0, 1.0, 3.0)),
        "hpl" => make_hpl(HplParams::new(0.5, 0.5)),
        "hpl13" => make_hpl(HplParams::new(1.0 / 3.0, 2.0 / 3.0)),
        "r3" => make_r3_variant(HplParams::r3(R3_DEFAULT.0, R3_DEFAULT.1)),
        "free_schrodinger" => Ok(free_schrodinger()),
        "uniform_string" => Ok(uniform_string_hamiltonian()),
        "type0_prefix" => Ok(type_zero_prefix()),
        "type_half_pi_prefix" => Ok(type_half_pi_prefix()),
        other => Err(WeylError::InvalidParams(format!(
            "unknown zoo model '{other}', expected one of {}",
            ZOO_NAMES.join(", ")
        ))),
    }
}
