//! Radial comparison minimizers, dead cores and variational diagnostics for
//! vector-valued energies `∫ ½|∇u|² + W(u)` with nonsmooth potentials and the
//! constraint `|u| ≤ q`.

pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod field;
pub mod io;
pub mod oracles;
pub mod potential;
pub mod quadrature;
pub mod radial;

pub use error::{Error, Result};
pub use potential::{AngularPotential, IqResult, IqVariant, PotentialSpec, RadialKind, RadialPotential};
pub use radial::{
    ComparisonPair, CriticalRadius, DeadCoreReport, LevelSpec, RadialGrid, RadialProblem, RadialProfile, RadialSolver,
    TieBreak,
};
