//! Potential theory for the Lagrangian Monge-Ampere operator on flat C^n:
//! the operator and its Garding branches, cone and edge geometry, three
//! independent constructions cross-checking the product formula, exact
//! minimum traces over the Lagrangian Grassmannian, pluriharmonic
//! comparison machinery, boundary convexity diagnostics, and a wide-stencil
//! Dirichlet solver.

pub mod boundary;
pub mod constructions;
pub mod error;
pub mod exprparse;
pub mod lagalg;
pub mod laggrass;
pub mod numlin;
pub mod pluriharm;
pub mod solver;

pub use error::{Error, Result};
pub use lagalg::{ConeFlags, Decomposition, GardingData, LagSpectrum, SymForm};
pub use laggrass::LagFrame;
