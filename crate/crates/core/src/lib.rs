//! Size-modified Poisson-Boltzmann solver.
//!
//! The potential is split as `u = G + Psi + Phi`, where `G` is the Coulomb
//! part of the fixed charges, `Psi` solves a linear interface problem and
//! `Phi` carries the nonlinear ionic response. Both `Psi` and the Newton
//! directions for `Phi` are computed by an overlapped seven-box Schwarz
//! iteration: six finite-difference boxes solved with multigrid-preconditioned
//! CG, and one central box discretized by P1 finite elements on a mesh fitted
//! to the solute surface.

pub mod analysis;
pub mod composite;
pub mod coulomb;
pub mod error;
pub mod fd;
pub mod fem;
pub mod krylov;
pub mod mesh;
pub mod model;
pub mod partition;
pub mod pqr;
pub mod solver;

pub use error::{Result, SmpbeError};
