//! Eigenvalue trajectories of small complex-symmetric non-Hermitian
//! Hamiltonians: level crossings, width bifurcation and exceptional points.

#![allow(clippy::needless_range_loop)]

mod dd;
pub mod expr;
pub mod model;
pub mod scenarios;
pub mod eig;
pub mod epfind;
pub mod par;
pub mod sweep;
pub mod two_level;
