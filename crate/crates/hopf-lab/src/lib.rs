//! Numerical laboratory for degenerate fully nonlinear elliptic operators
//! of the form `|∇u|^α F(D²u)` with `F` uniformly (λ,Λ)-elliptic.
//!
//! The crate evaluates Pucci extremal operators exactly, implements the
//! explicit annular barrier with its geometric constants, solves radial and
//! 2D boundary value problems by monotone policy iteration, and empirically
//! measures Harnack-type and boundary-growth inequalities, one-phase free
//! boundary estimates and Campanato-type regularity constants.

pub mod barrier;
pub mod cli;
pub mod freeboundary;
pub mod grid;
pub mod operators;
pub mod regularity;
pub mod solver;
pub mod verify;
