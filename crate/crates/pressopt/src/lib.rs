//! Density-based topology optimization of 2-D structures loaded by
//! design-dependent fluidic pressure.
//!
//! The pressure field is modeled with Darcy's law plus a drainage term, so the
//! load follows the fluid wherever it penetrates the evolving design. Each
//! optimization step solves
//!
//! ```text
//! A(ρ̃) p = 0          (flow balance, Dirichlet pressure data)
//! K(ρ̃) u = F = −T p   (linear elasticity, consistent nodal loads)
//! ```
//!
//! then minimizes compliance uᵀKu under a volume constraint, with adjoint
//! load sensitivities, density filtering, and MMA design updates.
//!
//! The crate is organized along the pipeline:
//!
//! - [`mesh`]: structured grid of unit Q4 elements, DOF maps, boundary sets
//! - [`linalg`]: sparse assembly and SPD solves (Cholesky via `faer`)
//! - [`darcy`]: flow/drainage interpolation and the pressure solve
//! - [`elasticity`]: SIMP stiffness, pressure-to-force transformation
//! - [`filter`]: density filter and its transpose (sensitivity chain rule)
//! - [`sensitivity`]: compliance, adjoint solve, design derivatives
//! - [`mma`]: method of moving asymptotes update
//! - [`problems`]: benchmark problem definitions (arch, piston, chamber)
//! - [`driver`]: the optimization loop
//! - [`io`]: CLI, config files, PGM/CSV emission

pub mod darcy;
pub mod driver;
pub mod elasticity;
mod error;
pub mod filter;
pub mod io;
pub mod linalg;
pub mod mesh;
pub mod mma;
pub mod problems;
pub mod sensitivity;

pub use error::{Error, Result};
