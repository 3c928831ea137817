//! Robust and probabilistic D-stability analysis of uncertain polynomial matrices.
//!
//! Given a matrix `A(ρ)` whose entries are polynomials in an uncertain
//! parameter vector `ρ ∈ Δ`, a closed instability region `D^c` in the complex
//! plane and optional moment information on the distribution of `ρ`, the
//! crate bounds the worst-case probability that `A(ρ)` has an eigenvalue in
//! `D^c`. The bound comes from a hierarchy of moment relaxations solved by a
//! built-in interior-point SDP solver; in the support-only case a bound below
//! one certifies robust D-stability.
//!
//! Independent brute-force checks live in [`oracle`].

pub mod analysis;
pub mod exec;
pub mod moments;
pub mod oracle;
pub mod poly;
pub mod problem;
pub mod relax;
pub mod sdp;
pub mod sets;

mod error;

pub use error::Error;
pub use exec::Execution;
