//! High-order stroboscopic averaging for highly-oscillatory transport
//! equations.
//!
//! The library splits a transport field F = (omega/eps) G + K, whose fast
//! part generates a 2pi-periodic flow, into two commuting averaged fields
//! truncated at orders 0 to 2 in eps. The split system is non-stiff: its
//! characteristics are integrated with eps-independent cost, and the
//! oscillatory solution is recovered either on the diagonal of the
//! two-scale function (constant frequency) or through a phase/profile
//! pair and the fixed point eps tau = S (state-dependent frequency).
//!
//! Modules:
//! - [`fields`]: vector-field algebra (brackets, divergence, Jacobians);
//! - [`words`]: universal coefficients of the word-sum expansion;
//! - [`averaging`]: mode extraction and the three assembly routes;
//! - [`transport`]: characteristic solvers, stiff reference, split solver;
//! - [`phase`]: augmented formulation, phase/profile systems, fixed point;
//! - [`geometry3d`]: magnetic-geometry operators of the 3d problem;
//! - [`problems`]: the built-in example corpus;
//! - [`expr`]: the small expression grammar of the configuration format.

pub mod averaging;
pub mod error;
pub mod expr;
pub mod fields;
pub mod geometry3d;
pub mod linalg;
pub mod ode;
pub mod phase;
pub mod problems;
pub mod quad;
pub mod stats;
pub mod transport;
pub mod words;

pub use error::{Error, Result};
