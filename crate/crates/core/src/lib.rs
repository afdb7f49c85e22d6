//! Qubit-register simulation of the quantum sawtooth map on a computer with
//! static imperfections, and the spectral diagnostics used to study how its
//! Floquet eigenstates respond to them.
//!
//! Layers, bottom up: [`register`] (conventions and states), [`gates`]
//! (kernels, QFT, per-kick schedule), [`imperfect`] (disorder and inter-gate
//! propagators), [`sawtooth`] (classical map, exact and gate-level kicks),
//! [`floquet`] (one-kick unitary and its certified eigendecomposition) and
//! [`diagnostics`] (entropy, fidelity, Husimi, LDOS, spacing statistics and
//! closed-form predictors).

pub mod diagnostics;
pub mod error;
pub mod floquet;
pub mod gates;
pub mod imperfect;
pub mod register;
pub mod sawtooth;

pub use error::{Error, Result};
pub use register::{basis_state, inner_product, Basis, MapParams, SeedPlan, StateVector};
