//! Numerical laboratory for ergodic Schrödinger operators
//! `(Hψ)(n) = ψ(n+1) + ψ(n−1) + λ f(Tⁿω) ψ(n)`.
//!
//! The crate covers the underlying dynamics (torus shifts, the skew-shift,
//! cumulative skew-products, interval exchanges), the repetition property of
//! orbits, Gordon defects of the generated potentials, and transfer-matrix and
//! truncated-operator diagnostics. All verdicts are finite-horizon evidence.

pub mod arithmetic;
pub mod cli;
pub mod dynamics;
pub mod potentials;
pub mod repetition;
pub mod spectral;

pub use arithmetic::{AlphaPreset, ContinuedFraction, FixedPointFrac};
pub use dynamics::{Iet, Permutation, Point, SystemSpec, TorusPoint};
