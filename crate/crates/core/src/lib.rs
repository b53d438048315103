//! Simulator and analysis toolkit for a two-ququart trapped-ion processor.
//!
//! The crate models a register of optically-addressed ion qudits (d = 2..6,
//! default 4) driven by a star-connected native gate set: two-level rotations
//! `R_0k(φ, θ)` coupling level 0 to level k, and a Mølmer–Sørensen entangling
//! gate `XX_01,01(χ)` acting on the `{|0⟩, |1⟩}` subspace of a neighbouring
//! ion pair. On top of the gate layer sit
//!
//! - [`ms`]: the physical spin–motion model of the bichromatic MS drive,
//!   with an exact displacement-operator solution and an independent
//!   Fock-space integrator used as an oracle,
//! - [`noise`] / [`readout`]: dephasing, addressing cross-talk, SPAM, and the
//!   sequential electron-shelving qudit readout with finite-shot sampling,
//! - [`experiments`]: Rabi scans, MS duration scans, parity oscillations and
//!   the Bell-state fidelity estimator,
//! - [`transpiler`]: compilation of up-to-4-qubit circuits onto two ququarts
//!   with machine-checked unitary equivalence.

pub mod error;
pub mod experiments;
pub mod fit;
pub mod gates;
pub mod linalg;
pub mod ms;
pub mod noise;
pub mod qudit;
pub mod readout;
pub mod rng;
pub mod scan;
pub mod transpiler;

pub use error::{Error, Result};
pub use qudit::{DensityMatrix, QuditState};
