//! Pulse-level simulation of two inductively coupled rf-SQUID flux qubits
//! with fixed, always-on coupling.
//!
//! Single-qubit gates on the control qubit are realized as a pair of
//! conditional two-qubit gates, each driven by a microwave tone resonant
//! with one of the control transitions `|00> <-> |10>` and `|01> <-> |11>`.
//! A CNOT is a single tone on the target qubit resonant with
//! `|10> <-> |11>`.
//!
//! The pipeline is: [`device`] parameters, eigenstates from [`spectral`],
//! the driven Hamiltonian in the truncated eigenbasis from [`drive`], time
//! evolution in [`propagator`], and gate construction and analysis in
//! [`gates`].

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod device;
pub mod drive;
pub mod error;
pub mod gates;
pub mod label;
pub mod output;
pub mod propagator;
pub mod runner;
pub mod selfcheck;
pub mod spectral;
pub mod system;

pub use error::{Error, Result};
pub use label::StateLabel;
