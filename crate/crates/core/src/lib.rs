//! Moment-based ground-energy estimation for few-qubit spin models.
//!
//! The crate follows one pipeline: build a Pauli-operator Hamiltonian
//! ([`models`]), prepare a trial state on a dense statevector
//! ([`simulator`]), organize the Pauli strings that appear in Hamiltonian
//! powers into simultaneously measurable groups ([`grouping`]), turn string
//! expectations into power moments <H^n> ([`moments`]), and feed the moments
//! to classical ground-energy estimators ([`estimators`]).
//!
//! Qubit convention used throughout: qubit 0 is the leftmost letter of a
//! string literal and the lowest bit of a basis index, so |1100> is index 3.

pub mod error;
pub mod pauli;
pub mod models;
pub mod simulator;
pub mod grouping;
pub mod moments;
pub mod estimators;

pub use error::{Error, Result};
