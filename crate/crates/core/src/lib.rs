//! Laboratory for minimum-width approximation with deep narrow networks.
//!
//! * [`activations`]: the activation catalogue and iterated activations.
//! * [`netcore`]: networks, boxes, sup-norm gaps, rank repair, file format.
//! * [`constructions`]: explicit activation-substitution networks, selected
//!   by name from a [`constructions::ConstructionRegistry`].
//! * [`certifier`]: Poincaré-Miranda root certification and self-intersection
//!   certificates for the counterexample maps `g` and `g*`.
//! * [`experiments`]: the DISK / rot_k training experiments.

pub mod activations;
pub mod certifier;
pub mod constructions;
pub mod error;
pub mod experiments;
pub mod netcore;

pub use activations::{Activation, ActivationKind};
pub use error::{Error, Result};
pub use netcore::{BoxDomain, Interval, NeuralNet};
