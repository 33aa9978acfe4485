//! Chase engines, rule normalisation and termination analysis for existential rules.
//!
//! - [`model`]: terms, atoms, rules, fact bases and knowledge bases.
//! - [`textio`]: the `.erl` text format.
//! - [`hom`]: homomorphisms, retractions, isomorphisms and canonical codes.
//! - [`derivation`]: chase variants, triggers, histories and derivations.
//! - [`chase`]: applicability, strategies, derivations and the breadth-first chase.
//! - [`normalize`]: piece decomposition and atomic decompositions.
//! - [`analysis`]: derivation-graph exploration, terminating-derivation search, entailment and
//!   fixture classification.
//! - [`tmgen`]: encoding Turing machines into existential rules.

pub mod analysis;
pub mod chase;
pub mod derivation;
pub mod hom;
pub mod model;
pub mod normalize;
pub mod textio;
pub mod tmgen;
