//! Linear symmetric 2-state radius-1 cellular automata grown from a single
//! seed, exact counts of their nonzero states, and comparison of the
//! normalized cumulative counts with Salem's singular function.

pub mod analysis;
pub mod closedform;
pub mod engine;
pub mod error;
pub mod rules;
pub mod salem;

pub use error::{Error, Result};
pub use rules::{enumerate_rules, LatticeKind, Rule, Stencil};
