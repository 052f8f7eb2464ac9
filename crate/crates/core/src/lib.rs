//! Modular symbols, Eisenstein ideals and Steinberg symbols at prime level.

pub mod arith;
pub mod component;
pub mod eisenstein;
pub mod error;
pub mod group_ring;
pub mod hecke;
pub mod k2;
pub mod linalg;
pub mod modsym;
pub mod verifier;
pub mod zq;

pub use error::{Error, Result};
