//! Computational toolkit for finding linear patterns of complexity one:
//! Bohr sets, local U² norms, s-configuration counting, the local
//! dichotomy, and a certified density-increment engine.

pub mod bohr;
pub mod function;
pub mod gowers;
pub mod increment;
pub mod error;
pub mod intset;
pub mod ntt;
pub mod patterns;
pub mod rational;
pub mod sumfree;
pub mod reduce;

pub use error::{Error, Result};
pub use intset::IntSet;
pub use rational::Rational;
