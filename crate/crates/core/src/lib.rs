//! Real quadratic discriminants with small fundamental unit.
//!
//! The crate enumerates the family of discriminants `d <= x` whose
//! fundamental unit satisfies `eps_d <= d^(1/2 + alpha)`, computes their
//! class numbers by two independent methods, and implements the random
//! Euler-product model used to predict the statistics of `L(1, chi_d)` and
//! `h(d)` over that family.

pub mod arith;
pub mod asymptotics;
pub mod charsum;
pub mod classno;
pub mod dd;
pub mod error;
pub mod model;
pub mod pell;
pub mod special;

pub use arith::ComplexScalar;
pub use error::{Error, Result};
