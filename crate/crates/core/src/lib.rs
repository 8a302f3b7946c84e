//! Numerical laboratory for variable-exponent Lebesgue norms and local
//! complementary Morrey-type norms on bounded domains.
//!
//! The crate is organised bottom-up:
//!
//! * [`quadrature`] and [`geometry`]: rules, domains, dyadic ladders, polar grids.
//! * [`field`] and [`exponents`]: scalar test functions and exponent/order fields.
//! * [`norms`]: Luxemburg, complementary Morrey, weighted and weak norms.
//! * [`conditions`]: Dini, Zygmund and embedding conditions on weight functions.
//! * [`operators`]: maximal, fractional maximal, Riesz potential, singular integrals.
//! * [`harness`]: experiment configs, test families, CSV reports.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments, clippy::needless_range_loop)]

pub mod conditions;
pub mod error;
pub mod exec;
pub mod exponents;
pub mod field;
pub mod geometry;
pub mod harness;
pub mod norms;
pub mod operators;
pub mod profile;
pub mod quadrature;
pub mod trend;

pub use error::{Error, Result};
pub use exec::Exec;
