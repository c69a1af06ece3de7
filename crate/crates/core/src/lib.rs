//! Numerical toolkit for random periodic dynamics: measure-preserving noise
//! systems, cocycles and random periodic paths, periodic measures of finite
//! Markov semigroups, PS-ergodicity decisions, and the upper expectations
//! generated by measure families.
//!
//! Everything is built for verification at desk scale: finite-state objects
//! are handled exactly, continuous ones through seeded Monte Carlo with
//! counter-based random streams so that results are reproducible and
//! independent of how work is split across threads.

// index-based loops are the house style for the small dense matrix code
#![allow(clippy::needless_range_loop)]

pub mod error;
pub mod linalg;
pub mod markov;
pub mod measures;
pub mod noise;
pub mod rds;
pub mod rng;
pub mod stats;
pub mod sublinear;
pub mod wiener;

pub use error::{ErgoError, Result};
pub use rng::RandomStream;
