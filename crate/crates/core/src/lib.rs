//! Real-multiplication noncommutative tori: exact quadratic-field arithmetic,
//! the smooth torus algebra, Heisenberg representations, holomorphic
//! bimodules, theta series and the homogeneous coordinate ring.

pub mod coord_ring;
pub mod error;
pub mod precision;
pub mod heis_module;
pub mod heis_rep;
pub mod qfield;
pub mod theta;
pub mod torus_alg;

pub use error::{Error, Result};
pub use precision::Precision;
