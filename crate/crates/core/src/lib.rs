//! Contour machinery, energy bounds and Peierls estimates for ferromagnetic
//! long-range q-state spin models on finite windows of ℤᵈ.
//!
//! Colors are stored as `u8` in `0..q`; color `0` is the reference color used
//! as the boundary condition in the contour and Peierls constructions.

pub mod bounds;
pub mod config;
pub mod contour;
pub mod enumeration;
pub mod error;
pub mod exec;
pub mod interactions;
pub mod lattice;
pub mod numeric;
pub mod randomfield;
pub mod sampler;
pub mod spin_model;

pub use error::*;
pub use exec::Exec;
