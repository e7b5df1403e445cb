//! Forward and inverse Carson's-equation models for low-voltage overhead
//! lines and cables.
//!
//! The forward side turns a conductor, material and geometry into series
//! impedance and shunt admittance matrices and their diagonal sequence
//! components. The inverse side enumerates candidate configurations and
//! solves small nonlinear programs to recover radius, temperature and
//! geometry from given sequence components.
//!
//! ```
//! use carson_core::catalog::Catalog;
//! use carson_core::forward::{forward_pipeline, ForwardOptions, LineSpec};
//!
//! let cat = Catalog::bundled();
//! let line = LineSpec::catalog_standard(&cat, "tri-21.67", "Mars", 75.0).unwrap();
//! let seq = forward_pipeline(&cat.constants, &line, &ForwardOptions::series_only()).unwrap();
//! assert!((seq.r11 - 0.4472).abs() < 1e-3);
//! ```

pub mod catalog;
pub mod conductor;
pub mod error;
pub mod forward;
pub mod geometry;
pub mod inverse;

pub use error::{Error, Result};
