//! Numerical relaxation of nearly circular curves under the Mullins-Sekerka
//! flow, with the functional inequalities that control it.

pub mod analysis;
pub mod config;
pub mod elliptic;
pub mod error;
pub mod evolution;
pub mod geometry;
pub mod output;
pub mod potential;
pub mod sobolev;
pub mod spectral;

pub use error::{Error, Result};
pub use geometry::{build_cache, Domain, GeometryCache, RadialCurve};
