//! Discrete period matrices of compact Riemann surfaces given as branched
//! coverings of the sphere, computed on adapted cotan-weighted triangulations.

pub mod config;
pub mod covering;
pub mod error;
pub mod geom;
pub mod harmonic;
pub mod harness;
pub mod homology;
pub mod mesh;
pub mod periods;
pub mod quad;
pub mod sparse;
pub mod weights;

pub use config::Config;
pub use error::{Error, Result};
