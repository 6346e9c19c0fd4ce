//! MInD: multiple instance learning with bag dissimilarities.
//!
//! Bags of instances are compared with point-set, distribution and
//! transport dissimilarities, embedded into a dissimilarity space spanned
//! by prototype bags, and classified there with linear models. Companion
//! modules provide matrix diagnostics (how non-Euclidean or non-metric a
//! measure is), evaluation harnesses and seeded synthetic problems.

pub mod altreps;
pub mod analysis;
pub mod classifiers;
pub mod data;
pub mod datagen;
pub mod distribution;
pub mod error;
pub mod evaluation;
pub mod io;
pub mod pointset;
pub mod space;

pub use error::{MindError, Result};
