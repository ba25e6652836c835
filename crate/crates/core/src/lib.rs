//! Group-robust optimization toolkit.
//!
//! Trains classifiers under three objectives — empirical risk minimization
//! (ERM), group distributionally robust optimization with hard group labels
//! (G-DRO), and its probabilistic-group generalization (PG-DRO) where each
//! sample carries a distribution over groups instead of a single label.
//! Ships with two pseudo-labeling procedures for producing those group
//! probabilities (a supervised environment classifier and a zero-shot
//! embedding-similarity labeler), a synthetic spurious-correlation benchmark,
//! and the training/evaluation machinery around them.

pub mod data;
pub mod error;
pub mod grouping;
pub mod model;
pub mod numerics;
pub mod objectives;
pub mod seeds;
pub mod training;

pub use error::{Error, Result};
