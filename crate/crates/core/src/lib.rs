//! Edit distance between functions on merge trees.
//!
//! Functions on merge trees are stored as dendrograms whose edges carry
//! nonnegative piecewise-affine maps ([`editable::PiecewiseMap`]). The
//! [`distance`] module computes the edit distance between two dendrograms
//! together with an edit plan that realizes it.

pub mod builders;
pub mod distance;
pub mod editable;
pub mod error;
pub mod experiments;
pub mod io;
pub mod pruning;
pub mod random;
pub mod tree;

pub use editable::PiecewiseMap;
pub use error::{Error, Result};
pub use tree::{Dendrogram, MergeTree, TreePoint, TreeStructure};
