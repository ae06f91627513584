//! Construction of open-set class splits graded by semantic similarity to
//! the known classes.
//!
//! Three schemes are supported:
//! - attribute similarity: cosine similarity of per-class attribute rows,
//!   with a seeded random search over known-class subsets;
//! - name hierarchy: shared levels of a `make/model/type/year` or
//!   `manufacturer/family/variant` class-name hierarchy;
//! - semantic tree: summed path distance to the known classes.

mod attribute;
mod hierarchy;
mod tree;

use thiserror::Error;

pub use attribute::{
    bin_open_classes, class_similarity_matrix, rank_open_classes, sample_known_subset,
    search_attribute_splits, split_objective, Bins, RankedClass, SimilarityMatrix,
};
pub use hierarchy::hierarchy_splits;
pub use tree::{total_distances, tree_distance, tree_splits, TreeDistanceTable};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SplitError {
    #[error("known-class set is empty")]
    EmptyKnown,
    #[error("known classes cover every class; no open-set classes remain")]
    NoOpenClasses,
    #[error("unknown class {0:?}")]
    UnknownClass(String),
    #[error("duplicate class {0:?} in the known-class list")]
    DuplicateKnown(String),
    #[error("unknown tree node {0:?}")]
    UnknownNode(String),
    #[error("invalid split size: {0}")]
    InvalidSize(String),
    #[error("need {needed} open-set classes but only {available} exist")]
    InsufficientOpenClasses { needed: usize, available: usize },
}

/// Resolves class names to indices, rejecting unknown names and duplicates.
fn resolve_known<'a, F>(known: &'a [String], lookup: F) -> Result<Vec<usize>, SplitError>
where
    F: Fn(&'a str) -> Option<usize>,
{
    if known.is_empty() {
        return Err(SplitError::EmptyKnown);
    }
    let mut out = Vec::with_capacity(known.len());
    let mut seen = std::collections::HashSet::new();
    for name in known {
        let idx = lookup(name).ok_or_else(|| SplitError::UnknownClass(name.clone()))?;
        if !seen.insert(idx) {
            return Err(SplitError::DuplicateKnown(name.clone()));
        }
        out.push(idx);
    }
    Ok(out)
}
