//! Simplicial complexes, nerves of coverings, and simplicial group actions.

mod gcomplex;
mod nerve;
mod simplicial;

use thiserror::Error;

pub use gcomplex::{barycentric_subdivision, quotient_complex, regularize, GComplex, Quotient, Regularized, RegularityReport, Subdivision};
pub use nerve::{equivariant_nerve, nerve, partition_of_unity, restrict_nerve, star_pullback, PartitionOfUnity};
pub use simplicial::{facets, sort_sign, Simplex, SimplicialComplex};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ComplexError {
    #[error("vertex {0} out of range")]
    VertexOutOfRange(usize),
    #[error("invalid simplicial action: {0}")]
    BadAction(String),
    #[error("complex is not regular: {0}")]
    NotRegular(String),
}
