//! Smith theory at large scale on finite metric windows.
//!
//! Finite windows of proper metric spaces with finite isometric group
//! actions: approximate fixed sets and where they stabilize, coarsening
//! systems of coverings, equivariant nerves, homology over prime fields,
//! Smith special homology, and within-window limits of all of it.

pub mod action;
pub mod complexes;
pub mod coverings;
pub mod fixed_sets;
pub mod group;
pub mod homology;
pub mod limits;
pub mod metric;
pub mod models;
pub mod scenario;
pub mod smith;

use thiserror::Error;

/// Any failure of the pipeline, tagged with the stage it came from.
#[derive(Debug, Error)]
pub enum Error {
    #[error("metric: {0}")]
    Metric(#[from] metric::MetricError),
    #[error("group: {0}")]
    Group(#[from] group::GroupError),
    #[error("action: {0}")]
    Action(#[from] action::ActionError),
    #[error("model: {0}")]
    Model(#[from] models::ModelError),
    #[error("fixed sets: {0}")]
    FixedSet(#[from] fixed_sets::FixedSetError),
    #[error("coverings: {0}")]
    Covering(#[from] coverings::CoveringError),
    #[error("complexes: {0}")]
    Complex(#[from] complexes::ComplexError),
    #[error("homology: {0}")]
    Homology(#[from] homology::HomologyError),
    #[error("smith: {0}")]
    Smith(#[from] smith::SmithError),
    #[error("limits: {0}")]
    Limit(#[from] limits::LimitError),
    #[error("scenario: {0}")]
    Scenario(String),
}
