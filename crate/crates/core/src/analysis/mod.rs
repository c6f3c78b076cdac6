//! Independent checks and estimates on constructed data.

mod dimension;
mod discrepancy;
pub mod synthetic;
mod verify;

use thiserror::Error;

use crate::precision::KernelError;

pub use dimension::{
    box_count, box_count_tree, closed_form_bound, falconer_bound, falconer_from_levels, limit_bound, BoxCountEstimate, DimensionLevel, DimensionReport,
    DimensionRow,
};
pub use discrepancy::{fractional_points, star_discrepancy};
pub use verify::{inclusion_terms, verify, verify_terms, RowStatus, Term, VerificationReport, VerifyRow, VerifySummary};

#[derive(Clone, Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("comparison at index {index} stayed undecided up to {bits} bits; the enclosure is too wide")]
    PrecisionExhausted { index: usize, bits: u32 },
    #[error("not enough data: {0}")]
    InsufficientDepth(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}
