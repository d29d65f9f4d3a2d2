// Negated float comparisons below are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod critical;
pub mod ec;
pub mod error;
pub mod geometry;
pub mod goi;
pub mod matern;
pub mod quad;
pub mod simulate;
pub mod special;
pub mod stats;

pub use error::{Error, Result};
pub use geometry::{Domain, LkCurvatures};
pub use matern::{GeometryTag, MaternParams, SpectralSummary};
