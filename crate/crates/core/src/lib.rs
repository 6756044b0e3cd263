//! Optical recognition of embossed Braille pages.
//!
//! The pipeline runs in three phases:
//!
//! 1. [`preprocess`]: bi-histogram equalization, median filtering, Otsu
//!    binarization over the lower grey range, morphological closing.
//! 2. [`dots`] and [`geometry`]: connected components are qualified as dots,
//!    margin lines and peer-distance statistics recover the page's cell grid
//!    (origin, rotation, cell size, gaps and counts).
//! 3. [`translate`]: the grid is projected onto the binary image, each cell
//!    yields a six-dot code, and a mapping table turns codes into text.
//!
//! [`synth`] renders ground-truth pages and [`eval`] scores results against
//! them. [`pipeline`] wires the phases together for single pages and batches.

pub mod dots;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod image;
pub mod overlay;
pub mod pipeline;
pub mod preprocess;
pub mod synth;
pub mod translate;

pub use error::{Error, Result};
