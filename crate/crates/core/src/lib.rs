//! Pyramid vision transformer siamese kinship verifier: a tape autodiff
//! engine, the PVT backbone, siamese fusion heads, ensemble metrics and the
//! file formats used by the `pvtkin` command-line tool.

pub mod checkpoint;
pub mod data;
pub mod error;
pub mod gradsuite;
pub mod metrics;
pub mod nn;
pub mod pipeline;
pub mod pvt;
pub mod siamese;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::{Tape, Tensor, Var};
