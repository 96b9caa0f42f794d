#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod field;
pub mod jones;
pub mod kdtree;
pub mod measure;
pub mod numeric;
pub mod reifenberg;
pub mod stratify;
pub mod symmetry;
pub mod synth;

pub use error::{Error, Result};
