//! Almost-iid quantum states: witnesses, entropies and certified bounds.
//!
//! Logarithms are base 2 throughout.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod almost_iid;
pub mod bounds;
pub mod classical;
pub mod entropies;
pub mod error;
pub mod linalg;
pub mod record;
pub mod rng;
pub mod squashed;
pub mod states;

pub use error::{Error, Result};
pub use linalg::{DensityOperator, Dims, Operator, PureState};
