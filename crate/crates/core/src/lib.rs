//! Pattern-reconfigurable MIMO: channel simulation and rate-maximizing
//! pattern design.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` deliberately rejects NaN too.

pub mod channel;
pub mod eoga;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod sof;

pub use error::{Error, Result};
