//! Cost-sensitive support vector machines for imbalanced binary data, trained
//! by a bilevel search: SHADE differential evolution over `(C+, C-, gamma)` on
//! the upper level, SMO on the lower level, coupled through a leave-one-out
//! balanced-error-rate estimate.

pub mod bilevel;
pub mod data;
pub mod error;
pub mod experiment;
pub mod kernel;
pub mod metrics;
pub mod profile;
pub mod sampling;
pub mod shade;
pub mod smo;

pub use error::{Error, Result};
