//! Crosstalk-minimizing affine signaling: channel synthesis, link simulation,
//! eye and jitter analysis, and encode/decode matrix search.

pub mod analysis;
pub mod channel;
pub mod error;
pub mod linksim;
pub mod matrix;
pub mod rational;
pub mod search;
pub mod signaling;

pub use error::{Error, Result};
pub use matrix::IntMatrix;
pub use signaling::{BaselineKind, DataWord, SignalingScheme};
