//! Beamspace dimensionality reduction for massive MU-MIMO uplink reception.

pub mod array;
pub mod channel;
pub mod error;
pub mod linalg;
pub mod montecarlo;
pub mod receiver;
pub mod scheduling;
pub mod stochastic;
pub mod wideband;

pub use error::{Error, Result};
