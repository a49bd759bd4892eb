//! Identification and estimation of the average causal effect at a
//! treatment threshold from regression-discontinuity data.

pub mod balance;
pub mod ci;
pub mod estimation;
pub mod model;
pub mod simulator;

pub use model::{
    derive_z, partition_window, AceEstimate, Design, ModelError, ObservationRecord, RegimeTag,
    ThresholdSpec, Window,
};
