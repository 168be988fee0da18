//! Explicit competitor configurations.

mod ding_wirth;
mod two_scale;

pub use ding_wirth::{ding_wirth, DwLedger, DwPeak, DwScale};
pub use two_scale::{bin_of, two_scale_competitor, BlockField, CoarseSite, TwoScaleLedger};
