//! Simulation core for precoding-aided spatial modulation (PSM) and its
//! two-station macro-diversity extension (MD-PSM).
//!
//! The modules build on each other bottom-up: alphabets and receive sets,
//! Rayleigh channels with zero-forcing precoders, bit framing and the
//! transmit chain, ML detection, and Monte-Carlo BER estimation.

pub mod angle_optimizer;
pub mod channel;
pub mod constellation;
pub mod detector;
pub mod error;
pub mod harness;
pub mod link;

pub use constellation::{Constellation, ReceiveSet, RotatedConstellation, Scheme};
pub use error::{Error, Result};
pub use link::{Link, SystemConfig};
