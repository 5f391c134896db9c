//! Zak-OTFS delay-Doppler signal processing: grid algebra, pulse shaping
//! filters, doubly-spread channels, modulation and detection, channel
//! prediction, multicarrier OTFS comparison and radar ambiguity analysis.

pub mod channel;
pub mod dd_core;
pub mod error;
pub mod filters;
pub mod harness;
pub mod linalg;
pub mod mcotfs;
pub mod modem;
pub mod numeric;
pub mod predict;
pub mod radar;

pub use error::{Error, Result};
pub use numeric::C64;
