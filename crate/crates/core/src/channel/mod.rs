//! Propagation channels in the PRACH sequence domain.
//!
//! A [`ChannelProfile`] is a tapped delay line. Profiles live in small TOML
//! files (see `profiles/` in this crate) with the layout
//!
//! ```toml
//! name = "EPA"
//! doppler_hz = 5.0
//!
//! [[tap]]
//! delay_us = 0.0
//! power_db = 0.0
//! fading = "rayleigh"      # "none" | "rayleigh" | "rician"
//! # k_db = 13.3            # required for "rician", rejected otherwise
//! ```
//!
//! Taps must be listed in strictly increasing delay order. Powers are relative
//! and are normalized to unit total power when the profile is loaded.

mod profile;
mod sim;

pub use profile::{ChannelProfile, Fading, ProfileLibrary, Tap, BUILTIN_PROFILES};
pub use sim::{
    noise_variance, realize, simulate_window, snr_calibration_check, transmit, ChannelRealization, ReceivedWindow,
    TxScenario,
};
