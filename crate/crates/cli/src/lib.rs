//! Config-driven experiment runner for ranked-index ATM skew term
//! structures: presets for the reference figure configurations, maturity
//! sweeps, power-law fits, quasi-blow-up classification, and versioned
//! file outputs.

pub mod config;
pub mod output;
pub mod presets;
pub mod runner;
