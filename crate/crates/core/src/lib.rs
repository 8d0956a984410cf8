//! Monte Carlo simulation and small-maturity asymptotics for options written
//! on ranked equity indexes.
//!
//! A ranked index aggregates the top `n_top` order statistics of a basket of
//! stock prices, `I_t = sum_j w_j S^(j)_t`. Index options are struck on the
//! index future `F_{0,T} = E[I_T]`. This crate simulates the basket under
//! geometric Brownian, fractional Stein-Stein and fractional Bergomi
//! dynamics, prices index calls by Monte Carlo, inverts Black-Scholes for
//! implied volatility, estimates the at-the-money skew per maturity, and
//! compares the resulting term structure against closed-form small-maturity
//! expansions (power-law blow-up at rate `T^-1/2` or `T^{H-1/2}`, and the
//! quasi-blow-up regime where nearby but distinct initial prices mimic a
//! power law at moderate maturities while staying bounded as `T -> 0`).
//!
//! Module map:
//! - [`rng`], [`grid`], [`drivers`]: reproducible Gaussian streams and joint
//!   sampling of Brownian motion with its Riemann-Liouville fractional
//!   (Volterra) companion, by exact Cholesky factorization or the hybrid
//!   scheme.
//! - [`models`]: model specifications and Euler simulation of log-prices.
//! - [`index`]: ranking, index construction, Monte Carlo futures pricing.
//! - [`pricing`]: Black-Scholes machinery, implied-vol inversion, two
//!   independent ATM-skew estimators.
//! - [`asymptotics`]: expansion coefficients, truncated Gaussian moments,
//!   the two-asset density expansion, predicted blow-up rates.
//! - [`term`]: maturity sweeps, power-law fits, quasi-blow-up classification.

pub mod asymptotics;
pub mod drivers;
pub mod error;
pub mod grid;
pub mod index;
pub mod math;
pub mod models;
mod parallel;
pub mod pricing;
pub mod rng;
pub mod term;

pub use error::{Error, Result};
