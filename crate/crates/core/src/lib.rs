//! Link-level simulator for asymmetric physical-layer network coding over a
//! two-way relay channel, built on multilevel lattice codes over the
//! Gaussian integers with polar component codes.

pub mod channel;
pub mod error;
pub mod gint;
pub mod lattice;
pub mod polar;
pub mod relay;
pub mod schemes;
pub mod selftest;
pub mod sim;

pub use error::{Error, Result};
