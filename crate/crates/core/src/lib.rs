//! Non-adiabatic transitions through pairs of exceptional points.
//!
//! The crate covers the PT-symmetric two-level model `[[-v, iγ], [iγ, v]]`
//! driven linearly in time, and its realisation as the Bloch Hamiltonian of
//! a tight-binding chain with alternating gain and loss, where a static force
//! sweeps the quasimomentum through the band exceptional points.

pub mod bloch;
pub mod error;
pub mod lattice;
pub mod ode;
pub mod propagator;
pub mod two_level;

pub use error::{Error, Result};
pub use ode::{IntegratorConfig, Method};
