//! Q-ball dynamics on potential obstructions in 1 and 2 spatial dimensions.
//!
//! A complex scalar field with the sextic potential U = 2|Φ|² − 2|Φ|⁴ + |Φ|⁶
//! supports non-topological solitons (q-balls) for internal frequencies
//! √2 < |ω| < 2. This crate provides:
//!
//! - exact 1d profiles, boosts, and closed-form observables ([`profile1d`]);
//! - numerically shot 2d radial profiles ([`profile2d`]);
//! - real-time RK4 evolution with obstructions and absorbing boundaries
//!   ([`evolve`]);
//! - densities, trajectories, and scattering-outcome classification
//!   ([`diagnostics`]);
//! - scenario drivers: rest releases, barrier/hole scattering,
//!   critical-velocity searches, deflection sweeps ([`experiments`]);
//! - a binary checkpoint format for restart and post-mortem dumps
//!   ([`checkpoint`]).
//!
//! Everything is deterministic: identical inputs produce bit-identical
//! outputs, with no RNG anywhere.

pub mod checkpoint;
pub mod diagnostics;
pub mod error;
pub mod evolve;
pub mod experiments;
pub mod grid;
pub mod manifest;
pub mod model;
pub mod profile1d;
pub mod profile2d;
pub mod quadrature;

pub use error::{Error, Result};
