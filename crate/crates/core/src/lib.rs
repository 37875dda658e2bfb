//! Uplink simulation and analysis for cell-free massive MIMO assisted by an
//! active reconfigurable intelligent surface.
//!
//! The crate covers the whole chain: network drops and spatial correlation
//! ([`scenario`]), the active RIS model ([`ris`]), channel sampling and
//! analytic moments ([`channel`]), LMMSE estimation ([`estimation`]),
//! closed-form SINR / SE / EE ([`perf`]), a Monte Carlo oracle that checks
//! every closed form ([`oracle`]), and a soft actor-critic phase optimizer
//! ([`sac`]). [`cli`] wires these into the `validate`, `sweep` and `train`
//! commands.

pub mod channel;
pub mod cli;
pub mod estimation;
pub mod oracle;
pub mod perf;
pub mod ris;
pub mod rng;
pub mod sac;
pub mod scenario;

mod error;

pub use error::{Error, Result};
