//! Numerical laboratory for blow-up dynamics of the semilinear
//! Moore-Gibson-Thompson equation in the conservative case,
//!
//! ```text
//! beta u_ttt + u_tt - Lap u - beta Lap u_t = |u_t|^p
//! ```
//!
//! on radially symmetric data of amplitude epsilon. The crate bundles
//!
//! * a radial method-of-lines solver for the factorized first-order system
//!   with blow-up detection ([`mgt_system`]),
//! * the eigenfunction machinery Phi, Psi and the growth constant C1
//!   ([`special_functions`]),
//! * the blow-up functional F1 with its companion identities
//!   ([`functionals`]),
//! * the full iteration/constant chain producing lifespan upper bounds in
//!   the subcritical and critical (Glassey) regimes ([`bound_engine`]),
//! * epsilon-sweep orchestration with scaling-law fits and bound
//!   consistency checks ([`experiments`]).
//!
//! Every capability has a runnable example under `examples/`; the thin
//! `mgtlab` binary exposes the same operations as subcommands.

pub mod bound_engine;
pub mod config;
mod error;
pub mod experiments;
pub mod functionals;
pub mod mgt_system;
pub mod quadrature;
pub mod special_functions;

pub use error::{MgtError, Result};
