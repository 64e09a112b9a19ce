//! Cooperative USV–AUV underwater data collection.
//!
//! The crate is organised bottom-up:
//!
//! - [`sea`]: tidal shallow-water solver and analytic vortex turbulence.
//! - [`usbl`]: ultra-short-baseline phase measurements and position inversion.
//! - [`fim`]: Fisher information of the USBL geometry and a differential-evolution
//!   waypoint planner that maximises its determinant.
//! - [`mission`]: the multi-AUV data-collection environment (state, action, reward, metrics).
//! - [`rl`]: a self-contained TD3 learner with hand-written backpropagation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fim;
pub mod mission;
pub mod rl;
pub mod rng;
pub mod sea;
pub mod stats;
pub mod usbl;

pub use error::{Error, Result};
