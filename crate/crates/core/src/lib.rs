//! Travelling waves of a singularly perturbed Keller-Segel chemotaxis model.
//!
//! * [`model`]: parameters and the slow, fast and layer vector fields.
//! * [`exact`]: closed-form waves for `D_u = 0` and their shock limit.
//! * [`singular`]: critical manifold, reduced flow, fast fibres and the
//!   singular orbit.
//! * [`perturbed`]: slow manifolds for `eps > 0`, heteroclinic shooting and
//!   convergence studies.
//! * [`pde`]: method-of-lines simulation of the full PDE.

// `!(x > 0.0)` guards are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exact;
pub mod model;
pub mod ode;
pub mod pde;
pub mod perturbed;
pub mod profile;
pub mod singular;

pub use error::{Error, Result};
pub use model::{ModelParams, PhasePoint};
pub use profile::{Construction, ProfileSample, WaveProfile};
