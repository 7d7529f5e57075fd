//! Magnetic Hamiltonian flows on the round two-sphere.
//!
//! The crate covers the twisted cotangent bundle `(T*S^2, d lambda - pi* sigma)`,
//! the symplectomorphisms `Psi_s` that trade a constant magnetic field for a
//! shift of the fibre radius, the integrable Katok Hamiltonians
//! `H_{s,alpha} = R_s + alpha Omega_s` together with the Riemannian metrics and
//! magnetic potentials that realise their levels as magnetic flows, the
//! irrational ellipsoid reference, and a periodic-orbit census.
//!
//! The crate is `no_std` with `alloc`; IO lives in the companion `katok` crate.

#![cfg_attr(not(test), no_std)]
// `!(x > 0.0)` guards are deliberate: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop, clippy::large_enum_variant, clippy::result_large_err)]

extern crate alloc;

pub mod census;
pub mod dynamics;
pub mod ellipsoid;
mod error;
pub mod katok;
pub mod psi;
pub mod sampling;
pub mod sphere;

pub use error::Error;

/// Ambient vectors in `R^3`.
pub type Vec3 = nalgebra::Vector3<f64>;

pub use dynamics::{
    CotangentState, FlowResult, Hamiltonian, HamiltonianKind, IntegratorOptions, MagneticForm,
    Metric, PhaseTangent,
};
pub use katok::{KatokParams, SequenceSpec, WParams};
pub use sphere::{AxisFrame, Chart, Rotation, SpherePoint, TangentVector};
