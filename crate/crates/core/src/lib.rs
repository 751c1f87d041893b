//! Quantum-trajectory simulation of a two-level atom (or `N` atoms) inside a
//! weakly driven degenerate optical parametric oscillator.
//!
//! * [`fockspace`]: truncated atom–cavity basis, operators and states.
//! * [`dynamics`]: conditioned evolution, jump sampling, ensembles and the
//!   density-matrix oracle.
//! * [`weakfield`]: closed-form weak-drive results.
//! * [`composite`]: beamsplitter sharing, entanglement measures, N-atom scaling.
//! * [`storage`]: single-photon storage by ramping the coupling.
//!
//! Everything numerical is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar to `f64`.

pub mod composite;
pub mod dynamics;
pub mod error;
pub mod fockspace;
mod linalg;
pub mod scalar;
pub mod storage;
pub mod weakfield;

pub use error::{Error, Result};
pub use fockspace::{Channel, Level, Operator};
pub use scalar::{Cplx, Real};

pub type C64 = Cplx<f64>;
pub type Params = fockspace::ModelParams<f64>;
pub type State = fockspace::PureState<f64>;
pub type Amplitudes = weakfield::WeakFieldAmplitudes<f64>;
pub type Conditional = weakfield::ConditionalState<f64>;
pub type Shared = composite::SharedState<f64>;
pub type Schedule = storage::RampSchedule<f64>;
pub type Report = storage::StorageReport<f64>;
pub type Record = dynamics::TrajectoryRecord<f64>;
pub type Settings = dynamics::TrajectorySettings<f64>;

pub type ParamsF32 = fockspace::ModelParams<f32>;
pub type StateF32 = fockspace::PureState<f32>;
pub type ConditionalF32 = weakfield::ConditionalState<f32>;

/// Serializes a complex number as `[re, im]`.
pub(crate) fn serialize_complex<T: Real, S: serde::Serializer>(z: &Cplx<T>, s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeTuple;
    let mut t = s.serialize_tuple(2)?;
    t.serialize_element(&z.re)?;
    t.serialize_element(&z.im)?;
    t.end()
}
