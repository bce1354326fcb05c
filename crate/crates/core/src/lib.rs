//! Simulation and parameter estimation for a microwave cavity parametrically
//! coupled to a mechanical oscillator, in the driven linearized regime.
//!
//! Angular frequencies (rad/s) are used throughout the library; conversion to
//! and from ordinary frequency happens only in [`formats`].

// `!(x > 0.0)` style checks are meant to reject NaN too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constants;
pub mod device;
pub mod features;
pub mod fit;
pub mod formats;
pub mod harness;
pub mod oracle;
pub mod response;
pub mod spectrum;

pub use device::{DeviceError, DeviceParams, DeviceSpec, FiguresOfMerit};
pub use response::{Backaction, Coupling, DriveConfig, NormalModes};
pub use spectrum::{ComplexSpectrum, GridSpec};
