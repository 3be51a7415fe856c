//! Sparse recovery with multidimensional dictionaries.
//!
//! The crate is organized bottom-up:
//!
//! * [`tensor`]: dense complex tensors and the contractions the solver needs,
//! * [`momp`]: the multidimensional OMP solver and a classical OMP baseline,
//! * [`channel`]: mmWave channel synthesis, training, whitening and the
//!   five-dictionary measurement model,
//! * [`scenario`]: image-method ground truth for axis-aligned rooms,
//! * [`locate`]: path classification, clock-offset ranging and positioning,
//! * [`pipeline`]: the scenario-to-position chain used by the CLI and demo.

pub mod channel;
pub mod error;
pub mod locate;
pub mod momp;
pub mod pipeline;
pub mod scenario;
pub mod tensor;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
