//! Frequency-selective mmWave channels seen through hybrid training.
//!
//! The receiver is the access point and the transmitter the user device.
//! Directions live in the room frame; each array's [`Mount`] says how its
//! local frame sits in the room.

mod array;
mod dictionary;
mod extract;
pub mod io;
mod measure;
mod response;
mod training;

pub use array::{partial_steering, steering, ArrayGeometry, Mount};
pub use dictionary::{angular_grid, build_dictionaries, delay_grid, Grids};
pub use extract::{complete_direction, extract_paths, reconstruct_taps};
pub use measure::{
    build_measurement_tensor, synthesize_measurements, whiten, MeasurementOperator, MeasurementSet, Whitened,
};
pub use response::{channel_taps, sinc, time_response, PathParams};
pub use training::{
    build_pilot, build_training_dft, dbm_to_watts, dft_codebook, full_scale_arrays, full_scale_training, Frame,
    TrainingParams, TrainingSet,
};
