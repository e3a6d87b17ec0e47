//! Core engine for ghost-keystroke password entry.
//!
//! The crate is split by concern:
//!
//! * [`layout`] keyboard geometry and cursor-travel overhead,
//! * [`markov`] order-k character model used for ghost selection and scoring,
//! * [`meter`] randomness meter driving the adaptive injection loop,
//! * [`generator`] the adaptive ghost injection engine (batch and interactive),
//! * [`bloom`] and [`detector`] server-side honeyword detection,
//! * [`oracle`] and [`attack`] the desk-scale adversary and evaluation harness.

pub mod alphabet;
pub mod attack;
pub mod bloom;
mod codec;
pub mod corpus;
pub mod detector;
pub mod generator;
pub mod layout;
pub mod markov;
pub mod meter;
pub mod oracle;
pub mod presets;
pub mod rng;

pub use codec::CodecError;
pub use generator::{GeneratorConfig, GhostResult};
pub use layout::KeyboardLayout;
pub use markov::MarkovModel;
pub use meter::MeterCalibration;
