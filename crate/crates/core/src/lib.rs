//! Deterministic ray-launching radio propagation for urban campus scenes.

pub mod accel;
pub mod analysis;
pub mod antenna;
pub mod channel;
pub mod em;
pub mod error;
pub mod geom;
pub mod io;
pub mod sim;
pub mod tracer;

pub use error::{Error, Result};
