pub mod bvp;
pub mod cli;
pub mod config;
pub mod dtn;
pub mod error;
pub mod geometry;
pub mod indicator;
pub mod io;
pub mod oracle;
pub mod potential;
pub mod runge;
pub mod verify;

pub use error::{Error, Result};
pub use geometry::Vec3;
