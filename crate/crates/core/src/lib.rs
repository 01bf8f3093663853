//! Disjoint-subarray synthesis of monopulse sum and difference beams on a
//! shared phased array.

pub mod analysis;
pub mod array;
pub mod cli;
pub mod config;
pub mod constraints;
pub mod error;
pub mod io;
pub mod reselection;
pub mod solver;

pub use array::{Angle, ArrayGeometry, Axis, CouplingModel, Interval, C64};
pub use error::{Error, Result};
