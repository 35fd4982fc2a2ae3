//! Coordinated view planning for teams of camera drones filming moving actors.
//!
//! The crate is layered bottom-up: [`world`] holds the heightmap, motion graph
//! and actor tracks; [`camera`] scores actor faces from a camera pose;
//! [`coverage`] keeps the pixel ledger and the concave coverage objective;
//! [`solvers`] plans one robot against a frozen ledger; [`coordination`]
//! resolves inter-robot conflicts; [`harness`] generates scenarios and runs
//! experiments.

pub mod camera;
pub mod coordination;
pub mod coverage;
pub mod error;
pub mod harness;
pub mod solvers;
pub mod world;

pub use error::{Error, Result};
