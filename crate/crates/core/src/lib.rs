//! Adaptive quadtree phase-field solver for quasi-static brittle fracture
//! in orthotropic and functionally graded plates.
//!
//! The plate is discretized on a 2:1-balanced quadtree; hanging-node
//! elements become polygons with mean-value coordinates. Cracking is driven
//! by a hybrid phase-field formulation with an anisotropic structural
//! tensor, solved by a staggered scheme. A moving-least-squares strain
//! recovery with crack diffraction supplies the per-element error that
//! steers the refinement.

pub mod assembly;
pub mod config;
pub mod driver;
pub mod elements;
pub mod error;
pub mod geometry;
pub mod material;
pub mod mesh;
pub mod par;
pub mod phasefield;
pub mod recovery;
pub mod report;
pub mod solver;
pub mod sparse;
pub mod state;
pub mod transfer;
pub mod vtk;

pub use config::SimulationConfig;
pub use error::{Error, Result};
pub use solver::Simulation;
