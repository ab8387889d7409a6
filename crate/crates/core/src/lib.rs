//! Rigid-body molecular dynamics with Massieu-derivative sampling, Green-Kubo
//! transport coefficients, radial distribution functions and Ewald
//! summation. All quantities are in reduced Lennard-Jones units with `k_B = 1`.

pub mod codec;
pub mod config;
pub mod engine;
pub mod error;
pub mod greenkubo;
pub mod massieu;
pub mod model;
pub mod output;
pub mod parallel;
pub mod potentials;
pub mod stats;
pub mod structure;

pub type Vec3 = nalgebra::Vector3<f64>;
pub type Quat = nalgebra::UnitQuaternion<f64>;

pub use error::{Error, Result};

pub use config::{parse_config, ResolvedConfig, SimulationConfig};
pub use engine::{run, ResultsBundle, Simulation, SimulationPlan};
pub use model::{MoleculeSpecies, Site, SiteKind, SystemComposition, SystemState};
pub use output::emit_results;
pub use potentials::Electrostatics;
