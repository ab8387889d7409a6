//! Fixtures shared by the benchmarks.

use rigidmd::model::{init_lattice, MoleculeSpecies, Site, SystemComposition, SystemState};
use rigidmd::Vec3;

/// Single-site LJ fluid of `n` molecules on an FCC lattice.
pub fn lj_fluid(n: usize, density: f64) -> (SystemComposition, SystemState) {
    let species = MoleculeSpecies::build("LJ", vec![Site::lj(Vec3::zeros(), 1.0, 1.0, 1.0)]).unwrap();
    let composition = SystemComposition::with_density(vec![species], vec![n], density, 1.5).unwrap();
    let state = init_lattice(&composition, 7).unwrap();
    (composition, state)
}

/// Neutral dipolar dumbbells (two LJ sites, two partial charges).
pub fn dumbbells(n: usize, density: f64) -> (SystemComposition, SystemState) {
    let sites = vec![
        Site::lj(Vec3::new(0.0, 0.0, 0.5), 1.0, 1.0, 1.0),
        Site::lj(Vec3::new(0.0, 0.0, -0.5), 1.0, 1.0, 1.0),
        Site::charge(Vec3::new(0.0, 0.0, 0.5), 0.3, 0.0),
        Site::charge(Vec3::new(0.0, 0.0, -0.5), -0.3, 0.0),
    ];
    let species = MoleculeSpecies::build("DB", sites).unwrap();
    let composition = SystemComposition::with_density(vec![species], vec![n], density, 3.0).unwrap();
    let state = init_lattice(&composition, 7).unwrap();
    (composition, state)
}
