#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rigidmd::engine::{thermostat, Dynamics};
use rigidmd::model::{init_lattice, MoleculeSpecies, Site, SystemComposition, SystemState};
use rigidmd::{Electrostatics, Quat, Vec3};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn lj_atom(name: &str, sigma: f64, epsilon: f64, mass: f64) -> MoleculeSpecies {
    MoleculeSpecies::build(name, vec![Site::lj(Vec3::zeros(), sigma, epsilon, mass)]).unwrap()
}

/// Two LJ sites at `+-half` on x, optionally carrying charges `+-q`.
pub fn dumbbell(name: &str, half: f64, q: f64) -> MoleculeSpecies {
    let a = Vec3::new(half, 0.0, 0.0);
    let mut sites = vec![Site::lj(a, 1.0, 1.0, 1.0), Site::lj(-a, 1.0, 1.0, 1.0)];
    if q != 0.0 {
        sites.push(Site::charge(a, q, 0.0));
        sites.push(Site::charge(-a, -q, 0.0));
    }
    MoleculeSpecies::build(name, sites).unwrap()
}

pub fn bent_triatomic(name: &str) -> MoleculeSpecies {
    MoleculeSpecies::build(
        name,
        vec![
            Site::lj(Vec3::new(0.0, 0.0, 0.0), 1.1, 0.9, 2.0),
            Site::lj(Vec3::new(0.8, 0.5, 0.0), 0.9, 1.2, 1.0),
            Site::lj(Vec3::new(-0.8, 0.5, 0.0), 0.9, 1.2, 1.0),
        ],
    )
    .unwrap()
}

/// Point charge with a coincident LJ core.
pub fn ion(name: &str, q: f64) -> MoleculeSpecies {
    MoleculeSpecies::build(
        name,
        vec![Site::lj(Vec3::zeros(), 1.0, 1.0, 1.0), Site::charge(Vec3::zeros(), q, 0.0)],
    )
    .unwrap()
}

pub fn bare_charge(name: &str, q: f64) -> MoleculeSpecies {
    MoleculeSpecies::build(name, vec![Site::charge(Vec3::zeros(), q, 1.0)]).unwrap()
}

pub fn random_orientation(rng: &mut ChaCha8Rng) -> Quat {
    let mut g = || rng.sample::<f64, _>(StandardNormal);
    Quat::from_quaternion(nalgebra::Quaternion::new(g(), g(), g(), g()))
}

fn min_image(mut d: Vec3, l: f64) -> Vec3 {
    d.iter_mut().for_each(|c| *c -= l * (*c / l).round());
    d
}

/// Random non-overlapping placement: every intermolecular site distance is
/// at least `min_distance`.
pub fn random_state(comp: &SystemComposition, min_distance: f64, rng: &mut ChaCha8Rng) -> SystemState {
    let l = comp.box_length;
    let species_of = comp.species_index();
    let n = species_of.len();
    let mut state = SystemState::new(l, n);
    let mut placed: Vec<Vec<Vec3>> = Vec::with_capacity(n);
    for (m, &s) in species_of.iter().enumerate() {
        loop {
            let r = Vec3::new(rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()) * l;
            let q = random_orientation(rng);
            let sites: Vec<Vec3> = comp.species[s].sites.iter().map(|x| r + q * x.position).collect();
            let clear = placed.iter().flatten().all(|p| {
                sites.iter().all(|x| min_image(x - p, l).norm() >= min_distance)
            });
            if clear {
                state.positions[m] = r;
                state.orientations[m] = q;
                placed.push(sites);
                break;
            }
        }
    }
    state
}

/// Lattice start followed by `steps` thermostatted steps.
pub fn equilibrated(
    comp: SystemComposition,
    cutoff: f64,
    dt: f64,
    steps: u64,
    seed: u64,
) -> (Dynamics, SystemState) {
    let t = comp.temperature;
    let dynamics = Dynamics::new(comp, cutoff, Electrostatics::Cutoff, 1).unwrap();
    let mut state = init_lattice(&dynamics.composition, seed).unwrap();
    dynamics.evaluate(&mut state).unwrap();
    for k in 0..steps {
        dynamics.step(&mut state, dt, k).unwrap();
        thermostat(&dynamics, &mut state, t).unwrap();
    }
    (dynamics, state)
}

/// Second virial coefficient of the full LJ potential by Simpson quadrature
/// of `-2 pi int (exp(-u/T) - 1) r^2 dr` on `[0, 40]`.
pub fn lj_b2(t: f64) -> f64 {
    let n = 400_000;
    let r_end = 40.0;
    let h = r_end / n as f64;
    let f = |r: f64| {
        if r == 0.0 {
            return 0.0;
        }
        let s6 = r.powi(-6);
        let u = 4.0 * (s6 * s6 - s6);
        ((-u / t).exp() - 1.0) * r * r
    };
    let mut s = f(0.0) + f(r_end);
    for k in 1..n {
        s += f(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    -2.0 * std::f64::consts::PI * s * h / 3.0
}
