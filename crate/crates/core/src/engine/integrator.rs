//! Rigid-body velocity Verlet: translational kick-drift-kick and a
//! symplectic free-rotor splitting for the orientations.
//!
//! Body-frame angular momentum `pi` receives half kicks from body-frame
//! torques. Free rotation is split into exact rotations about the principal
//! axes, `x(h/2) y(h/2) z(h) y(h/2) x(h/2)`; axes with zero moment are
//! skipped, which leaves point particles unrotated and linear molecules
//! spinning only about their two well-defined axes.

use nalgebra::{Rotation3, Unit};

use crate::error::{Error, Result};
use crate::model::{SystemComposition, SystemState};
use crate::potentials::{Electrostatics, ForceField};
use crate::{Quat, Vec3};

/// Force field plus the per-molecule mass data needed to move molecules.
#[derive(Clone, Debug)]
pub struct Dynamics {
    pub composition: SystemComposition,
    pub forcefield: ForceField,
    pub masses: Vec<f64>,
    pub inertia: Vec<Vec3>,
    pub workers: usize,
}

fn axis(k: usize) -> Unit<Vec3> {
    Unit::new_unchecked(Vec3::ith(k, 1.0))
}

/// Exact rotation about body axis `k` by the free-rotor flow for time `h`.
fn rotate_about(q: &mut Quat, pi: &mut Vec3, inertia: &Vec3, k: usize, h: f64) {
    let phi = h * pi[k] / inertia[k];
    let a = axis(k);
    *q *= Quat::from_axis_angle(&a, phi);
    *pi = Rotation3::from_axis_angle(&a, -phi) * *pi;
}

/// Symmetric splitting of the free-rotor flow over the active axes.
pub fn free_rotation(q: &mut Quat, pi: &mut Vec3, inertia: &Vec3, h: f64) {
    let active: Vec<usize> = (0..3).filter(|&k| inertia[k] > 0.0).collect();
    let Some((&last, rest)) = active.split_last() else {
        return;
    };
    for &k in rest {
        rotate_about(q, pi, inertia, k, 0.5 * h);
    }
    rotate_about(q, pi, inertia, last, h);
    for &k in rest.iter().rev() {
        rotate_about(q, pi, inertia, k, 0.5 * h);
    }
}

impl Dynamics {
    pub fn new(composition: SystemComposition, cutoff: f64, electrostatics: Electrostatics, workers: usize) -> Result<Self> {
        let forcefield = ForceField::new(&composition, cutoff, electrostatics)?;
        let (masses, inertia) = crate::model::molecule_masses(&composition);
        Ok(Dynamics {
            composition,
            forcefield,
            masses,
            inertia,
            workers: workers.max(1),
        })
    }

    pub fn evaluate(&self, state: &mut SystemState) -> Result<()> {
        self.forcefield.evaluate(&self.composition, state, self.workers)
    }

    /// Translational and rotational kinetic energy.
    pub fn kinetic(&self, state: &SystemState) -> (f64, f64) {
        (state.translational_kinetic(&self.masses), state.rotational_kinetic(&self.inertia))
    }

    /// `K + U` with the potential that generates the forces (no tail
    /// correction, no cutoff shift); conserved without thermostat.
    pub fn conserved_energy(&self, state: &SystemState) -> f64 {
        let (kt, kr) = self.kinetic(state);
        kt + kr + state.energy.dynamics_energy()
    }

    pub fn kinetic_temperature(&self, state: &SystemState) -> f64 {
        let (kt, kr) = self.kinetic(state);
        let dof = self.composition.translational_dof() + self.composition.rotational_dof();
        if dof == 0 {
            0.0
        } else {
            2.0 * (kt + kr) / dof as f64
        }
    }

    fn half_kick(&self, state: &mut SystemState, dt: f64) {
        for m in 0..state.len() {
            state.velocities[m] += state.forces[m] * (0.5 * dt / self.masses[m]);
            let i = self.inertia[m];
            if i == Vec3::zeros() {
                continue;
            }
            let torque_body = state.orientations[m].inverse_transform_vector(&state.torques[m]);
            let w = &mut state.angular_velocities[m];
            for k in 0..3 {
                if i[k] > 0.0 {
                    w[k] += 0.5 * dt * torque_body[k] / i[k];
                } else {
                    w[k] = 0.0;
                }
            }
        }
    }

    /// One integration step; forces and energies are current afterwards.
    pub fn step(&self, state: &mut SystemState, dt: f64, step: u64) -> Result<()> {
        self.half_kick(state, dt);
        for m in 0..state.len() {
            state.positions[m] += state.velocities[m] * dt;
            let i = self.inertia[m];
            if i != Vec3::zeros() {
                let mut pi = i.component_mul(&state.angular_velocities[m]);
                free_rotation(&mut state.orientations[m], &mut pi, &i, dt);
                state.orientations[m].renormalize();
                state.angular_velocities[m] = Vec3::from_fn(|k, _| if i[k] > 0.0 { pi[k] / i[k] } else { 0.0 });
            }
        }
        state.wrap_positions();
        self.evaluate(state)?;
        self.half_kick(state, dt);
        check_finite(state, step)
    }
}

fn check_finite(state: &SystemState, step: u64) -> Result<()> {
    let fields: [(&'static str, &[Vec3]); 4] = [
        ("position", &state.positions),
        ("velocity", &state.velocities),
        ("angular velocity", &state.angular_velocities),
        ("force", &state.forces),
    ];
    for (quantity, values) in fields {
        if let Some(m) = values.iter().position(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(Error::NonFinite {
                quantity,
                molecule: m,
                step,
                dump: format!(
                    "r={:?} v={:?} w={:?} F={:?} tau={:?}",
                    state.positions[m].as_slice(),
                    state.velocities[m].as_slice(),
                    state.angular_velocities[m].as_slice(),
                    state.forces[m].as_slice(),
                    state.torques[m].as_slice()
                ),
            });
        }
    }
    Ok(())
}
