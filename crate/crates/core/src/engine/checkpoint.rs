//! Binary checkpoint layout.
//!
//! All integers are little-endian; `f64` values are stored as their IEEE-754
//! bit patterns so a restore is bit-exact. Strings and arrays carry a `u64`
//! length prefix.
//!
//! ```text
//! magic      8 bytes  "RIGIDMD\0"
//! version    u32      CHECKPOINT_VERSION
//! metadata   str      caller-supplied text (the effective configuration)
//! composition         species (name, sites, mass data), counts, L, T
//! plan                dt, step counts, thermostat, n_ext, cutoff,
//!                     electrostatics, workers, sampler plan
//! seed       u64
//! step       u64      completed steps
//! state               positions, orientations, velocities, angular
//!                     velocities, forces, torques, energies, virial
//! samplers            block averages, Massieu moments, histograms,
//!                     correlation rings with lag sums, residence windows
//! warnings   [str]
//! ```
//!
//! The trajectory draws random numbers only at initialization, so the seed
//! alone reproduces the generator state.

use crate::codec::{Persist, Reader, Writer};
use crate::error::{Error, Result};
use crate::greenkubo::PlateauCheck;
use crate::model::{MoleculeSpecies, Site, SiteKind, SystemComposition, SystemState};
use crate::potentials::{Electrostatics, EnergyBreakdown};
use crate::Quat;

use super::plan::{RdfPlan, ResidencePlan, SamplerPlan, ShellRadius, SimulationPlan, ThermostatPlan};

pub const MAGIC: &[u8; 8] = b"RIGIDMD\0";
pub const CHECKPOINT_VERSION: u32 = 1;

pub(crate) fn put_opt<T: Persist>(w: &mut Writer, v: &Option<T>) {
    w.bool(v.is_some());
    if let Some(x) = v {
        x.encode(w);
    }
}

pub(crate) fn get_opt<T: Persist>(r: &mut Reader<'_>) -> Result<Option<T>> {
    if r.bool()? {
        Ok(Some(T::decode(r)?))
    } else {
        Ok(None)
    }
}

impl Persist for MoleculeSpecies {
    fn encode(&self, w: &mut Writer) {
        w.str(&self.name);
        w.usize(self.sites.len());
        for s in &self.sites {
            match s.kind {
                SiteKind::LennardJones { sigma, epsilon } => {
                    w.u8(0);
                    w.f64(sigma);
                    w.f64(epsilon);
                }
                SiteKind::Charge { q } => {
                    w.u8(1);
                    w.f64(q);
                }
                SiteKind::Dummy => w.u8(2),
            }
            w.vec3(&s.position);
            w.f64(s.mass);
        }
        w.f64(self.total_mass);
        w.vec3(&self.center_of_mass);
        w.vec3(&self.inertia);
        w.f64(self.net_charge);
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self> {
        let name = r.str()?;
        let n = r.count(33)?;
        let mut sites = Vec::with_capacity(n);
        for _ in 0..n {
            let kind = match r.u8()? {
                0 => SiteKind::LennardJones {
                    sigma: r.f64()?,
                    epsilon: r.f64()?,
                },
                1 => SiteKind::Charge { q: r.f64()? },
                2 => SiteKind::Dummy,
                t => return Err(Error::Restore(format!("unknown site kind tag {t}"))),
            };
            sites.push(Site {
                kind,
                position: r.vec3()?,
                mass: r.f64()?,
            });
        }
        Ok(MoleculeSpecies {
            name,
            sites,
            total_mass: r.f64()?,
            center_of_mass: r.vec3()?,
            inertia: r.vec3()?,
            net_charge: r.f64()?,
        })
    }
}

impl Persist for SystemComposition {
    fn encode(&self, w: &mut Writer) {
        w.usize(self.species.len());
        for s in &self.species {
            s.encode(w);
        }
        w.u64s(&self.counts.iter().map(|&c| c as u64).collect::<Vec<_>>());
        w.f64(self.box_length);
        w.f64(self.temperature);
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self> {
        let n = r.count(8)?;
        let species = (0..n).map(|_| MoleculeSpecies::decode(r)).collect::<Result<Vec<_>>>()?;
        let counts = r.u64s()?.into_iter().map(|c| c as usize).collect();
        let box_length = r.f64()?;
        let temperature = r.f64()?;
        SystemComposition::new(species, counts, box_length, temperature).map_err(|e| Error::Restore(e.to_string()))
    }
}

impl Persist for EnergyBreakdown {
    fn encode(&self, w: &mut Writer) {
        for x in [
            self.lj,
            self.elec_real,
            self.elec_recip,
            self.elec_self,
            self.reaction_field,
            self.lrc,
            self.lj_shift,
            self.du_dv,
            self.du_dv_lrc,
            self.d2u_dv2,
            self.d2u_dv2_lrc,
        ] {
            w.f64(x);
        }
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self> {
        Ok(EnergyBreakdown {
            lj: r.f64()?,
            elec_real: r.f64()?,
            elec_recip: r.f64()?,
            elec_self: r.f64()?,
            reaction_field: r.f64()?,
            lrc: r.f64()?,
            lj_shift: r.f64()?,
            du_dv: r.f64()?,
            du_dv_lrc: r.f64()?,
            d2u_dv2: r.f64()?,
            d2u_dv2_lrc: r.f64()?,
        })
    }
}

impl Persist for SystemState {
    fn encode(&self, w: &mut Writer) {
        w.f64(self.box_length);
        w.vec3s(&self.positions);
        w.usize(self.orientations.len());
        for q in &self.orientations {
            let c = q.quaternion().coords;
            for k in 0..4 {
                w.f64(c[k]);
            }
        }
        w.vec3s(&self.velocities);
        w.vec3s(&self.angular_velocities);
        w.vec3s(&self.forces);
        w.vec3s(&self.torques);
        self.energy.encode(w);
        w.f64(self.virial);
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self> {
        let box_length = r.f64()?;
        let positions = r.vec3s()?;
        let nq = r.count(32)?;
        let mut orientations = Vec::with_capacity(nq);
        for _ in 0..nq {
            let (x, y, z, wq) = (r.f64()?, r.f64()?, r.f64()?, r.f64()?);
            orientations.push(Quat::new_unchecked(nalgebra::Quaternion::new(wq, x, y, z)));
        }
        let state = SystemState {
            box_length,
            positions,
            orientations,
            velocities: r.vec3s()?,
            angular_velocities: r.vec3s()?,
            forces: r.vec3s()?,
            torques: r.vec3s()?,
            energy: EnergyBreakdown::decode(r)?,
            virial: r.f64()?,
        };
        let n = state.positions.len();
        let lens = [
            state.orientations.len(),
            state.velocities.len(),
            state.angular_velocities.len(),
            state.forces.len(),
            state.torques.len(),
        ];
        if lens.iter().any(|&l| l != n) {
            return Err(Error::Restore("state arrays differ in length".into()));
        }
        Ok(state)
    }
}

impl Persist for SimulationPlan {
    fn encode(&self, w: &mut Writer) {
        w.f64(self.dt);
        w.u64(self.n_equilibration);
        w.u64(self.n_production);
        w.bool(self.thermostat.is_some());
        if let Some(t) = &self.thermostat {
            w.u64(t.equilibration_interval);
            w.u64(t.production_interval);
        }
        w.u64(self.n_ext);
        w.f64(self.cutoff);
        match self.electrostatics {
            Electrostatics::Cutoff => w.u8(0),
            Electrostatics::ReactionField { epsilon_rf } => {
                w.u8(1);
                w.f64(epsilon_rf);
            }
            Electrostatics::Ewald { alpha, kmax } => {
                w.u8(2);
                w.f64(alpha);
                w.u32(kmax);
            }
        }
        w.usize(self.workers);

        let s = &self.samplers;
        w.bool(s.massieu);
        w.bool(s.rdf.is_some());
        if let Some(p) = &s.rdf {
            w.f64(p.bin_width);
            w.opt_f64(p.r_max);
            w.u64(p.stride);
        }
        w.usize(s.correlation_length);
        w.bool(s.conductivity);
        w.bool(s.thermal_conductivity.is_some());
        if let Some(h) = &s.thermal_conductivity {
            w.f64s(h);
        }
        w.bool(s.residence.is_some());
        if let Some(p) = &s.residence {
            w.usize(p.solute);
            w.usize(p.solvent);
            w.opt_f64(match p.radius {
                ShellRadius::Auto => None,
                ShellRadius::Fixed(x) => Some(x),
            });
            w.f64(p.tolerance);
        }
        w.bool(s.self_diffusion);
        w.f64(s.plateau.window);
        w.f64(s.plateau.tolerance);
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self> {
        let dt = r.f64()?;
        let n_equilibration = r.u64()?;
        let n_production = r.u64()?;
        let thermostat = if r.bool()? {
            Some(ThermostatPlan {
                equilibration_interval: r.u64()?,
                production_interval: r.u64()?,
            })
        } else {
            None
        };
        let n_ext = r.u64()?;
        let cutoff = r.f64()?;
        let electrostatics = match r.u8()? {
            0 => Electrostatics::Cutoff,
            1 => Electrostatics::ReactionField { epsilon_rf: r.f64()? },
            2 => Electrostatics::Ewald {
                alpha: r.f64()?,
                kmax: r.u32()?,
            },
            t => return Err(Error::Restore(format!("unknown electrostatics tag {t}"))),
        };
        let workers = r.usize()?;
        let massieu = r.bool()?;
        let rdf = if r.bool()? {
            Some(RdfPlan {
                bin_width: r.f64()?,
                r_max: r.opt_f64()?,
                stride: r.u64()?,
            })
        } else {
            None
        };
        let correlation_length = r.usize()?;
        let conductivity = r.bool()?;
        let thermal_conductivity = if r.bool()? { Some(r.f64s()?) } else { None };
        let residence = if r.bool()? {
            Some(ResidencePlan {
                solute: r.usize()?,
                solvent: r.usize()?,
                radius: r.opt_f64()?.map_or(ShellRadius::Auto, ShellRadius::Fixed),
                tolerance: r.f64()?,
            })
        } else {
            None
        };
        let self_diffusion = r.bool()?;
        let plateau = PlateauCheck {
            window: r.f64()?,
            tolerance: r.f64()?,
        };
        Ok(SimulationPlan {
            dt,
            n_equilibration,
            n_production,
            thermostat,
            n_ext,
            cutoff,
            electrostatics,
            workers,
            samplers: SamplerPlan {
                massieu,
                rdf,
                correlation_length,
                conductivity,
                thermal_conductivity,
                residence,
                self_diffusion,
                plateau,
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::init_lattice;
    use crate::Vec3;

    #[test]
    fn composition_and_state_round_trip() {
        let s = MoleculeSpecies::build(
            "W",
            vec![
                Site::lj(Vec3::new(0.0, 0.0, 0.1), 1.0, 0.8, 16.0),
                Site::charge(Vec3::new(0.3, 0.2, 0.0), 0.4, 1.0),
                Site::charge(Vec3::new(-0.3, 0.2, 0.0), 0.4, 1.0),
                Site::charge(Vec3::new(0.0, -0.1, 0.0), -0.8, 0.0),
                Site::dummy(Vec3::new(0.1, 0.1, 0.1), 0.0),
            ],
        )
        .unwrap();
        let comp = SystemComposition::with_density(vec![s], vec![10], 0.1, 1.3).unwrap();
        assert_eq!(SystemComposition::from_bytes(&comp.to_bytes()).unwrap(), comp);
        let st = init_lattice(&comp, 11).unwrap();
        assert_eq!(SystemState::from_bytes(&st.to_bytes()).unwrap(), st);
    }

    #[test]
    fn plan_round_trip() {
        let mut p = SimulationPlan::new(0.002, 5, 7, 2.5);
        p.electrostatics = Electrostatics::Ewald { alpha: 1.1, kmax: 6 };
        p.samplers.rdf = Some(RdfPlan::default());
        p.samplers.thermal_conductivity = Some(vec![1.0, -2.0]);
        p.samplers.residence = Some(ResidencePlan {
            solute: 1,
            solvent: 0,
            radius: ShellRadius::Auto,
            tolerance: 0.1,
        });
        assert_eq!(SimulationPlan::from_bytes(&p.to_bytes()).unwrap(), p);
    }
}
