//! NVT time integration and sampling orchestration.
//!
//! A run consists of an equilibration phase with samplers off and a
//! production phase. Scalar averages and Massieu moments are sampled after
//! every production step, correlation fluxes after every `n_ext`-th, and the
//! site RDF at its own stride. The thermostat acts after sampling.

mod checkpoint;
mod integrator;
mod plan;
mod thermostat;

pub use checkpoint::{CHECKPOINT_VERSION, MAGIC};
pub use integrator::{free_rotation, Dynamics};
pub use plan::{RdfPlan, ResidencePlan, SamplerPlan, ShellRadius, SimulationPlan, ThermostatPlan};
pub use thermostat::thermostat;

use crate::codec::{Persist, Reader, Writer};
use crate::error::{Error, Result};
use crate::greenkubo::{
    electric_conductivity, electric_current, heat_flux, self_diffusion, species_velocities, thermal_conductivity,
    AcfSummary, CorrelationSet, ResidenceCorrelator, ResidenceResult, TransportResult,
};
use crate::massieu::{DerivativeAccumulator, DerivativeReport};
use crate::model::{init_lattice, SystemComposition, SystemState};
use crate::stats::{BlockAverage, Estimate};
use crate::structure::{first_minimum, Histogram, RdfTable};
use checkpoint::{get_opt, put_opt};

/// Stride of the center-of-mass histogram used to place the residence shell.
const SHELL_STRIDE: u64 = 10;

/// Autocorrelation function of one sampled flux.
#[derive(Clone, Debug, PartialEq)]
pub struct AcfTable {
    pub name: String,
    /// Units of the correlated quantity product.
    pub units: String,
    pub n_ext: u64,
    pub samples: u64,
    pub summary: AcfSummary,
}

/// Solvation number from the first minimum of a finalized `g(r)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SolvationEntry {
    pub label_a: String,
    pub label_b: String,
    pub r_min: f64,
    pub number: f64,
}

/// Finalized observables of a run. Samplers that collected nothing are
/// absent.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultsBundle {
    pub n_molecules: usize,
    pub volume: f64,
    pub density: f64,
    pub set_temperature: f64,
    pub dt: f64,
    pub n_ext: u64,
    pub equilibration_steps: u64,
    pub production_steps: u64,
    pub temperature: Option<Estimate>,
    /// Virial pressure including the LJ tail; unavailable under Ewald.
    pub pressure: Option<Estimate>,
    /// Potential energy per molecule, tail correction included.
    pub potential_energy: Option<Estimate>,
    pub massieu: Option<DerivativeReport>,
    pub rdf: Vec<RdfTable>,
    pub solvation: Vec<SolvationEntry>,
    pub conductivity: Option<TransportResult>,
    pub thermal_conductivity: Option<TransportResult>,
    pub self_diffusion: Vec<(String, TransportResult)>,
    pub residence: Option<ResidenceResult>,
    pub correlations: Vec<AcfTable>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
struct Samplers {
    temperature: BlockAverage,
    pressure: Option<BlockAverage>,
    energy: BlockAverage,
    massieu: Option<DerivativeAccumulator>,
    rdf: Option<Histogram>,
    shell: Option<Histogram>,
    conductivity: Option<CorrelationSet>,
    heat: Option<CorrelationSet>,
    diffusion: Vec<CorrelationSet>,
    residence: Option<ResidenceCorrelator>,
}

impl Samplers {
    fn new(comp: &SystemComposition, plan: &SimulationPlan) -> Result<Self> {
        let s = &plan.samplers;
        let n_prod = plan.n_production;
        let n_corr = n_prod / plan.n_ext;
        let m = s.correlation_length;
        let set = |name: String, dim: usize| -> Result<CorrelationSet> {
            let mut c = CorrelationSet::new(name, dim, m, plan.n_ext, plan.dt, n_corr)?;
            c.plateau = s.plateau;
            Ok(c)
        };
        let residence = match s.residence {
            Some(ResidencePlan {
                solute,
                solvent,
                radius: ShellRadius::Fixed(radius),
                tolerance,
            }) => Some(residence_correlator(comp, plan, solute, solvent, radius, tolerance)?),
            _ => None,
        };
        let shell = match s.residence {
            Some(ResidencePlan {
                radius: ShellRadius::Auto,
                ..
            }) => Some(Histogram::molecular(comp, crate::structure::DEFAULT_BIN_WIDTH, None)?),
            _ => None,
        };
        Ok(Samplers {
            temperature: BlockAverage::new(n_prod),
            pressure: plan.electrostatics_allows_pressure().then(|| BlockAverage::new(n_prod)),
            energy: BlockAverage::new(n_prod),
            massieu: s
                .massieu
                .then(|| DerivativeAccumulator::new(comp.temperature, comp.volume(), comp.molecule_count(), n_prod)),
            rdf: s.rdf.map(|r| Histogram::sites(comp, r.bin_width, r.r_max)).transpose()?,
            shell,
            conductivity: s.conductivity.then(|| set("electric_current".into(), 3)).transpose()?,
            heat: s.thermal_conductivity.as_ref().map(|_| set("heat_flux".into(), 3)).transpose()?,
            diffusion: if s.self_diffusion {
                comp.species
                    .iter()
                    .zip(&comp.counts)
                    .map(|(sp, &n)| set(format!("velocity_{}", sp.name), 3 * n))
                    .collect::<Result<_>>()?
            } else {
                Vec::new()
            },
            residence,
        })
    }
}

impl SimulationPlan {
    fn electrostatics_allows_pressure(&self) -> bool {
        !matches!(self.electrostatics, crate::potentials::Electrostatics::Ewald { .. })
    }
}

fn residence_correlator(
    comp: &SystemComposition,
    plan: &SimulationPlan,
    solute: usize,
    solvent: usize,
    radius: f64,
    tolerance: f64,
) -> Result<ResidenceCorrelator> {
    let mut c = ResidenceCorrelator::new(
        comp,
        solute,
        solvent,
        radius,
        plan.tolerance_samples(tolerance) as u32,
        plan.samplers.correlation_length,
        plan.sample_interval(),
        plan.n_production / plan.n_ext,
    )?;
    c.plateau = plan.samplers.plateau;
    Ok(c)
}

impl Persist for Samplers {
    fn encode(&self, w: &mut Writer) {
        self.temperature.encode(w);
        put_opt(w, &self.pressure);
        self.energy.encode(w);
        put_opt(w, &self.massieu);
        put_opt(w, &self.rdf);
        put_opt(w, &self.shell);
        put_opt(w, &self.conductivity);
        put_opt(w, &self.heat);
        w.usize(self.diffusion.len());
        for d in &self.diffusion {
            d.encode(w);
        }
        put_opt(w, &self.residence);
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self> {
        Ok(Samplers {
            temperature: BlockAverage::decode(r)?,
            pressure: get_opt(r)?,
            energy: BlockAverage::decode(r)?,
            massieu: get_opt(r)?,
            rdf: get_opt(r)?,
            shell: get_opt(r)?,
            conductivity: get_opt(r)?,
            heat: get_opt(r)?,
            diffusion: {
                let n = r.count(8)?;
                (0..n).map(|_| CorrelationSet::decode(r)).collect::<Result<_>>()?
            },
            residence: get_opt(r)?,
        })
    }
}

/// A run in progress: dynamics, current state and sampler state.
#[derive(Clone, Debug)]
pub struct Simulation {
    pub dynamics: Dynamics,
    pub plan: SimulationPlan,
    pub seed: u64,
    pub state: SystemState,
    step: u64,
    species_of: Vec<usize>,
    samplers: Samplers,
    warnings: Vec<String>,
}

impl Simulation {
    /// Validates the plan, places molecules on a lattice and evaluates the
    /// initial forces.
    pub fn new(composition: SystemComposition, plan: SimulationPlan, seed: u64) -> Result<Self> {
        plan.validate(&composition)?;
        let mut state = init_lattice(&composition, seed)?;
        let dynamics = Dynamics::new(composition, plan.cutoff, plan.electrostatics, plan.workers)?;
        dynamics.evaluate(&mut state)?;
        Self::assemble(dynamics, plan, seed, state, 0)
    }

    /// Starts from a prepared state; its forces are recomputed.
    pub fn from_state(composition: SystemComposition, plan: SimulationPlan, mut state: SystemState) -> Result<Self> {
        plan.validate(&composition)?;
        if state.len() != composition.molecule_count() || state.box_length != composition.box_length {
            return Err(Error::System("state does not match the composition".into()));
        }
        let dynamics = Dynamics::new(composition, plan.cutoff, plan.electrostatics, plan.workers)?;
        dynamics.evaluate(&mut state)?;
        Self::assemble(dynamics, plan, 0, state, 0)
    }

    fn assemble(dynamics: Dynamics, plan: SimulationPlan, seed: u64, state: SystemState, step: u64) -> Result<Self> {
        let samplers = Samplers::new(&dynamics.composition, &plan)?;
        Ok(Simulation {
            species_of: dynamics.composition.species_index(),
            dynamics,
            plan,
            seed,
            state,
            step,
            samplers,
            warnings: Vec::new(),
        })
    }

    pub fn composition(&self) -> &SystemComposition {
        &self.dynamics.composition
    }

    /// Completed steps, equilibration included.
    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn total_steps(&self) -> u64 {
        self.plan.n_equilibration + self.plan.n_production
    }

    pub fn is_finished(&self) -> bool {
        self.step >= self.total_steps()
    }

    /// Number of correlation samples taken so far.
    pub fn correlation_samples(&self) -> u64 {
        self.step.saturating_sub(self.plan.n_equilibration) / self.plan.n_ext
    }

    /// Advances at most `steps` steps; returns the number performed.
    pub fn advance(&mut self, steps: u64) -> Result<u64> {
        let target = self.step.saturating_add(steps).min(self.total_steps());
        let done = target - self.step;
        while self.step < target {
            self.dynamics.step(&mut self.state, self.plan.dt, self.step + 1)?;
            self.step += 1;
            let production = self.step > self.plan.n_equilibration;
            if production {
                self.sample(self.step - self.plan.n_equilibration)?;
            } else {
                self.sample_equilibration(self.step)?;
            }
            if let Some(t) = self.plan.thermostat {
                let (interval, count) = if production {
                    (t.production_interval, self.step - self.plan.n_equilibration)
                } else {
                    (t.equilibration_interval, self.step)
                };
                if count % interval == 0 {
                    thermostat(&self.dynamics, &mut self.state, self.dynamics.composition.temperature)?;
                }
            }
        }
        Ok(done)
    }

    fn sample_equilibration(&mut self, step: u64) -> Result<()> {
        if let Some(h) = &mut self.samplers.shell {
            if step % SHELL_STRIDE == 0 || step == self.plan.n_equilibration {
                h.accumulate(&self.dynamics.composition, &self.species_of, &self.state);
            }
        }
        if step == self.plan.n_equilibration {
            self.place_shell()?;
        }
        Ok(())
    }

    /// Fixes the automatic residence radius at the end of equilibration.
    fn place_shell(&mut self) -> Result<()> {
        let (Some(h), Some(p)) = (self.samplers.shell.take(), self.plan.samplers.residence) else {
            return Ok(());
        };
        let comp = &self.dynamics.composition;
        let a = h.center_index(p.solute, None).expect("molecular center");
        let b = h.center_index(p.solvent, None).expect("molecular center");
        let table = h.table(comp, a, b)?;
        match first_minimum(&table) {
            Some(r) => {
                self.samplers.residence = Some(residence_correlator(comp, &self.plan, p.solute, p.solvent, r, p.tolerance)?);
            }
            None => self.warnings.push(format!(
                "residence time skipped: no first minimum in the {}-{} center-of-mass g(r)",
                comp.species[p.solute].name, comp.species[p.solvent].name
            )),
        }
        Ok(())
    }

    fn sample(&mut self, p: u64) -> Result<()> {
        let comp = &self.dynamics.composition;
        let st = &self.state;
        let e = &st.energy;
        let n = comp.molecule_count() as f64;
        let s = &mut self.samplers;

        s.temperature.push(self.dynamics.kinetic_temperature(st));
        s.energy.push(e.total() / n);
        if let Some(b) = &mut s.pressure {
            let v = comp.volume();
            b.push(comp.density() * comp.temperature + st.virial / (3.0 * v) - e.du_dv_lrc);
        }
        if let Some(acc) = &mut s.massieu {
            acc.accumulate(e.total(), e.total_du_dv(), e.total_d2u_dv2())?;
        }
        if let (Some(h), Some(rp)) = (&mut s.rdf, &self.plan.samplers.rdf) {
            if p % rp.stride == 0 {
                h.accumulate(comp, &self.species_of, st);
            }
        }
        if p % self.plan.n_ext != 0 {
            return Ok(());
        }
        if let Some(c) = &mut s.conductivity {
            c.push(electric_current(comp, st).as_slice());
        }
        if let (Some(c), Some(h)) = (&mut s.heat, &self.plan.samplers.thermal_conductivity) {
            c.push(heat_flux(comp, &self.dynamics.forcefield.table, st, h)?.as_slice());
        }
        for (k, c) in s.diffusion.iter_mut().enumerate() {
            c.push(&species_velocities(comp, st, k));
        }
        if let Some(c) = &mut s.residence {
            let bits = c.occupancy(comp, st);
            c.push(&bits);
        }
        Ok(())
    }

    /// Serializes the complete run; `metadata` is stored verbatim.
    pub fn checkpoint(&self, metadata: &str) -> Vec<u8> {
        let mut w = Writer::new();
        w.bytes(MAGIC);
        w.u32(CHECKPOINT_VERSION);
        w.str(metadata);
        self.dynamics.composition.encode(&mut w);
        self.plan.encode(&mut w);
        w.u64(self.seed);
        w.u64(self.step);
        self.state.encode(&mut w);
        self.samplers.encode(&mut w);
        w.usize(self.warnings.len());
        for m in &self.warnings {
            w.str(m);
        }
        w.into_bytes()
    }

    /// Rebuilds a run from [`Simulation::checkpoint`] output and returns it
    /// with the stored metadata.
    pub fn restore(bytes: &[u8]) -> Result<(Simulation, String)> {
        let mut r = Reader::new(bytes);
        if r.bytes(MAGIC.len())? != MAGIC {
            return Err(Error::Restore("not a rigidmd checkpoint".into()));
        }
        let version = r.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::Restore(format!(
                "checkpoint version {version}, this build reads version {CHECKPOINT_VERSION}"
            )));
        }
        let metadata = r.str()?;
        let composition = SystemComposition::decode(&mut r)?;
        let plan = SimulationPlan::decode(&mut r)?;
        plan.validate(&composition)?;
        let seed = r.u64()?;
        let step = r.u64()?;
        let state = SystemState::decode(&mut r)?;
        if state.len() != composition.molecule_count() {
            return Err(Error::Restore("state size does not match the composition".into()));
        }
        let samplers = Samplers::decode(&mut r)?;
        let n = r.count(8)?;
        let warnings = (0..n).map(|_| r.str()).collect::<Result<_>>()?;
        r.finish()?;
        let dynamics = Dynamics::new(composition, plan.cutoff, plan.electrostatics, plan.workers)?;
        Ok((
            Simulation {
                species_of: dynamics.composition.species_index(),
                dynamics,
                plan,
                seed,
                state,
                step,
                samplers,
                warnings,
            },
            metadata,
        ))
    }

    /// Finalizes every sampler.
    pub fn finish(&self) -> Result<ResultsBundle> {
        let comp = &self.dynamics.composition;
        let s = &self.samplers;
        let mut warnings = self.warnings.clone();
        let production_steps = self.step.saturating_sub(self.plan.n_equilibration);

        let massieu = match &s.massieu {
            Some(acc) if acc.samples() > 0 => match acc.finalize() {
                Ok(r) => {
                    warnings.extend(r.warnings.iter().cloned());
                    Some(r)
                }
                Err(Error::InsufficientSamples(m)) => {
                    warnings.push(format!("Massieu derivatives skipped: {m}"));
                    None
                }
                Err(e) => return Err(e),
            },
            _ => None,
        };
        if let (Some(_), Some(t)) = (&massieu, self.plan.thermostat) {
            if t.production_interval > 1 {
                warnings.push(format!(
                    "Massieu derivatives sampled with production thermostat interval {}; \
                     fluctuation terms are biased unless velocities are rescaled every step",
                    t.production_interval
                ));
            }
        }

        let rdf = match &s.rdf {
            Some(h) if h.snapshots() > 0 => h.finalize(comp)?,
            _ => Vec::new(),
        };
        let solvation = rdf
            .iter()
            .filter_map(|t| {
                first_minimum(t).map(|r| SolvationEntry {
                    label_a: t.label_a.clone(),
                    label_b: t.label_b.clone(),
                    r_min: r,
                    number: t.solvation_number(r),
                })
            })
            .collect();

        let mut correlations = Vec::new();
        let mut transport = |set: &Option<&CorrelationSet>,
                             units: &str,
                             estimate: &dyn Fn(&CorrelationSet) -> Result<TransportResult>|
         -> Result<Option<TransportResult>> {
            let Some(c) = set.filter(|c| c.samples() > 0) else {
                return Ok(None);
            };
            correlations.push(AcfTable {
                name: c.name.clone(),
                units: units.into(),
                n_ext: c.n_ext(),
                samples: c.samples(),
                summary: c.summary(),
            });
            match estimate(c) {
                Ok(t) => {
                    if !t.converged {
                        warnings.push(format!("{}: running integral has not reached a plateau", c.name));
                    }
                    Ok(Some(t))
                }
                Err(Error::InsufficientSamples(m)) => {
                    warnings.push(format!("{m}; coefficient not reported"));
                    Ok(None)
                }
                Err(e) => Err(e),
            }
        };
        let (v, t) = (comp.volume(), comp.temperature);
        let conductivity = transport(&s.conductivity.as_ref(), "charge^2 velocity^2", &|c| {
            electric_conductivity(c, v, t)
        })?;
        let thermal = transport(&s.heat.as_ref(), "energy^2 velocity^2", &|c| thermal_conductivity(c, v, t))?;
        let mut diffusion = Vec::new();
        for (k, c) in s.diffusion.iter().enumerate() {
            let n_k = comp.counts[k];
            if let Some(d) = transport(&Some(c), "velocity^2", &|c| self_diffusion(c, n_k))? {
                diffusion.push((comp.species[k].name.clone(), d));
            }
        }

        let residence = s.residence.as_ref().filter(|c| c.samples() > 0).map(|c| {
            correlations.push(AcfTable {
                name: format!("residence_{}_{}", comp.species[c.solute].name, comp.species[c.solvent].name),
                units: "1".into(),
                n_ext: self.plan.n_ext,
                samples: c.samples(),
                summary: c.summary(),
            });
            let r = c.result(comp);
            if r.tau.is_none() {
                warnings.push(format!("residence time: no {} shell was ever occupied", r.solute));
            }
            r
        });

        Ok(ResultsBundle {
            n_molecules: comp.molecule_count(),
            volume: v,
            density: comp.density(),
            set_temperature: t,
            dt: self.plan.dt,
            n_ext: self.plan.n_ext,
            equilibration_steps: self.step.min(self.plan.n_equilibration),
            production_steps,
            temperature: s.temperature.estimate(),
            pressure: s.pressure.as_ref().and_then(BlockAverage::estimate),
            potential_energy: s.energy.estimate(),
            massieu,
            rdf,
            solvation,
            conductivity,
            thermal_conductivity: thermal,
            self_diffusion: diffusion,
            residence,
            correlations,
            warnings,
        })
    }
}

/// Equilibrates, samples and finalizes a complete run.
pub fn run(composition: SystemComposition, plan: SimulationPlan, seed: u64) -> Result<ResultsBundle> {
    let mut sim = Simulation::new(composition, plan, seed)?;
    sim.advance(sim.total_steps())?;
    sim.finish()
}
