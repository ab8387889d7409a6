use crate::error::{Error, Result};
use crate::greenkubo::{PlateauCheck, MAX_TOLERANCE};
use crate::model::SystemComposition;
use crate::potentials::Electrostatics;
use crate::structure::DEFAULT_BIN_WIDTH;

/// Thermostat cadence in steps for each phase.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThermostatPlan {
    pub equilibration_interval: u64,
    pub production_interval: u64,
}

impl Default for ThermostatPlan {
    fn default() -> Self {
        ThermostatPlan {
            equilibration_interval: 1,
            production_interval: 10,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RdfPlan {
    pub bin_width: f64,
    /// Defaults to half the box length.
    pub r_max: Option<f64>,
    pub stride: u64,
}

impl Default for RdfPlan {
    fn default() -> Self {
        RdfPlan {
            bin_width: DEFAULT_BIN_WIDTH,
            r_max: None,
            stride: 10,
        }
    }
}

/// Solvation shell radius; `Auto` takes the first minimum of the
/// center-of-mass `g(r)` sampled during equilibration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ShellRadius {
    Auto,
    Fixed(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResidencePlan {
    pub solute: usize,
    pub solvent: usize,
    pub radius: ShellRadius,
    /// Longest tolerated excursion, in time units.
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SamplerPlan {
    pub massieu: bool,
    pub rdf: Option<RdfPlan>,
    /// Number of lags `M` kept by every correlation set.
    pub correlation_length: usize,
    pub conductivity: bool,
    /// Partial molar enthalpy per species.
    pub thermal_conductivity: Option<Vec<f64>>,
    pub residence: Option<ResidencePlan>,
    pub self_diffusion: bool,
    pub plateau: PlateauCheck,
}

impl Default for SamplerPlan {
    fn default() -> Self {
        SamplerPlan {
            massieu: false,
            rdf: None,
            correlation_length: 1000,
            conductivity: false,
            thermal_conductivity: None,
            residence: None,
            self_diffusion: false,
            plateau: PlateauCheck::default(),
        }
    }
}

impl SamplerPlan {
    pub fn any_correlation(&self) -> bool {
        self.conductivity || self.thermal_conductivity.is_some() || self.residence.is_some() || self.self_diffusion
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationPlan {
    pub dt: f64,
    pub n_equilibration: u64,
    pub n_production: u64,
    /// `None` runs NVE.
    pub thermostat: Option<ThermostatPlan>,
    /// Correlation samples are taken every `n_ext` production steps.
    pub n_ext: u64,
    pub cutoff: f64,
    pub electrostatics: Electrostatics,
    pub workers: usize,
    pub samplers: SamplerPlan,
}

impl SimulationPlan {
    pub fn new(dt: f64, n_equilibration: u64, n_production: u64, cutoff: f64) -> Self {
        SimulationPlan {
            dt,
            n_equilibration,
            n_production,
            thermostat: Some(ThermostatPlan::default()),
            n_ext: 1,
            cutoff,
            electrostatics: Electrostatics::Cutoff,
            workers: 1,
            samplers: SamplerPlan::default(),
        }
    }

    /// Time between correlation samples.
    pub fn sample_interval(&self) -> f64 {
        self.n_ext as f64 * self.dt
    }

    /// Residence tolerance rounded to whole correlation samples.
    pub fn tolerance_samples(&self, tolerance: f64) -> u64 {
        (tolerance / self.sample_interval()).round() as u64
    }

    /// Every violation of the plan against `composition`.
    pub fn violations(&self, composition: &SystemComposition) -> Vec<String> {
        let mut out = Vec::new();
        let s = &self.samplers;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            out.push(format!("time step must be positive, got {}", self.dt));
        }
        if self.n_ext == 0 {
            out.push("n_ext must be at least 1".into());
        }
        if self.workers == 0 {
            out.push("worker count must be at least 1".into());
        }
        if !(self.cutoff > 0.0) {
            out.push(format!("cutoff must be positive, got {}", self.cutoff));
        } else if self.cutoff > 0.5 * composition.box_length {
            out.push(format!(
                "cutoff {} exceeds half the box length {}",
                self.cutoff,
                0.5 * composition.box_length
            ));
        }
        if let Some(t) = &self.thermostat {
            if t.equilibration_interval == 0 || t.production_interval == 0 {
                out.push("thermostat intervals must be at least 1".into());
            }
        }
        match self.electrostatics {
            Electrostatics::Ewald { alpha, kmax } => {
                if s.massieu {
                    out.push("Massieu derivative sampling is not available together with Ewald summation".into());
                }
                if self.workers > 1 {
                    out.push("thread-parallel force evaluation (workers > 1) is not available together with Ewald summation".into());
                }
                if s.thermal_conductivity.is_some() {
                    out.push("thermal conductivity is not available together with Ewald summation".into());
                }
                if !(alpha > 0.0) || kmax == 0 {
                    out.push(format!("invalid Ewald parameters alpha={alpha}, kmax={kmax}"));
                }
                let q = composition.total_charge();
                if q.abs() > 1e-10 {
                    out.push(format!("Ewald summation requires a neutral system, net charge {q}"));
                }
            }
            Electrostatics::ReactionField { epsilon_rf } => {
                if !(epsilon_rf >= 1.0) {
                    out.push(format!("reaction field permittivity must be >= 1, got {epsilon_rf}"));
                }
                for sp in composition.species.iter().filter(|sp| sp.net_charge.abs() > 1e-12) {
                    out.push(format!(
                        "reaction field requires neutral molecules; species '{}' carries charge {}",
                        sp.name, sp.net_charge
                    ));
                }
            }
            Electrostatics::Cutoff => {}
        }
        if s.any_correlation() && s.correlation_length < 2 {
            out.push(format!("correlation length must be at least 2, got {}", s.correlation_length));
        }
        if s.conductivity && !composition.species.iter().any(|sp| sp.is_ion()) {
            out.push("electric conductivity requires at least one charged species".into());
        }
        if let Some(h) = &s.thermal_conductivity {
            for sp in composition.species.iter().skip(h.len()) {
                out.push(format!("thermal conductivity: partial molar enthalpy missing for component '{}'", sp.name));
            }
            if h.len() > composition.species.len() {
                out.push(format!(
                    "thermal conductivity: {} enthalpies given for {} components",
                    h.len(),
                    composition.species.len()
                ));
            }
        }
        if let Some(r) = &s.rdf {
            if !(r.bin_width > 0.0) || r.stride == 0 {
                out.push("rdf needs a positive bin width and stride".into());
            }
            if let Some(rm) = r.r_max {
                if !(rm > 0.0 && rm <= 0.5 * composition.box_length) {
                    out.push(format!("rdf r_max must lie in (0, L/2], got {rm}"));
                }
            }
        }
        if let Some(r) = &s.residence {
            let n = composition.species.len();
            if r.solute >= n || r.solvent >= n {
                out.push(format!("residence species index out of range ({}, {})", r.solute, r.solvent));
            }
            match r.radius {
                ShellRadius::Fixed(x) if !(x > 0.0 && x <= 0.5 * composition.box_length) => {
                    out.push(format!("residence radius must lie in (0, L/2], got {x}"));
                }
                ShellRadius::Auto if self.n_equilibration == 0 => {
                    out.push("automatic residence radius needs equilibration steps to sample g(r)".into());
                }
                _ => {}
            }
            if !(r.tolerance >= 0.0) {
                out.push(format!("residence tolerance must be non-negative, got {}", r.tolerance));
            } else if self.dt > 0.0 && self.n_ext > 0 {
                let k = self.tolerance_samples(r.tolerance);
                if k > MAX_TOLERANCE as u64 {
                    out.push(format!(
                        "residence tolerance spans {k} correlation samples, at most {MAX_TOLERANCE} supported"
                    ));
                }
            }
        }
        out
    }

    pub fn validate(&self, composition: &SystemComposition) -> Result<()> {
        let v = self.violations(composition);
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(v))
        }
    }
}
