//! Plain-text run configuration.
//!
//! ```text
//! format_version = 1
//!
//! [system]
//! species = argon.species          # paths relative to the config file
//! counts = 256
//! temperature = 1.0
//! density = 0.8                    # or box_length
//! seed = 1
//!
//! [run]
//! dt = 0.001
//! equilibration_steps = 1000
//! production_steps = 10000
//! cutoff = 3.0
//!
//! [electrostatics]
//! method = none                    # none | reaction_field | ewald
//!
//! [sampling]
//! massieu = true
//! ```
//!
//! Every violation is collected before reporting. [`SimulationConfig`]'s
//! `Display` writes the effective configuration with all defaults filled in;
//! parsing that text yields the same value.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use crate::engine::{RdfPlan, ResidencePlan, SamplerPlan, ShellRadius, SimulationPlan, ThermostatPlan};
use crate::error::{Error, Result};
use crate::greenkubo::PlateauCheck;
use crate::model::{MoleculeSpecies, SystemComposition};
use crate::potentials::{ewald_tune, Electrostatics};

pub const CONFIG_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BoxSize {
    Density(f64),
    Length(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EwaldParameters {
    /// Tuned from a target relative accuracy.
    Accuracy(f64),
    Explicit { alpha: f64, kmax: u32 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ElectrostaticsConfig {
    /// Bare Coulomb truncated at the cutoff.
    None,
    ReactionField { epsilon_rf: f64 },
    Ewald(EwaldParameters),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationConfig {
    pub species: Vec<PathBuf>,
    pub counts: Vec<usize>,
    pub temperature: f64,
    pub size: BoxSize,
    pub seed: u64,

    pub dt: f64,
    pub equilibration_steps: u64,
    pub production_steps: u64,
    pub cutoff: f64,
    pub thermostat: bool,
    pub thermostat_interval_equilibration: u64,
    pub thermostat_interval_production: u64,
    pub workers: usize,
    /// Steps between checkpoint writes; 0 writes only at the end.
    pub checkpoint_interval: u64,
    pub output: PathBuf,

    pub electrostatics: ElectrostaticsConfig,

    pub n_ext: u64,
    pub correlation_length: usize,
    pub massieu: bool,
    pub rdf: bool,
    pub rdf_bin_width: f64,
    pub rdf_r_max: Option<f64>,
    pub rdf_stride: u64,
    pub conductivity: bool,
    pub thermal_conductivity: bool,
    /// Partial molar enthalpies by species name.
    pub enthalpies: BTreeMap<String, f64>,
    pub residence: bool,
    pub residence_solute: Option<String>,
    pub residence_solvent: Option<String>,
    /// `None` selects the first minimum of the center-of-mass `g(r)`.
    pub residence_radius: Option<f64>,
    pub residence_tolerance: f64,
    pub self_diffusion: bool,
    pub plateau_window: f64,
    pub plateau_tolerance: f64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        let plateau = PlateauCheck::default();
        let thermostat = ThermostatPlan::default();
        SimulationConfig {
            species: Vec::new(),
            counts: Vec::new(),
            temperature: 0.0,
            size: BoxSize::Density(0.0),
            seed: 1,
            dt: 0.0,
            equilibration_steps: 0,
            production_steps: 0,
            cutoff: 0.0,
            thermostat: true,
            thermostat_interval_equilibration: thermostat.equilibration_interval,
            thermostat_interval_production: thermostat.production_interval,
            workers: 1,
            checkpoint_interval: 0,
            output: PathBuf::from("output"),
            electrostatics: ElectrostaticsConfig::None,
            n_ext: 1,
            correlation_length: 1000,
            massieu: false,
            rdf: false,
            rdf_bin_width: RdfPlan::default().bin_width,
            rdf_r_max: None,
            rdf_stride: RdfPlan::default().stride,
            conductivity: false,
            thermal_conductivity: false,
            enthalpies: BTreeMap::new(),
            residence: false,
            residence_solute: None,
            residence_solvent: None,
            residence_radius: None,
            residence_tolerance: 0.0,
            self_diffusion: false,
            plateau_window: plateau.window,
            plateau_tolerance: plateau.tolerance,
        }
    }
}

/// A parsed configuration with its loaded species, composition and plan.
#[derive(Clone, Debug)]
pub struct ResolvedConfig {
    pub config: SimulationConfig,
    pub composition: SystemComposition,
    pub plan: SimulationPlan,
}

const KEYS: &[(&str, &[&str])] = &[
    ("system", &["species", "counts", "temperature", "density", "box_length", "seed"]),
    (
        "run",
        &[
            "dt",
            "equilibration_steps",
            "production_steps",
            "cutoff",
            "thermostat",
            "thermostat_interval_equilibration",
            "thermostat_interval_production",
            "workers",
            "checkpoint_interval",
            "output",
        ],
    ),
    ("electrostatics", &["method", "epsilon_rf", "ewald_delta", "ewald_alpha", "ewald_kmax"]),
    (
        "sampling",
        &[
            "n_ext",
            "correlation_length",
            "massieu",
            "rdf",
            "rdf_bin_width",
            "rdf_r_max",
            "rdf_stride",
            "conductivity",
            "thermal_conductivity",
            "residence",
            "residence_solute",
            "residence_solvent",
            "residence_radius",
            "residence_tolerance",
            "self_diffusion",
            "plateau_window",
            "plateau_tolerance",
        ],
    ),
];

struct Entry {
    line: usize,
    value: String,
}

/// Raw `section.key -> value` table with its syntax errors.
struct Table {
    entries: BTreeMap<String, Entry>,
    errors: Vec<String>,
}

impl Table {
    fn read(text: &str) -> Table {
        let mut t = Table {
            entries: BTreeMap::new(),
            errors: Vec::new(),
        };
        let mut section: Option<String> = None;
        let mut version_seen = false;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            let lineno = i + 1;
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                let name = name.trim();
                if !KEYS.iter().any(|(s, _)| *s == name) {
                    t.errors.push(format!("line {lineno}: unknown section [{name}]"));
                }
                section = Some(name.to_string());
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                t.errors.push(format!("line {lineno}: expected 'key = value'"));
                continue;
            };
            let (key, value) = (key.trim(), value.trim().to_string());
            let Some(sec) = &section else {
                if key == "format_version" {
                    version_seen = true;
                    if value != CONFIG_FORMAT_VERSION.to_string() {
                        t.errors.push(format!(
                            "line {lineno}: format_version {value} is not supported (expected {CONFIG_FORMAT_VERSION})"
                        ));
                    }
                } else {
                    t.errors.push(format!("line {lineno}: key '{key}' outside of any section"));
                }
                continue;
            };
            let known = KEYS
                .iter()
                .find(|(s, _)| s == sec)
                .is_some_and(|(_, keys)| keys.contains(&key) || (sec == "sampling" && key.starts_with("enthalpy.")));
            if !known {
                if KEYS.iter().any(|(s, _)| s == sec) {
                    t.errors.push(format!("line {lineno}: unknown key '{key}' in [{sec}]"));
                }
                continue;
            }
            let full = format!("{sec}.{key}");
            if let Some(prev) = t.entries.get(&full) {
                t.errors.push(format!("line {lineno}: '{key}' already set on line {}", prev.line));
                continue;
            }
            t.entries.insert(full, Entry { line: lineno, value });
        }
        if !version_seen {
            t.errors.push("missing 'format_version' header".into());
        }
        t
    }

    fn raw(&self, key: &str) -> Option<&Entry> {
        self.entries.get(key)
    }

    fn get<T: std::str::FromStr>(&mut self, key: &str, what: &str) -> Option<T> {
        let e = self.entries.get(key)?;
        match e.value.parse::<T>() {
            Ok(v) => Some(v),
            Err(_) => {
                let msg = format!("line {}: '{}' must be {what}, got '{}'", e.line, short(key), e.value);
                self.errors.push(msg);
                None
            }
        }
    }

    fn f64(&mut self, key: &str) -> Option<f64> {
        let v = self.get::<f64>(key, "a number")?;
        if v.is_finite() {
            Some(v)
        } else {
            self.errors.push(format!("'{}' must be finite, got {v}", short(key)));
            None
        }
    }

    fn u64(&mut self, key: &str) -> Option<u64> {
        self.get::<u64>(key, "a non-negative integer")
    }

    fn bool(&mut self, key: &str) -> Option<bool> {
        let e = self.entries.get(key)?;
        match e.value.as_str() {
            "true" | "yes" | "on" => Some(true),
            "false" | "no" | "off" => Some(false),
            other => {
                let msg = format!("line {}: '{}' must be true or false, got '{other}'", e.line, short(key));
                self.errors.push(msg);
                None
            }
        }
    }

    fn list(&self, key: &str) -> Option<Vec<String>> {
        self.entries
            .get(key)
            .map(|e| e.value.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect())
    }

    fn require(&mut self, key: &str) {
        if !self.entries.contains_key(key) {
            let (sec, k) = key.split_once('.').unwrap_or(("", key));
            self.errors.push(format!("missing required key '{k}' in [{sec}]"));
        }
    }
}

fn short(key: &str) -> &str {
    key.split_once('.').map_or(key, |(_, k)| k)
}

impl SimulationConfig {
    /// Parses and checks everything that does not need the species files.
    pub fn parse(text: &str) -> Result<Self> {
        let (config, errors) = Self::parse_collect(text);
        if errors.is_empty() {
            Ok(config)
        } else {
            Err(Error::Config(errors))
        }
    }

    fn parse_collect(text: &str) -> (Self, Vec<String>) {
        let mut t = Table::read(text);
        let mut c = SimulationConfig::default();
        for key in ["system.species", "system.counts", "system.temperature", "run.dt", "run.production_steps", "run.cutoff"] {
            t.require(key);
        }

        c.species = t.list("system.species").unwrap_or_default().into_iter().map(PathBuf::from).collect();
        if let Some(counts) = t.list("system.counts") {
            for s in counts {
                match s.parse::<usize>() {
                    Ok(n) => c.counts.push(n),
                    Err(_) => t.errors.push(format!("'counts' entry '{s}' is not a non-negative integer")),
                }
            }
        }
        if t.raw("system.species").is_some() && t.raw("system.counts").is_some() && c.species.len() != c.counts.len() {
            t.errors.push(format!("{} species files but {} counts", c.species.len(), c.counts.len()));
        }
        if let Some(v) = t.f64("system.temperature") {
            c.temperature = v;
            if !(v > 0.0) {
                t.errors.push(format!("temperature must be positive, got {v}"));
            }
        }
        match (t.raw("system.density").is_some(), t.raw("system.box_length").is_some()) {
            (true, true) => t.errors.push("set either 'density' or 'box_length', not both".into()),
            (false, false) => t.errors.push("missing required key 'density' (or 'box_length') in [system]".into()),
            (true, false) => {
                if let Some(v) = t.f64("system.density") {
                    if !(v > 0.0) {
                        t.errors.push(format!("density must be positive, got {v}"));
                    }
                    c.size = BoxSize::Density(v);
                }
            }
            (false, true) => {
                if let Some(v) = t.f64("system.box_length") {
                    if !(v > 0.0) {
                        t.errors.push(format!("box_length must be positive, got {v}"));
                    }
                    c.size = BoxSize::Length(v);
                }
            }
        }
        if let Some(v) = t.u64("system.seed") {
            c.seed = v;
        }

        if let Some(v) = t.f64("run.dt") {
            c.dt = v;
        }
        if let Some(v) = t.u64("run.equilibration_steps") {
            c.equilibration_steps = v;
        }
        if let Some(v) = t.u64("run.production_steps") {
            c.production_steps = v;
        }
        if let Some(v) = t.f64("run.cutoff") {
            c.cutoff = v;
        }
        if let Some(e) = t.raw("run.thermostat") {
            match e.value.as_str() {
                "isokinetic" => c.thermostat = true,
                "none" => c.thermostat = false,
                other => {
                    let msg = format!("line {}: thermostat must be 'isokinetic' or 'none', got '{other}'", e.line);
                    t.errors.push(msg);
                }
            }
        }
        if let Some(v) = t.u64("run.thermostat_interval_equilibration") {
            c.thermostat_interval_equilibration = v;
        }
        if let Some(v) = t.u64("run.thermostat_interval_production") {
            c.thermostat_interval_production = v;
        }
        if let Some(v) = t.get::<usize>("run.workers", "a positive integer") {
            c.workers = v;
        }
        if let Some(v) = t.u64("run.checkpoint_interval") {
            c.checkpoint_interval = v;
        }
        if let Some(e) = t.raw("run.output") {
            c.output = PathBuf::from(&e.value);
        }

        let method = t.raw("electrostatics.method").map(|e| (e.line, e.value.clone()));
        let has = |t: &Table, k: &str| t.raw(&format!("electrostatics.{k}")).is_some();
        match method.as_ref().map(|(l, m)| (*l, m.as_str())).unwrap_or((0, "none")) {
            (_, "none") => {
                for k in ["epsilon_rf", "ewald_delta", "ewald_alpha", "ewald_kmax"] {
                    if has(&t, k) {
                        t.errors.push(format!("'{k}' given but electrostatics method is 'none'"));
                    }
                }
            }
            (_, "reaction_field") => {
                for k in ["ewald_delta", "ewald_alpha", "ewald_kmax"] {
                    if has(&t, k) {
                        t.errors.push(format!("'{k}' given but electrostatics method is 'reaction_field'"));
                    }
                }
                t.require("electrostatics.epsilon_rf");
                let eps = t.f64("electrostatics.epsilon_rf").unwrap_or(f64::NAN);
                c.electrostatics = ElectrostaticsConfig::ReactionField { epsilon_rf: eps };
            }
            (_, "ewald") => {
                if has(&t, "epsilon_rf") {
                    t.errors.push("'epsilon_rf' given but electrostatics method is 'ewald'".into());
                }
                let explicit = (has(&t, "ewald_alpha"), has(&t, "ewald_kmax"));
                c.electrostatics = match (has(&t, "ewald_delta"), explicit) {
                    (false, (true, true)) => ElectrostaticsConfig::Ewald(EwaldParameters::Explicit {
                        alpha: t.f64("electrostatics.ewald_alpha").unwrap_or(f64::NAN),
                        kmax: t.get::<u32>("electrostatics.ewald_kmax", "a positive integer").unwrap_or(0),
                    }),
                    (_, (false, false)) => ElectrostaticsConfig::Ewald(EwaldParameters::Accuracy(
                        t.f64("electrostatics.ewald_delta").unwrap_or(1e-5),
                    )),
                    (true, _) => {
                        t.errors.push("give either 'ewald_delta' or 'ewald_alpha' with 'ewald_kmax', not both".into());
                        ElectrostaticsConfig::Ewald(EwaldParameters::Accuracy(1e-5))
                    }
                    (false, _) => {
                        t.errors.push("'ewald_alpha' and 'ewald_kmax' must be given together".into());
                        ElectrostaticsConfig::Ewald(EwaldParameters::Accuracy(1e-5))
                    }
                };
            }
            (line, other) => t.errors.push(format!(
                "line {line}: electrostatics method must be none, reaction_field or ewald, got '{other}'"
            )),
        }

        if let Some(v) = t.u64("sampling.n_ext") {
            c.n_ext = v;
        }
        if let Some(v) = t.get::<usize>("sampling.correlation_length", "a positive integer") {
            c.correlation_length = v;
        }
        for (key, slot) in [
            ("sampling.massieu", &mut c.massieu),
            ("sampling.rdf", &mut c.rdf),
            ("sampling.conductivity", &mut c.conductivity),
            ("sampling.thermal_conductivity", &mut c.thermal_conductivity),
            ("sampling.residence", &mut c.residence),
            ("sampling.self_diffusion", &mut c.self_diffusion),
        ] {
            if let Some(v) = t.bool(key) {
                *slot = v;
            }
        }
        if let Some(v) = t.f64("sampling.rdf_bin_width") {
            c.rdf_bin_width = v;
        }
        if let Some(e) = t.raw("sampling.rdf_r_max") {
            if e.value != "auto" {
                c.rdf_r_max = t.f64("sampling.rdf_r_max");
            }
        }
        if let Some(v) = t.u64("sampling.rdf_stride") {
            c.rdf_stride = v;
        }
        let enthalpy_keys: Vec<String> = t.entries.keys().filter(|k| k.starts_with("sampling.enthalpy.")).cloned().collect();
        for key in enthalpy_keys {
            if let Some(v) = t.f64(&key) {
                c.enthalpies.insert(key["sampling.enthalpy.".len()..].to_string(), v);
            }
        }
        if !c.thermal_conductivity && !c.enthalpies.is_empty() {
            t.errors.push("partial molar enthalpies given but thermal_conductivity is off".into());
        }
        c.residence_solute = t.raw("sampling.residence_solute").map(|e| e.value.clone());
        c.residence_solvent = t.raw("sampling.residence_solvent").map(|e| e.value.clone());
        if let Some(e) = t.raw("sampling.residence_radius") {
            if e.value != "auto" {
                c.residence_radius = t.f64("sampling.residence_radius");
            }
        }
        if let Some(v) = t.f64("sampling.residence_tolerance") {
            c.residence_tolerance = v;
        }
        if c.residence {
            t.require("sampling.residence_solute");
            t.require("sampling.residence_solvent");
        } else {
            for k in ["residence_solute", "residence_solvent", "residence_radius", "residence_tolerance"] {
                if t.raw(&format!("sampling.{k}")).is_some() {
                    t.errors.push(format!("'{k}' given but residence is off"));
                }
            }
        }
        if let Some(v) = t.f64("sampling.plateau_window") {
            c.plateau_window = v;
        }
        if let Some(v) = t.f64("sampling.plateau_tolerance") {
            c.plateau_tolerance = v;
        }
        if !(c.plateau_window > 0.0 && c.plateau_window < 1.0) {
            t.errors.push(format!("plateau_window must lie in (0, 1), got {}", c.plateau_window));
        }

        if matches!(c.electrostatics, ElectrostaticsConfig::Ewald(_)) && c.massieu {
            t.errors
                .push("Massieu derivative sampling is not available together with Ewald summation".into());
        }
        (c, t.errors)
    }

    /// Loads species files relative to `base` and builds composition and plan.
    pub fn resolve(&self, base: &Path) -> Result<ResolvedConfig> {
        let (resolved, errors) = self.resolve_collect(base, Vec::new());
        match resolved {
            Some(r) if errors.is_empty() => Ok(r),
            _ => Err(Error::Config(errors)),
        }
    }

    fn resolve_collect(&self, base: &Path, mut errors: Vec<String>) -> (Option<ResolvedConfig>, Vec<String>) {
        let mut species = Vec::new();
        for path in &self.species {
            let full = base.join(path);
            let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            match std::fs::read_to_string(&full) {
                Ok(text) => match MoleculeSpecies::parse(name, &text) {
                    Ok(s) => species.push(s),
                    Err(e) => errors.push(format!("{}: {e}", full.display())),
                },
                Err(e) => errors.push(format!("species file {}: {e}", full.display())),
            }
        }
        for (i, s) in species.iter().enumerate() {
            if species[..i].iter().any(|o| o.name == s.name) {
                errors.push(format!("species name '{}' appears twice", s.name));
            }
        }
        if species.len() != self.species.len() || self.species.len() != self.counts.len() {
            return (None, errors);
        }
        let names: Vec<&str> = species.iter().map(|s| s.name.as_str()).collect();
        let index_of = |field: &str, name: &Option<String>, errors: &mut Vec<String>| -> usize {
            match name {
                Some(n) => names.iter().position(|s| s == n).unwrap_or_else(|| {
                    errors.push(format!("{field}: unknown species '{n}'"));
                    0
                }),
                None => 0,
            }
        };
        let solute = index_of("residence_solute", &self.residence_solute, &mut errors);
        let solvent = index_of("residence_solvent", &self.residence_solvent, &mut errors);
        for key in self.enthalpies.keys() {
            if !names.contains(&key.as_str()) {
                errors.push(format!("enthalpy.{key}: unknown species"));
            }
        }

        let built = match self.size {
            BoxSize::Density(rho) => SystemComposition::with_density(species, self.counts.clone(), rho, self.temperature),
            BoxSize::Length(l) => SystemComposition::new(species, self.counts.clone(), l, self.temperature),
        };
        let composition = match built {
            Ok(c) => c,
            Err(e) => {
                errors.push(e.to_string());
                return (None, errors);
            }
        };

        let electrostatics = match self.electrostatics {
            ElectrostaticsConfig::None => Electrostatics::Cutoff,
            ElectrostaticsConfig::ReactionField { epsilon_rf } => Electrostatics::ReactionField { epsilon_rf },
            ElectrostaticsConfig::Ewald(EwaldParameters::Explicit { alpha, kmax }) => Electrostatics::Ewald { alpha, kmax },
            ElectrostaticsConfig::Ewald(EwaldParameters::Accuracy(delta)) => {
                match ewald_tune(delta, self.cutoff, composition.box_length) {
                    Ok((alpha, kmax)) => Electrostatics::Ewald { alpha, kmax },
                    Err(e) => {
                        errors.push(e.to_string());
                        Electrostatics::Ewald { alpha: 1.0, kmax: 1 }
                    }
                }
            }
        };

        let thermal = self.thermal_conductivity.then(|| {
            composition
                .species
                .iter()
                .map_while(|s| self.enthalpies.get(&s.name).copied())
                .collect::<Vec<f64>>()
        });
        let plan = SimulationPlan {
            dt: self.dt,
            n_equilibration: self.equilibration_steps,
            n_production: self.production_steps,
            thermostat: self.thermostat.then_some(ThermostatPlan {
                equilibration_interval: self.thermostat_interval_equilibration,
                production_interval: self.thermostat_interval_production,
            }),
            n_ext: self.n_ext,
            cutoff: self.cutoff,
            electrostatics,
            workers: self.workers,
            samplers: SamplerPlan {
                massieu: self.massieu,
                rdf: self.rdf.then_some(RdfPlan {
                    bin_width: self.rdf_bin_width,
                    r_max: self.rdf_r_max,
                    stride: self.rdf_stride,
                }),
                correlation_length: self.correlation_length,
                conductivity: self.conductivity,
                thermal_conductivity: thermal,
                residence: self.residence.then_some(ResidencePlan {
                    solute,
                    solvent,
                    radius: self.residence_radius.map_or(ShellRadius::Auto, ShellRadius::Fixed),
                    tolerance: self.residence_tolerance,
                }),
                self_diffusion: self.self_diffusion,
                plateau: PlateauCheck {
                    window: self.plateau_window,
                    tolerance: self.plateau_tolerance,
                },
            },
        };
        for v in plan.violations(&composition) {
            if !errors.contains(&v) {
                errors.push(v);
            }
        }
        (
            Some(ResolvedConfig {
                config: self.clone(),
                composition,
                plan,
            }),
            errors,
        )
    }
}

/// Parses `text` and resolves species paths against `base`, reporting every
/// violation found.
pub fn parse_config(text: &str, base: &Path) -> Result<ResolvedConfig> {
    let (config, errors) = SimulationConfig::parse_collect(text);
    let (resolved, mut errors) = config.resolve_collect(base, errors);
    let mut seen = std::collections::HashSet::new();
    errors.retain(|e| seen.insert(e.clone()));
    match resolved {
        Some(r) if errors.is_empty() => Ok(r),
        _ => Err(Error::Config(errors)),
    }
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

impl fmt::Display for SimulationConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "format_version = {CONFIG_FORMAT_VERSION}")?;
        writeln!(f, "\n[system]")?;
        let paths: Vec<String> = self.species.iter().map(|p| p.display().to_string()).collect();
        writeln!(f, "species = {}", paths.join(", "))?;
        writeln!(f, "counts = {}", join(&self.counts))?;
        writeln!(f, "temperature = {}", self.temperature)?;
        match self.size {
            BoxSize::Density(v) => writeln!(f, "density = {v}")?,
            BoxSize::Length(v) => writeln!(f, "box_length = {v}")?,
        }
        writeln!(f, "seed = {}", self.seed)?;

        writeln!(f, "\n[run]")?;
        writeln!(f, "dt = {}", self.dt)?;
        writeln!(f, "equilibration_steps = {}", self.equilibration_steps)?;
        writeln!(f, "production_steps = {}", self.production_steps)?;
        writeln!(f, "cutoff = {}", self.cutoff)?;
        writeln!(f, "thermostat = {}", if self.thermostat { "isokinetic" } else { "none" })?;
        writeln!(f, "thermostat_interval_equilibration = {}", self.thermostat_interval_equilibration)?;
        writeln!(f, "thermostat_interval_production = {}", self.thermostat_interval_production)?;
        writeln!(f, "workers = {}", self.workers)?;
        writeln!(f, "checkpoint_interval = {}", self.checkpoint_interval)?;
        writeln!(f, "output = {}", self.output.display())?;

        writeln!(f, "\n[electrostatics]")?;
        match self.electrostatics {
            ElectrostaticsConfig::None => writeln!(f, "method = none")?,
            ElectrostaticsConfig::ReactionField { epsilon_rf } => {
                writeln!(f, "method = reaction_field\nepsilon_rf = {epsilon_rf}")?
            }
            ElectrostaticsConfig::Ewald(EwaldParameters::Accuracy(d)) => writeln!(f, "method = ewald\newald_delta = {d}")?,
            ElectrostaticsConfig::Ewald(EwaldParameters::Explicit { alpha, kmax }) => {
                writeln!(f, "method = ewald\newald_alpha = {alpha}\newald_kmax = {kmax}")?
            }
        }

        writeln!(f, "\n[sampling]")?;
        writeln!(f, "n_ext = {}", self.n_ext)?;
        writeln!(f, "correlation_length = {}", self.correlation_length)?;
        writeln!(f, "massieu = {}", self.massieu)?;
        writeln!(f, "rdf = {}", self.rdf)?;
        writeln!(f, "rdf_bin_width = {}", self.rdf_bin_width)?;
        match self.rdf_r_max {
            Some(v) => writeln!(f, "rdf_r_max = {v}")?,
            None => writeln!(f, "rdf_r_max = auto")?,
        }
        writeln!(f, "rdf_stride = {}", self.rdf_stride)?;
        writeln!(f, "conductivity = {}", self.conductivity)?;
        writeln!(f, "thermal_conductivity = {}", self.thermal_conductivity)?;
        for (name, h) in &self.enthalpies {
            writeln!(f, "enthalpy.{name} = {h}")?;
        }
        writeln!(f, "residence = {}", self.residence)?;
        if self.residence {
            if let Some(s) = &self.residence_solute {
                writeln!(f, "residence_solute = {s}")?;
            }
            if let Some(s) = &self.residence_solvent {
                writeln!(f, "residence_solvent = {s}")?;
            }
            match self.residence_radius {
                Some(v) => writeln!(f, "residence_radius = {v}")?,
                None => writeln!(f, "residence_radius = auto")?,
            }
            writeln!(f, "residence_tolerance = {}", self.residence_tolerance)?;
        }
        writeln!(f, "self_diffusion = {}", self.self_diffusion)?;
        writeln!(f, "plateau_window = {}", self.plateau_window)?;
        writeln!(f, "plateau_tolerance = {}", self.plateau_tolerance)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "format_version = 1\n[system]\nspecies = ar.species\ncounts = 108\ntemperature = 1.5\ndensity = 0.5\n[run]\ndt = 0.002\nproduction_steps = 100\ncutoff = 2.5\n";

    fn dir_with(files: &[(&str, &str)]) -> std::path::PathBuf {
        use std::sync::atomic::{AtomicUsize, Ordering};
        static N: AtomicUsize = AtomicUsize::new(0);
        let d = std::env::temp_dir().join(format!("rigidmd-cfg-{}-{}", std::process::id(), N.fetch_add(1, Ordering::Relaxed)));
        std::fs::create_dir_all(&d).unwrap();
        for (name, text) in files {
            std::fs::write(d.join(name), text).unwrap();
        }
        d
    }

    fn errors(r: Result<ResolvedConfig>) -> Vec<String> {
        match r {
            Err(Error::Config(v)) => v,
            other => panic!("expected config errors, got {other:?}"),
        }
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let d = dir_with(&[("ar.species", "lj 0 0 0 1 1 1\n")]);
        let r = parse_config(MINIMAL, &d).unwrap();
        assert_eq!(r.config.seed, 1);
        assert_eq!(r.config.workers, 1);
        assert_eq!(r.config.n_ext, 1);
        assert!(r.config.thermostat);
        assert_eq!(r.plan.thermostat, Some(ThermostatPlan::default()));
        assert_eq!(r.composition.species[0].name, "ar");
        assert!((r.composition.density() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn effective_config_round_trips() {
        let text = format!(
            "{MINIMAL}[electrostatics]\nmethod = reaction_field\nepsilon_rf = 1e10\n[sampling]\nn_ext = 5\nrdf = yes\nrdf_r_max = 2.7\nthermal_conductivity = true\nenthalpy.ar = -4.25\nresidence = true\nresidence_solute = ar\nresidence_solvent = ar\nresidence_tolerance = 0.02\n"
        );
        let c = SimulationConfig::parse(&text).unwrap();
        let again = SimulationConfig::parse(&c.to_string()).unwrap();
        assert_eq!(again, c);
        assert_eq!(again.to_string(), c.to_string());
    }

    #[test]
    fn all_violations_are_collected() {
        let text = "format_version = 1\n[system]\nspecies = ar.species\ncounts = 10\ntemperature = -1\ndensity = 0.5\ncolour = red\n[run]\ndt = fast\ncutoff = 2.5\n";
        let d = dir_with(&[("ar.species", "lj 0 0 0 1 1 1\n")]);
        let v = errors(parse_config(text, &d));
        assert!(v.iter().any(|m| m.contains("unknown key 'colour'")));
        assert!(v.iter().any(|m| m.contains("'dt' must be a number")));
        assert!(v.iter().any(|m| m.contains("production_steps")));
        assert!(v.iter().any(|m| m.contains("temperature must be positive")));
    }

    #[test]
    fn ewald_with_massieu_names_both() {
        let text = format!("{MINIMAL}[electrostatics]\nmethod = ewald\n[sampling]\nmassieu = true\n");
        let d = dir_with(&[("ar.species", "lj 0 0 0 1 1 1\n")]);
        let v = errors(parse_config(&text, &d));
        assert_eq!(v.len(), 1, "{v:?}");
        assert!(v[0].contains("Massieu") && v[0].contains("Ewald"));
    }

    #[test]
    fn thermal_conductivity_needs_every_enthalpy() {
        let text = "format_version = 1\n[system]\nspecies = a.species, b.species\ncounts = 50, 50\ntemperature = 1\ndensity = 0.5\n[run]\ndt = 0.002\nproduction_steps = 100\ncutoff = 2.5\n[sampling]\nthermal_conductivity = true\nenthalpy.a = 1.0\n";
        let d = dir_with(&[("a.species", "lj 0 0 0 1 1 1\n"), ("b.species", "lj 0 0 0 1 1 1\n")]);
        let v = errors(parse_config(text, &d));
        assert_eq!(v.len(), 1, "{v:?}");
        assert!(v[0].contains("'b'"));
    }

    #[test]
    fn missing_species_file_is_reported() {
        let d = dir_with(&[]);
        let v = errors(parse_config(MINIMAL, &d));
        assert!(v.iter().any(|m| m.contains("ar.species")));
    }

    #[test]
    fn header_and_duplicates() {
        let Err(Error::Config(v)) = SimulationConfig::parse("[system]\nseed = 1\nseed = 2\n") else {
            panic!("expected errors");
        };
        assert!(v.iter().any(|m| m.contains("format_version")));
        assert!(v.iter().any(|m| m.contains("already set")));
    }
}
