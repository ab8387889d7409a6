//! Rigid molecular models, system composition and initial configurations.
//!
//! All quantities are in reduced Lennard-Jones units: lengths in units of a
//! reference `sigma`, energies in units of a reference `epsilon`, masses in
//! units of a reference mass and `k_B = 1`.

use std::fmt;

use nalgebra::{Matrix3, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::potentials::EnergyBreakdown;
use crate::{Quat, Vec3};

/// Relative threshold below which a principal moment of inertia is treated
/// as exactly zero (point particles, linear molecules).
const DEGENERATE_INERTIA: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SiteKind {
    LennardJones { sigma: f64, epsilon: f64 },
    Charge { q: f64 },
    /// Interaction-free sampling position; carries `sigma = epsilon = 0`.
    Dummy,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Site {
    pub kind: SiteKind,
    /// Position in the molecule's body frame.
    pub position: Vec3,
    pub mass: f64,
}

impl Site {
    pub fn lj(position: Vec3, sigma: f64, epsilon: f64, mass: f64) -> Self {
        Site {
            kind: SiteKind::LennardJones { sigma, epsilon },
            position,
            mass,
        }
    }

    pub fn charge(position: Vec3, q: f64, mass: f64) -> Self {
        Site {
            kind: SiteKind::Charge { q },
            position,
            mass,
        }
    }

    pub fn dummy(position: Vec3, mass: f64) -> Self {
        Site {
            kind: SiteKind::Dummy,
            position,
            mass,
        }
    }

    pub fn sigma(&self) -> f64 {
        match self.kind {
            SiteKind::LennardJones { sigma, .. } => sigma,
            _ => 0.0,
        }
    }

    pub fn epsilon(&self) -> f64 {
        match self.kind {
            SiteKind::LennardJones { epsilon, .. } => epsilon,
            _ => 0.0,
        }
    }

    pub fn charge_value(&self) -> f64 {
        match self.kind {
            SiteKind::Charge { q } => q,
            _ => 0.0,
        }
    }

    /// LJ and dummy sites are the positions between which g(r) is sampled.
    pub fn is_rdf_center(&self) -> bool {
        matches!(self.kind, SiteKind::LennardJones { .. } | SiteKind::Dummy)
    }
}

/// A rigid molecule: sites expressed in the principal-axes frame centered on
/// the center of mass.
#[derive(Clone, Debug, PartialEq)]
pub struct MoleculeSpecies {
    pub name: String,
    pub sites: Vec<Site>,
    pub total_mass: f64,
    /// Center of mass of the body-frame sites; the origin after construction.
    pub center_of_mass: Vec3,
    /// Principal moments of inertia, ascending.
    pub inertia: Vec3,
    pub net_charge: f64,
}

impl MoleculeSpecies {
    /// Builds a species from raw site definitions: checks the sites, moves the
    /// origin to the center of mass and rotates onto principal axes.
    pub fn build(name: impl Into<String>, sites: Vec<Site>) -> Result<Self> {
        let name = name.into();
        if sites.is_empty() {
            return Err(Error::Species(format!("{name}: no sites")));
        }
        for (i, site) in sites.iter().enumerate() {
            if !(site.mass >= 0.0) || !site.mass.is_finite() {
                return Err(Error::Species(format!("{name}: site {i} has invalid mass {}", site.mass)));
            }
            if site.position.iter().any(|c| !c.is_finite()) {
                return Err(Error::Species(format!("{name}: site {i} has a non-finite position")));
            }
            match site.kind {
                SiteKind::LennardJones { sigma, epsilon } => {
                    if !(sigma > 0.0) || !(epsilon >= 0.0) {
                        return Err(Error::Species(format!(
                            "{name}: LJ site {i} needs sigma > 0 and epsilon >= 0 (got {sigma}, {epsilon})"
                        )));
                    }
                }
                SiteKind::Charge { q } if !q.is_finite() => {
                    return Err(Error::Species(format!("{name}: site {i} has a non-finite charge")));
                }
                _ => {}
            }
        }

        let total_mass: f64 = sites.iter().map(|s| s.mass).sum();
        if !(total_mass > 0.0) {
            return Err(Error::Species(format!("{name}: total mass must be positive")));
        }
        let com = sites.iter().fold(Vec3::zeros(), |acc, s| acc + s.position * s.mass) / total_mass;

        let mut tensor = Matrix3::zeros();
        for site in &sites {
            let r = site.position - com;
            tensor += (Matrix3::identity() * r.norm_squared() - r * r.transpose()) * site.mass;
        }
        let (moments, axes) = principal_axes(&tensor);

        let scale = moments.max().max(f64::MIN_POSITIVE);
        let inertia = moments.map(|m| if m <= DEGENERATE_INERTIA * scale { 0.0 } else { m });

        let sites: Vec<Site> = sites
            .into_iter()
            .map(|s| Site {
                position: axes.transpose() * (s.position - com),
                ..s
            })
            .collect();
        let net_charge = sites.iter().map(Site::charge_value).sum();

        Ok(MoleculeSpecies {
            name,
            sites,
            total_mass,
            center_of_mass: Vec3::zeros(),
            inertia,
            net_charge,
        })
    }

    /// Number of rotational degrees of freedom (0 point, 2 linear, 3 otherwise).
    pub fn rotational_dof(&self) -> usize {
        self.inertia.iter().filter(|&&m| m > 0.0).count()
    }

    pub fn is_ion(&self) -> bool {
        self.net_charge != 0.0
    }

    /// Largest distance of any site from the center of mass.
    pub fn extent(&self) -> f64 {
        self.sites.iter().map(|s| s.position.norm()).fold(0.0, f64::max)
    }

    pub fn site_label(&self, index: usize) -> String {
        format!("{}{}", self.name, index)
    }

    /// Parses the plain-text model format, one site per line:
    ///
    /// ```text
    /// # comment
    /// lj     x y z sigma epsilon mass
    /// charge x y z q mass
    /// dummy  x y z sigma epsilon mass    (sigma = epsilon = 0 required)
    /// ```
    pub fn parse(name: impl Into<String>, text: &str) -> Result<Self> {
        let name = name.into();
        let mut sites = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::Species(format!("{name}, line {}: {msg}", lineno + 1));
            let mut fields = line.split_whitespace();
            let kind = fields.next().unwrap_or_default().to_ascii_lowercase();
            let values = fields
                .map(|f| f.parse::<f64>().map_err(|_| err(format!("not a number: '{f}'"))))
                .collect::<Result<Vec<f64>>>()?;
            let expect = |n: usize| {
                if values.len() == n {
                    Ok(())
                } else {
                    Err(err(format!("'{kind}' expects {n} numbers, found {}", values.len())))
                }
            };
            let position = |v: &[f64]| Vec3::new(v[0], v[1], v[2]);
            let site = match kind.as_str() {
                "lj" => {
                    expect(6)?;
                    Site::lj(position(&values), values[3], values[4], values[5])
                }
                "charge" => {
                    expect(5)?;
                    Site::charge(position(&values), values[3], values[4])
                }
                "dummy" => {
                    expect(6)?;
                    if values[3] != 0.0 || values[4] != 0.0 {
                        return Err(err("dummy sites must have sigma = epsilon = 0".into()));
                    }
                    Site::dummy(position(&values), values[5])
                }
                other => return Err(err(format!("unknown site kind '{other}'"))),
            };
            sites.push(site);
        }
        MoleculeSpecies::build(name, sites)
    }
}

impl fmt::Display for MoleculeSpecies {
    /// Writes the species back in the model-file format (body frame).
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# {} (principal-axes body frame)", self.name)?;
        for s in &self.sites {
            let p = s.position;
            match s.kind {
                SiteKind::LennardJones { sigma, epsilon } => {
                    writeln!(f, "lj {:?} {:?} {:?} {sigma:?} {epsilon:?} {:?}", p.x, p.y, p.z, s.mass)?
                }
                SiteKind::Charge { q } => writeln!(f, "charge {:?} {:?} {:?} {q:?} {:?}", p.x, p.y, p.z, s.mass)?,
                SiteKind::Dummy => writeln!(f, "dummy {:?} {:?} {:?} 0 0 {:?}", p.x, p.y, p.z, s.mass)?,
            }
        }
        Ok(())
    }
}

/// Eigen-decomposition of the inertia tensor with a canonical ordering
/// (ascending moments) and a proper rotation as eigenvector matrix.
fn principal_axes(tensor: &Matrix3<f64>) -> (Vec3, Matrix3<f64>) {
    let trace = tensor.trace().abs().max(f64::MIN_POSITIVE);
    let off_diagonal = tensor[(0, 1)].abs() + tensor[(0, 2)].abs() + tensor[(1, 2)].abs();

    let (values, vectors) = if off_diagonal <= 1e-14 * trace {
        // Already principal: keep the axes, only order them.
        (tensor.diagonal(), Matrix3::identity())
    } else {
        let eig = SymmetricEigen::new(*tensor);
        (eig.eigenvalues, eig.eigenvectors)
    };

    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));

    let mut axes = Matrix3::zeros();
    for (col, &idx) in order.iter().enumerate() {
        let mut v = vectors.column(idx).into_owned();
        let dominant = v.iter().fold(0.0_f64, |acc, &c| if c.abs() > acc.abs() { c } else { acc });
        if dominant < 0.0 {
            v = -v;
        }
        axes.set_column(col, &v);
    }
    if axes.determinant() < 0.0 {
        let flipped = -axes.column(2).into_owned();
        axes.set_column(2, &flipped);
    }
    let moments = Vec3::new(values[order[0]], values[order[1]], values[order[2]]);
    (moments, axes)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SystemComposition {
    pub species: Vec<MoleculeSpecies>,
    pub counts: Vec<usize>,
    pub box_length: f64,
    pub temperature: f64,
}

impl SystemComposition {
    pub fn new(species: Vec<MoleculeSpecies>, counts: Vec<usize>, box_length: f64, temperature: f64) -> Result<Self> {
        if species.len() != counts.len() {
            return Err(Error::System("species and counts differ in length".into()));
        }
        if counts.iter().sum::<usize>() == 0 {
            return Err(Error::System("system holds no molecules".into()));
        }
        if !(box_length > 0.0) || !box_length.is_finite() {
            return Err(Error::System(format!("box length must be positive, got {box_length}")));
        }
        if !(temperature > 0.0) || !temperature.is_finite() {
            return Err(Error::System(format!("temperature must be positive, got {temperature}")));
        }
        Ok(SystemComposition {
            species,
            counts,
            box_length,
            temperature,
        })
    }

    /// Composition at number density `density` (molecules per volume).
    pub fn with_density(species: Vec<MoleculeSpecies>, counts: Vec<usize>, density: f64, temperature: f64) -> Result<Self> {
        if !(density > 0.0) {
            return Err(Error::System(format!("density must be positive, got {density}")));
        }
        let n: usize = counts.iter().sum();
        SystemComposition::new(species, counts, (n as f64 / density).cbrt(), temperature)
    }

    pub fn molecule_count(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn volume(&self) -> f64 {
        self.box_length.powi(3)
    }

    pub fn density(&self) -> f64 {
        self.molecule_count() as f64 / self.volume()
    }

    /// Species index of every molecule; molecules are stored species by species.
    pub fn species_index(&self) -> Vec<usize> {
        self.counts
            .iter()
            .enumerate()
            .flat_map(|(s, &n)| std::iter::repeat(s).take(n))
            .collect()
    }

    /// Index of the first molecule of each species.
    pub fn species_offsets(&self) -> Vec<usize> {
        self.counts
            .iter()
            .scan(0, |acc, &n| {
                let start = *acc;
                *acc += n;
                Some(start)
            })
            .collect()
    }

    pub fn total_charge(&self) -> f64 {
        self.species
            .iter()
            .zip(&self.counts)
            .map(|(s, &n)| s.net_charge * n as f64)
            .sum()
    }

    pub fn translational_dof(&self) -> usize {
        let n = self.molecule_count();
        if n > 1 {
            3 * n - 3
        } else {
            0
        }
    }

    pub fn rotational_dof(&self) -> usize {
        self.species.iter().zip(&self.counts).map(|(s, &n)| s.rotational_dof() * n).sum()
    }
}

/// Dynamic state of every molecule plus the cached results of the last force
/// evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemState {
    pub box_length: f64,
    pub positions: Vec<Vec3>,
    pub orientations: Vec<Quat>,
    pub velocities: Vec<Vec3>,
    /// Body-frame angular velocities.
    pub angular_velocities: Vec<Vec3>,
    pub forces: Vec<Vec3>,
    /// Space-frame torques.
    pub torques: Vec<Vec3>,
    pub energy: EnergyBreakdown,
    /// Molecular virial `sum R_ij . F_ij` over interacting pairs.
    pub virial: f64,
}

impl SystemState {
    pub fn new(box_length: f64, n: usize) -> Self {
        SystemState {
            box_length,
            positions: vec![Vec3::zeros(); n],
            orientations: vec![Quat::identity(); n],
            velocities: vec![Vec3::zeros(); n],
            angular_velocities: vec![Vec3::zeros(); n],
            forces: vec![Vec3::zeros(); n],
            torques: vec![Vec3::zeros(); n],
            energy: EnergyBreakdown::default(),
            virial: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn volume(&self) -> f64 {
        self.box_length.powi(3)
    }

    /// Space-frame site offsets from each molecule's center, flattened in
    /// molecule order.
    pub fn site_offsets(&self, composition: &SystemComposition, species_of: &[usize]) -> Vec<Vec3> {
        let mut out = Vec::new();
        for (m, &s) in species_of.iter().enumerate() {
            let rot = self.orientations[m];
            out.extend(composition.species[s].sites.iter().map(|site| rot * site.position));
        }
        out
    }

    pub fn wrap_positions(&mut self) {
        let l = self.box_length;
        for p in &mut self.positions {
            for c in p.iter_mut() {
                *c -= l * (*c / l).floor();
                if *c >= l {
                    *c -= l;
                }
            }
        }
    }

    pub fn translational_kinetic(&self, masses: &[f64]) -> f64 {
        self.velocities
            .iter()
            .zip(masses)
            .map(|(v, &m)| 0.5 * m * v.norm_squared())
            .sum()
    }

    pub fn rotational_kinetic(&self, inertia: &[Vec3]) -> f64 {
        self.angular_velocities
            .iter()
            .zip(inertia)
            .map(|(w, i)| 0.5 * (i.x * w.x * w.x + i.y * w.y * w.y + i.z * w.z * w.z))
            .sum()
    }

    pub fn total_momentum(&self, masses: &[f64]) -> Vec3 {
        self.velocities
            .iter()
            .zip(masses)
            .fold(Vec3::zeros(), |acc, (v, &m)| acc + v * m)
    }
}

/// Per-molecule masses and principal moments, in molecule order.
pub fn molecule_masses(composition: &SystemComposition) -> (Vec<f64>, Vec<Vec3>) {
    composition
        .species_index()
        .into_iter()
        .map(|s| (composition.species[s].total_mass, composition.species[s].inertia))
        .unzip()
}

/// Places molecules on an FCC lattice with random orientations and
/// Maxwell-Boltzmann velocities rescaled exactly to the composition
/// temperature, with zero total momentum.
pub fn init_lattice(composition: &SystemComposition, seed: u64) -> Result<SystemState> {
    let n = composition.molecule_count();
    let l = composition.box_length;
    let cells = (1..).find(|&m: &usize| 4 * m * m * m >= n).unwrap_or(1);
    let a = l / cells as f64;
    let nearest = a / 2f64.sqrt();

    let max_extent = composition.species.iter().map(MoleculeSpecies::extent).fold(0.0, f64::max);
    let max_sigma = composition
        .species
        .iter()
        .flat_map(|s| s.sites.iter().map(Site::sigma))
        .fold(0.0, f64::max);
    if nearest < 2.0 * max_extent || nearest < 0.5 * max_sigma {
        return Err(Error::System(format!(
            "{n} molecules exceed the FCC lattice capacity of a box of length {l} \
             (neighbor spacing {nearest:.4} too small)"
        )));
    }

    let basis = [
        Vec3::new(0.0, 0.0, 0.0),
        Vec3::new(0.0, 0.5, 0.5),
        Vec3::new(0.5, 0.0, 0.5),
        Vec3::new(0.5, 0.5, 0.0),
    ];
    let mut lattice = Vec::with_capacity(n);
    'fill: for ix in 0..cells {
        for iy in 0..cells {
            for iz in 0..cells {
                for b in &basis {
                    if lattice.len() == n {
                        break 'fill;
                    }
                    let cell = Vec3::new(ix as f64, iy as f64, iz as f64);
                    lattice.push((cell + b) * a);
                }
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = SystemState::new(l, n);
    state.positions = lattice;
    let (masses, inertia) = molecule_masses(composition);
    let t = composition.temperature;

    for m in 0..n {
        let mut g = || rng.sample::<f64, _>(StandardNormal);
        let q = nalgebra::Quaternion::new(g(), g(), g(), g());
        state.orientations[m] = Quat::from_quaternion(q);
        let sd = (t / masses[m]).sqrt();
        state.velocities[m] = Vec3::new(g() * sd, g() * sd, g() * sd);
        let mut w = Vec3::zeros();
        for k in 0..3 {
            if inertia[m][k] > 0.0 {
                w[k] = g() * (t / inertia[m][k]).sqrt();
            }
        }
        state.angular_velocities[m] = w;
    }

    let total_mass: f64 = masses.iter().sum();
    let drift = state.total_momentum(&masses) / total_mass;
    for v in &mut state.velocities {
        *v -= drift;
    }

    let dof_t = composition.translational_dof();
    let kin_t = state.translational_kinetic(&masses);
    if dof_t > 0 && kin_t > 0.0 {
        let scale = (0.5 * dof_t as f64 * t / kin_t).sqrt();
        state.velocities.iter_mut().for_each(|v| *v *= scale);
    }
    let dof_r = composition.rotational_dof();
    let kin_r = state.rotational_kinetic(&inertia);
    if dof_r > 0 && kin_r > 0.0 {
        let scale = (0.5 * dof_r as f64 * t / kin_r).sqrt();
        state.angular_velocities.iter_mut().for_each(|w| *w *= scale);
    }
    Ok(state)
}
