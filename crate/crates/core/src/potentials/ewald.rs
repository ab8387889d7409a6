//! Ewald summation for point charges in a cubic box with conducting
//! (tin-foil) boundary conditions.
//!
//! The real-space part runs through the pair table (erfc-screened kernel);
//! this module holds the reciprocal-space sum, the self term and the
//! correction removing screened interactions between charges of the same
//! rigid molecule.

use std::f64::consts::PI;

use nalgebra::Complex;

use crate::error::{Error, Result};
use crate::model::{SiteKind, SystemComposition, SystemState};
use crate::parallel::PairSums;
use crate::Vec3;

use super::{Electrostatics, EnergyBreakdown, PairTable};

const MAX_KMAX: u32 = 64;

#[derive(Clone, Debug, PartialEq)]
struct KVector {
    n: [i32; 3],
    k: Vec3,
    /// `exp(-k^2 / 4 alpha^2) / k^2`
    weight: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EwaldSum {
    pub alpha: f64,
    pub kmax: u32,
    box_length: f64,
    /// Half space of integer vectors with `0 < |n|^2 <= kmax^2`.
    kvectors: Vec<KVector>,
}

/// Long-range Ewald contributions with their molecular forces and torques.
#[derive(Clone, Debug, PartialEq)]
pub struct EwaldLongRange {
    pub reciprocal: f64,
    /// Self term plus intramolecular exclusion.
    pub self_energy: f64,
    pub forces: Vec<Vec3>,
    pub torques: Vec<Vec3>,
}

impl EwaldSum {
    pub fn new(alpha: f64, kmax: u32, box_length: f64) -> Result<Self> {
        if !(alpha > 0.0) || kmax < 1 || kmax > MAX_KMAX {
            return Err(Error::System(format!("invalid Ewald parameters alpha={alpha}, kmax={kmax}")));
        }
        let two_pi_l = 2.0 * PI / box_length;
        let km = kmax as i32;
        let mut kvectors = Vec::new();
        for nx in 0..=km {
            for ny in -km..=km {
                for nz in -km..=km {
                    let half = nx > 0 || (nx == 0 && ny > 0) || (nx == 0 && ny == 0 && nz > 0);
                    let n2 = nx * nx + ny * ny + nz * nz;
                    if !half || n2 > km * km {
                        continue;
                    }
                    let k = Vec3::new(nx as f64, ny as f64, nz as f64) * two_pi_l;
                    let k2 = k.norm_squared();
                    kvectors.push(KVector {
                        n: [nx, ny, nz],
                        k,
                        weight: (-k2 / (4.0 * alpha * alpha)).exp() / k2,
                    });
                }
            }
        }
        let sum = EwaldSum {
            alpha,
            kmax,
            box_length,
            kvectors,
        };
        Ok(sum)
    }

    /// Estimated relative truncation error of the reciprocal sum.
    pub fn reciprocal_error_estimate(&self) -> f64 {
        let x = PI * self.kmax as f64 / (self.alpha * self.box_length);
        (-x * x).exp()
    }

    /// Reciprocal-space energy and per-charge forces.
    pub fn reciprocal(&self, positions: &[Vec3], charges: &[f64]) -> (f64, Vec<Vec3>) {
        let ns = positions.len();
        let km = self.kmax as usize;
        let two_pi_l = 2.0 * PI / self.box_length;

        // exp(i 2 pi n x / L) for n = 0..=kmax along each axis.
        let mut phase = vec![[Complex::new(1.0, 0.0); 3]; ns * (km + 1)];
        for (s, p) in positions.iter().enumerate() {
            for d in 0..3 {
                let step = Complex::from_polar(1.0, two_pi_l * p[d]);
                for n in 1..=km {
                    phase[s * (km + 1) + n][d] = phase[s * (km + 1) + n - 1][d] * step;
                }
            }
        }
        let factor = |s: usize, n: i32, d: usize| {
            let c = phase[s * (km + 1) + n.unsigned_abs() as usize][d];
            if n < 0 {
                c.conj()
            } else {
                c
            }
        };

        let volume = self.box_length.powi(3);
        let mut energy = 0.0;
        let mut forces = vec![Vec3::zeros(); ns];
        let mut terms = vec![Complex::new(0.0, 0.0); ns];
        for kv in &self.kvectors {
            let mut rho = Complex::new(0.0, 0.0);
            for s in 0..ns {
                let e = factor(s, kv.n[0], 0) * factor(s, kv.n[1], 1) * factor(s, kv.n[2], 2);
                terms[s] = e;
                rho += e * charges[s];
            }
            energy += kv.weight * rho.norm_sqr();
            let conj = rho.conj();
            for s in 0..ns {
                let im = (conj * terms[s]).im;
                forces[s] += kv.k * (charges[s] * kv.weight * im);
            }
        }
        // Half-space sums count each +/-k pair once.
        let energy = 4.0 * PI / volume * energy;
        let scale = 8.0 * PI / volume;
        forces.iter_mut().for_each(|f| *f *= scale);
        (energy, forces)
    }

    pub fn self_energy(&self, charges: &[f64]) -> f64 {
        -self.alpha / PI.sqrt() * charges.iter().map(|q| q * q).sum::<f64>()
    }

    /// Removes the screened `erf(alpha r)/r` interaction of charge pairs
    /// belonging to the same molecule. Coincident charges use the limit
    /// `2 alpha / sqrt(pi)`.
    pub fn intramolecular(&self, composition: &SystemComposition) -> f64 {
        let mut total = 0.0;
        for (species, &count) in composition.species.iter().zip(&composition.counts) {
            let charges: Vec<(Vec3, f64)> = species
                .sites
                .iter()
                .filter_map(|s| match s.kind {
                    SiteKind::Charge { q } if q != 0.0 => Some((s.position, q)),
                    _ => None,
                })
                .collect();
            let mut per_molecule = 0.0;
            for (a, (pa, qa)) in charges.iter().enumerate() {
                for (pb, qb) in &charges[a + 1..] {
                    let r = (pa - pb).norm();
                    let screened = if r < 1e-12 {
                        2.0 * self.alpha / PI.sqrt()
                    } else {
                        libm::erf(self.alpha * r) / r
                    };
                    per_molecule -= qa * qb * screened;
                }
            }
            total += per_molecule * count as f64;
        }
        total
    }

    /// Reciprocal, self and intramolecular terms for a molecular state.
    pub fn long_range(
        &self,
        composition: &SystemComposition,
        species_of: &[usize],
        positions: &[Vec3],
        offsets: &[Vec3],
    ) -> EwaldLongRange {
        let mut sites = Vec::new();
        let mut charges = Vec::new();
        let mut owner = Vec::new();
        let mut k = 0;
        for (m, &s) in species_of.iter().enumerate() {
            for site in &composition.species[s].sites {
                if let SiteKind::Charge { q } = site.kind {
                    if q != 0.0 {
                        sites.push(positions[m] + offsets[k]);
                        charges.push(q);
                        owner.push((m, k));
                    }
                }
                k += 1;
            }
        }
        let (reciprocal, site_forces) = self.reciprocal(&sites, &charges);
        let n = positions.len();
        let mut forces = vec![Vec3::zeros(); n];
        let mut torques = vec![Vec3::zeros(); n];
        for (f, &(m, k)) in site_forces.iter().zip(&owner) {
            forces[m] += f;
            torques[m] += offsets[k].cross(f);
        }
        EwaldLongRange {
            reciprocal,
            self_energy: self.self_energy(&charges) + self.intramolecular(composition),
            forces,
            torques,
        }
    }
}

/// Chooses `alpha` so that `erfc(alpha r_c) = delta` and the smallest `kmax`
/// with `exp(-(pi kmax / (alpha L))^2) <= delta`.
pub fn ewald_tune(delta: f64, cutoff: f64, box_length: f64) -> Result<(f64, u32)> {
    if !(delta > 0.0 && delta <= 1e-2) {
        return Err(Error::System(format!("Ewald accuracy must lie in (0, 1e-2], got {delta}")));
    }
    if !(cutoff > 0.0) || !(box_length > 0.0) {
        return Err(Error::System("Ewald tuning needs a positive cutoff and box length".into()));
    }
    // erfc is monotone: bisect x = alpha r_c.
    let (mut lo, mut hi) = (0.0_f64, 30.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if libm::erfc(mid) > delta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let alpha = hi / cutoff;
    let kmax = (alpha * box_length * (-delta.ln()).sqrt() / PI).ceil().max(1.0) as u32;
    if kmax > MAX_KMAX {
        return Err(Error::System(format!(
            "accuracy {delta} is infeasible for cutoff {cutoff}: needs kmax {kmax} > {MAX_KMAX}"
        )));
    }
    Ok((alpha, kmax))
}

/// Serial Ewald evaluation of the electrostatic energy parts, molecular
/// forces and torques of `state`.
pub fn ewald_energy(
    composition: &SystemComposition,
    state: &SystemState,
    cutoff: f64,
    alpha: f64,
    kmax: u32,
) -> Result<(EnergyBreakdown, Vec<Vec3>, Vec<Vec3>)> {
    let neutral_lj: SystemComposition = SystemComposition {
        species: composition
            .species
            .iter()
            .map(|s| {
                let mut s = s.clone();
                for site in &mut s.sites {
                    if matches!(site.kind, SiteKind::LennardJones { .. }) {
                        site.kind = SiteKind::Dummy;
                    }
                }
                s
            })
            .collect(),
        ..composition.clone()
    };
    let table = PairTable::new(&neutral_lj, cutoff, Electrostatics::Ewald { alpha, kmax })?;
    let ewald = EwaldSum::new(alpha, kmax, composition.box_length)?;
    let species_of = composition.species_index();
    let offsets = state.site_offsets(composition, &species_of);
    let site_start = composition_site_starts(composition, &species_of);

    let n = state.len();
    let mut forces = vec![Vec3::zeros(); n];
    let mut torques = vec![Vec3::zeros(); n];
    let mut sums = PairSums::default();
    for i in 0..n {
        for j in i + 1..n {
            let (si, sj) = (species_of[i], species_of[j]);
            let oi = &offsets[site_start[i]..site_start[i] + composition.species[si].sites.len()];
            let oj = &offsets[site_start[j]..site_start[j] + composition.species[sj].sites.len()];
            if let Some(p) = table.molecule_pair(si, sj, &state.positions[i], &state.positions[j], oi, oj, &mut sums) {
                forces[i] += p.force;
                forces[j] -= p.force;
                torques[i] += p.torque_i;
                torques[j] += p.torque_j;
            }
            if sums.overlap {
                return Err(Error::Overlap(i, j));
            }
        }
    }
    let long = ewald.long_range(composition, &species_of, &state.positions, &offsets);
    for m in 0..n {
        forces[m] += long.forces[m];
        torques[m] += long.torques[m];
    }
    let e = EnergyBreakdown {
        elec_real: sums.elec,
        elec_recip: long.reciprocal,
        elec_self: long.self_energy,
        ..Default::default()
    };
    Ok((e, forces, torques))
}

pub(crate) fn composition_site_starts(composition: &SystemComposition, species_of: &[usize]) -> Vec<usize> {
    species_of
        .iter()
        .scan(0, |acc, &s| {
            let start = *acc;
            *acc += composition.species[s].sites.len();
            Some(start)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{MoleculeSpecies, Site};

    #[test]
    fn coincident_neutral_molecule_has_zero_energy() {
        let mol = MoleculeSpecies::build(
            "z",
            vec![
                Site::charge(Vec3::zeros(), 0.7, 1.0),
                Site::charge(Vec3::zeros(), -0.3, 1.0),
                Site::charge(Vec3::zeros(), -0.4, 1.0),
            ],
        )
        .unwrap();
        let comp = SystemComposition::new(vec![mol], vec![1], 6.0, 1.0).unwrap();
        let mut state = SystemState::new(6.0, 1);
        state.positions[0] = Vec3::new(1.0, 2.0, 3.0);
        let (e, f, _) = ewald_energy(&comp, &state, 3.0, 1.1, 6).unwrap();
        let total = e.elec_real + e.elec_recip + e.elec_self;
        assert!(total.abs() < 1e-12, "{total}");
        assert!(f[0].norm() < 1e-12);
    }

    #[test]
    fn tuning_is_monotone() {
        let mut last = 0;
        for &d in &[1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7] {
            let (alpha, kmax) = ewald_tune(d, 5.0, 10.0).unwrap();
            assert!((libm::erfc(alpha * 5.0) - d).abs() < 1e-6 * d);
            assert!(kmax >= last);
            last = kmax;
        }
        assert!(ewald_tune(0.1, 5.0, 10.0).is_err());
        assert!(ewald_tune(1e-12, 0.3, 100.0).is_err());
    }

    #[test]
    fn zero_charges_give_zero_energy() {
        let mol = MoleculeSpecies::build("n", vec![Site::charge(Vec3::zeros(), 0.0, 1.0)]).unwrap();
        let comp = SystemComposition::new(vec![mol], vec![2], 8.0, 1.0).unwrap();
        let mut state = SystemState::new(8.0, 2);
        state.positions[1] = Vec3::new(1.5, 0.2, 0.0);
        let (alpha, kmax) = ewald_tune(1e-4, 4.0, 8.0).unwrap();
        let (e, _, _) = ewald_energy(&comp, &state, 4.0, alpha, kmax).unwrap();
        assert_eq!(e.elec_real + e.elec_recip + e.elec_self, 0.0);
    }

    #[test]
    fn rejects_charged_system() {
        let ion = MoleculeSpecies::build("i", vec![Site::charge(Vec3::zeros(), 1.0, 1.0)]).unwrap();
        let comp = SystemComposition::new(vec![ion], vec![2], 8.0, 1.0).unwrap();
        let state = SystemState::new(8.0, 2);
        assert!(ewald_energy(&comp, &state, 4.0, 1.0, 5).is_err());
    }
}
