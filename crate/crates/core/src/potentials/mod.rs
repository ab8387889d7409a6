//! Pair interactions, analytic volume derivatives, tail corrections, reaction
//! field and Ewald summation.

mod coulomb;
mod ewald;
mod lj;
mod lrc;

pub use coulomb::{coulomb_pair, ReactionField};
pub use ewald::{ewald_energy, ewald_tune, EwaldLongRange, EwaldSum};
pub use lj::{lj_energy, lj_pair};
pub use lrc::{lj_lrc, lj_lrc_at, lj_pressure_tail, LongRangeCorrection};

pub(crate) use ewald::composition_site_starts as site_starts;

use crate::error::{Error, Result};
use crate::model::{SiteKind, SystemComposition, SystemState};
use crate::parallel::{parallel_evaluate, PairSums};
use crate::Vec3;

/// Radial terms of a pair potential at one distance.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PairTerms {
    pub energy: f64,
    /// `-u'(r)/r`; the force on site `a` is `force_over_r2 * (r_a - r_b)`.
    pub force_over_r2: f64,
    /// `r u'(r)`
    pub r_du: f64,
    /// `r^2 u''(r)`
    pub r2_d2u: f64,
}

impl PairTerms {
    /// `r^2 u'' - 2 r u'`, the point-particle second volume-derivative kernel.
    pub fn volume_curvature(&self) -> f64 {
        self.r2_d2u - 2.0 * self.r_du
    }
}

/// Resolved electrostatics treatment for point charges.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Electrostatics {
    /// Bare Coulomb truncated at the site-site cutoff.
    Cutoff,
    ReactionField { epsilon_rf: f64 },
    Ewald { alpha: f64, kmax: u32 },
}

/// Energies and volume derivatives of one configuration. Parts belonging to
/// an inactive method stay exactly zero.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EnergyBreakdown {
    pub lj: f64,
    /// Bare Coulomb, the `1/r` part under reaction field, or the Ewald
    /// real-space sum.
    pub elec_real: f64,
    pub elec_recip: f64,
    /// Ewald self term plus the intramolecular exclusion correction.
    pub elec_self: f64,
    pub reaction_field: f64,
    pub lrc: f64,
    /// Sum of `u_LJ(r_c)` over site pairs inside the cutoff; the dynamics
    /// conserve `K + total - lrc - lj_shift`.
    pub lj_shift: f64,
    pub du_dv: f64,
    pub du_dv_lrc: f64,
    pub d2u_dv2: f64,
    pub d2u_dv2_lrc: f64,
}

impl EnergyBreakdown {
    pub fn total(&self) -> f64 {
        self.lj + self.elec_real + self.elec_recip + self.elec_self + self.reaction_field + self.lrc
    }

    /// Potential energy whose gradient drives the dynamics.
    pub fn dynamics_energy(&self) -> f64 {
        self.total() - self.lrc - self.lj_shift
    }

    pub fn total_du_dv(&self) -> f64 {
        self.du_dv + self.du_dv_lrc
    }

    pub fn total_d2u_dv2(&self) -> f64 {
        self.d2u_dv2 + self.d2u_dv2_lrc
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum SitePairKind {
    Lj { sigma2: f64, eps4: f64, shift: f64 },
    Charge { qq: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct SitePair {
    pub a: usize,
    pub b: usize,
    pub kind: SitePairKind,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum ChargeKernel {
    Cutoff,
    ReactionField(ReactionField),
    Ewald { alpha: f64 },
}

/// Force and torques exchanged by one molecule pair.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MoleculePairForce {
    /// Force on the first molecule; the second receives the opposite.
    pub force: Vec3,
    pub torque_i: Vec3,
    pub torque_j: Vec3,
    /// Minimum-image center separation `R_j - R_i`.
    pub separation: Vec3,
    pub energy: f64,
}

/// Interacting site pairs per species pair with combined parameters
/// (Lorentz-Berthelot), site-site cutoff.
#[derive(Clone, Debug, PartialEq)]
pub struct PairTable {
    pub cutoff: f64,
    cutoff2: f64,
    box_length: f64,
    n_species: usize,
    site_pairs: Vec<Vec<SitePair>>,
    reach: Vec<f64>,
    kernel: ChargeKernel,
    pub volume_derivatives: bool,
}

impl PairTable {
    pub fn new(composition: &SystemComposition, cutoff: f64, electrostatics: Electrostatics) -> Result<Self> {
        let l = composition.box_length;
        if !(cutoff > 0.0) {
            return Err(Error::System(format!("cutoff must be positive, got {cutoff}")));
        }
        if cutoff > 0.5 * l {
            return Err(Error::System(format!("cutoff {cutoff} exceeds half the box length {}", 0.5 * l)));
        }
        let kernel = match electrostatics {
            Electrostatics::Cutoff => ChargeKernel::Cutoff,
            Electrostatics::ReactionField { epsilon_rf } => {
                if let Some(s) = composition.species.iter().find(|s| s.net_charge.abs() > 1e-12) {
                    return Err(Error::System(format!(
                        "reaction field requires neutral molecules; species '{}' carries charge {}",
                        s.name, s.net_charge
                    )));
                }
                ChargeKernel::ReactionField(ReactionField::new(epsilon_rf, cutoff)?)
            }
            Electrostatics::Ewald { alpha, kmax } => {
                let q = composition.total_charge();
                if q.abs() > 1e-10 {
                    return Err(Error::System(format!("Ewald summation requires a neutral system, net charge {q}")));
                }
                if !(alpha > 0.0) || kmax < 1 {
                    return Err(Error::System(format!("invalid Ewald parameters alpha={alpha}, kmax={kmax}")));
                }
                ChargeKernel::Ewald { alpha }
            }
        };

        let n = composition.species.len();
        let mut site_pairs = vec![Vec::new(); n * n];
        for (i, si) in composition.species.iter().enumerate() {
            for (j, sj) in composition.species.iter().enumerate() {
                let list = &mut site_pairs[i * n + j];
                for (a, x) in si.sites.iter().enumerate() {
                    for (b, y) in sj.sites.iter().enumerate() {
                        match (x.kind, y.kind) {
                            (
                                SiteKind::LennardJones { sigma: s1, epsilon: e1 },
                                SiteKind::LennardJones { sigma: s2, epsilon: e2 },
                            ) => {
                                let sigma = 0.5 * (s1 + s2);
                                let epsilon = (e1 * e2).sqrt();
                                if epsilon > 0.0 {
                                    list.push(SitePair {
                                        a,
                                        b,
                                        kind: SitePairKind::Lj {
                                            sigma2: sigma * sigma,
                                            eps4: 4.0 * epsilon,
                                            shift: lj_energy(cutoff, sigma, epsilon),
                                        },
                                    });
                                }
                            }
                            (SiteKind::Charge { q: q1 }, SiteKind::Charge { q: q2 }) if q1 * q2 != 0.0 => {
                                list.push(SitePair {
                                    a,
                                    b,
                                    kind: SitePairKind::Charge { qq: q1 * q2 },
                                });
                            }
                            _ => {}
                        }
                    }
                }
            }
        }

        Ok(PairTable {
            cutoff,
            cutoff2: cutoff * cutoff,
            box_length: l,
            n_species: n,
            site_pairs,
            reach: composition.species.iter().map(|s| s.extent()).collect(),
            volume_derivatives: !matches!(kernel, ChargeKernel::Ewald { .. }),
            kernel,
        })
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    pub fn is_ewald(&self) -> bool {
        matches!(self.kernel, ChargeKernel::Ewald { .. })
    }

    /// Evaluates all site pairs of molecules `i` (species `si`) and `j`
    /// (species `sj`), accumulating energies and volume-derivative sums.
    /// Returns `None` when no site pair lies inside the cutoff.
    #[inline]
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn molecule_pair(
        &self,
        si: usize,
        sj: usize,
        ri: &Vec3,
        rj: &Vec3,
        off_i: &[Vec3],
        off_j: &[Vec3],
        sums: &mut PairSums,
    ) -> Option<MoleculePairForce> {
        let l = self.box_length;
        let mut sep = rj - ri;
        for c in sep.iter_mut() {
            *c -= l * (*c / l).round();
        }
        let reach = self.cutoff + self.reach[si] + self.reach[sj];
        let com2 = sep.norm_squared();
        if com2 > reach * reach {
            return None;
        }

        let mut out = MoleculePairForce {
            separation: sep,
            ..Default::default()
        };
        let mut any = false;
        for sp in &self.site_pairs[si * self.n_species + sj] {
            let s = sep + off_j[sp.b] - off_i[sp.a];
            let r2 = s.norm_squared();
            if r2 >= self.cutoff2 {
                continue;
            }
            if r2 == 0.0 {
                sums.overlap = true;
                continue;
            }
            let t = match sp.kind {
                SitePairKind::Lj { sigma2, eps4, shift } => {
                    let t = lj::lj_terms(r2, sigma2, eps4);
                    sums.lj += t.energy;
                    sums.lj_shift += shift;
                    t
                }
                SitePairKind::Charge { qq } => match self.kernel {
                    ChargeKernel::Cutoff => {
                        let t = coulomb::coulomb_terms(r2, qq);
                        sums.elec += t.energy;
                        t
                    }
                    ChargeKernel::ReactionField(rf) => {
                        let (t, field) = rf.terms(r2, qq);
                        sums.elec += t.energy - field;
                        sums.reaction_field += field;
                        t
                    }
                    ChargeKernel::Ewald { alpha } => {
                        let t = coulomb::ewald_real_terms(r2, qq, alpha);
                        sums.elec += t.energy;
                        t
                    }
                },
            };
            out.energy += t.energy;
            let f = -t.force_over_r2 * s;
            out.force += f;
            out.torque_i += off_i[sp.a].cross(&f);
            out.torque_j -= off_j[sp.b].cross(&f);
            if self.volume_derivatives {
                // Site separation under scaling of the centers: s(l) = l R + d.
                let x = s.dot(&sep) / r2;
                let y = com2 / r2;
                sums.d_lambda += t.r_du * x;
                sums.d2_lambda += t.r2_d2u * x * x + t.r_du * (y - x * x);
            }
            any = true;
        }
        if !any {
            return None;
        }
        sums.virial -= sep.dot(&out.force);
        Some(out)
    }
}

/// Complete force field: pair table, optional Ewald long-range part and the
/// LJ tail correction.
#[derive(Clone, Debug)]
pub struct ForceField {
    pub table: PairTable,
    pub ewald: Option<EwaldSum>,
    pub lrc: LongRangeCorrection,
    pub species_of: Vec<usize>,
}

impl ForceField {
    pub fn new(composition: &SystemComposition, cutoff: f64, electrostatics: Electrostatics) -> Result<Self> {
        let table = PairTable::new(composition, cutoff, electrostatics)?;
        let ewald = match electrostatics {
            Electrostatics::Ewald { alpha, kmax } => Some(EwaldSum::new(alpha, kmax, composition.box_length)?),
            _ => None,
        };
        Ok(ForceField {
            table,
            ewald,
            lrc: lj_lrc(composition, cutoff)?,
            species_of: composition.species_index(),
        })
    }

    /// Recomputes forces, torques, energies, virial and volume derivatives of
    /// `state` using `workers` threads for the pair loop.
    pub fn evaluate(&self, composition: &SystemComposition, state: &mut SystemState, workers: usize) -> Result<()> {
        let offsets = state.site_offsets(composition, &self.species_of);
        let result = parallel_evaluate(&self.table, composition, &self.species_of, state, &offsets, workers);
        if let Some((i, j)) = result.overlap {
            return Err(Error::Overlap(i, j));
        }
        let sums = result.sums;
        let v = state.volume();
        let mut e = EnergyBreakdown {
            lj: sums.lj,
            elec_real: sums.elec,
            reaction_field: sums.reaction_field,
            lj_shift: sums.lj_shift,
            lrc: self.lrc.energy,
            ..Default::default()
        };
        if self.table.volume_derivatives {
            e.du_dv = sums.d_lambda / (3.0 * v);
            e.d2u_dv2 = (sums.d2_lambda - 2.0 * sums.d_lambda) / (9.0 * v * v);
            e.du_dv_lrc = self.lrc.du_dv;
            e.d2u_dv2_lrc = self.lrc.d2u_dv2;
        }
        state.forces = result.forces;
        state.torques = result.torques;
        state.virial = sums.virial;

        if let Some(ewald) = &self.ewald {
            let long = ewald.long_range(composition, &self.species_of, &state.positions, &offsets);
            e.elec_recip = long.reciprocal;
            e.elec_self = long.self_energy;
            for (m, (f, t)) in long.forces.iter().zip(&long.torques).enumerate() {
                state.forces[m] += f;
                state.torques[m] += t;
            }
        }
        state.energy = e;
        Ok(())
    }
}
