//! Microscopic fluxes sampled for Green-Kubo integrals.
//!
//! The heat flux of rigid molecules follows the Evans convention:
//!
//! ```text
//! J_q = sum_k e_k v_k + 1/2 sum_{k != l} r_kl (F_kl . v_k + G_kl . w_k) - sum_i h_i sum_{k in i} v_k
//! e_k = 1/2 m v_k^2 + 1/2 w_k^T I w_k + 1/2 sum_l u_kl
//! ```
//!
//! with `r_kl = R_k - R_l` (minimum image), `F_kl` and `G_kl` the force and
//! torque (about the center of `k`) exerted by `l` on `k`, and `w_k` the
//! space-frame angular velocity.

use crate::error::{Error, Result};
use crate::model::{SystemComposition, SystemState};
use crate::parallel::PairSums;
use crate::potentials::PairTable;
use crate::Vec3;

/// `j_e = sum_k q_k v_k` over molecules with a net charge.
pub fn electric_current(composition: &SystemComposition, state: &SystemState) -> Vec3 {
    let mut j = Vec3::zeros();
    for (m, s) in composition.species_index().into_iter().enumerate() {
        let q = composition.species[s].net_charge;
        if composition.species[s].is_ion() {
            j += state.velocities[m] * q;
        }
    }
    j
}

/// Energy-transport part of the heat flux and the center-of-mass velocity
/// sum of each species.
fn heat_flux_parts(composition: &SystemComposition, table: &PairTable, state: &SystemState) -> Result<(Vec3, Vec<Vec3>)> {
    if table.is_ewald() {
        return Err(Error::System("the heat flux is not available with Ewald summation".into()));
    }
    let species_of = composition.species_index();
    let offsets = state.site_offsets(composition, &species_of);
    let n = state.len();
    let omega: Vec<Vec3> = (0..n).map(|m| state.orientations[m] * state.angular_velocities[m]).collect();

    let mut j = Vec3::zeros();
    let mut velocity_sums = vec![Vec3::zeros(); composition.species.len()];
    for m in 0..n {
        let sp = &composition.species[species_of[m]];
        let v = state.velocities[m];
        let w = state.angular_velocities[m];
        let i = sp.inertia;
        let e = 0.5 * sp.total_mass * v.norm_squared() + 0.5 * (i.x * w.x * w.x + i.y * w.y * w.y + i.z * w.z * w.z);
        j += v * e;
        velocity_sums[species_of[m]] += v;
    }

    let starts = crate::potentials::site_starts(composition, &species_of);
    let mut scratch = PairSums::default();
    for a in 0..n {
        for b in a + 1..n {
            let (sa, sb) = (species_of[a], species_of[b]);
            let oa = &offsets[starts[a]..starts[a] + composition.species[sa].sites.len()];
            let ob = &offsets[starts[b]..starts[b] + composition.species[sb].sites.len()];
            let Some(p) = table.molecule_pair(sa, sb, &state.positions[a], &state.positions[b], oa, ob, &mut scratch)
            else {
                continue;
            };
            let (va, vb) = (state.velocities[a], state.velocities[b]);
            // r_ab = R_a - R_b; force and torque on a from b; torque on b from a.
            let r_ab = -p.separation;
            let work = p.force.dot(&(va + vb)) + p.torque_i.dot(&omega[a]) - p.torque_j.dot(&omega[b]);
            j += (va + vb) * (0.5 * p.energy) + r_ab * (0.5 * work);
        }
    }
    Ok((j, velocity_sums))
}

/// Mixture heat flux with partial molar enthalpies `h[i]` per species.
pub fn heat_flux(
    composition: &SystemComposition,
    table: &PairTable,
    state: &SystemState,
    enthalpies: &[f64],
) -> Result<Vec3> {
    if let Some(missing) = composition.species.get(enthalpies.len()) {
        return Err(Error::System(format!(
            "partial molar enthalpy missing for component '{}'",
            missing.name
        )));
    }
    let (mut j, sums) = heat_flux_parts(composition, table, state)?;
    for (h, v) in enthalpies.iter().zip(&sums) {
        j -= v * *h;
    }
    Ok(j)
}

/// Single-component heat flux `sum_k (e_k - h) v_k + interaction transport`.
pub fn heat_flux_pure(composition: &SystemComposition, table: &PairTable, state: &SystemState, enthalpy: f64) -> Result<Vec3> {
    if composition.species.len() != 1 {
        return Err(Error::System("pure-component heat flux needs exactly one species".into()));
    }
    let (j, _) = heat_flux_parts(composition, table, state)?;
    let mut total = Vec3::zeros();
    for v in &state.velocities {
        total += v;
    }
    Ok(j - total * enthalpy)
}

/// Center-of-mass velocities of all molecules of `species`, concatenated.
pub fn species_velocities(composition: &SystemComposition, state: &SystemState, species: usize) -> Vec<f64> {
    composition
        .species_index()
        .into_iter()
        .enumerate()
        .filter(|&(_, s)| s == species)
        .flat_map(|(m, _)| state.velocities[m].iter().copied().collect::<Vec<_>>())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{MoleculeSpecies, Site};
    use crate::potentials::Electrostatics;

    fn ion(name: &str, q: f64) -> MoleculeSpecies {
        MoleculeSpecies::build(name, vec![Site::charge(Vec3::zeros(), q, 1.0)]).unwrap()
    }

    #[test]
    fn current_of_simple_ion_sets() {
        let comp = SystemComposition::new(vec![ion("Na", 1.0), ion("Cl", -1.0)], vec![1, 1], 10.0, 1.0).unwrap();
        let mut st = SystemState::new(10.0, 2);
        st.velocities[0] = Vec3::new(1.0, 2.0, 3.0);
        assert_eq!(electric_current(&comp, &st), Vec3::new(1.0, 2.0, 3.0));
        st.velocities[1] = Vec3::new(1.0, 2.0, 3.0);
        assert_eq!(electric_current(&comp, &st), Vec3::zeros());

        let neutral = MoleculeSpecies::build("A", vec![Site::lj(Vec3::zeros(), 1.0, 1.0, 1.0)]).unwrap();
        let comp = SystemComposition::new(vec![neutral], vec![2], 10.0, 1.0).unwrap();
        assert_eq!(electric_current(&comp, &st), Vec3::zeros());
    }

    #[test]
    fn resting_molecule_has_no_heat_flux() {
        let s = MoleculeSpecies::build("A", vec![Site::lj(Vec3::zeros(), 1.0, 1.0, 1.0)]).unwrap();
        let comp = SystemComposition::new(vec![s], vec![1], 10.0, 1.0).unwrap();
        let table = PairTable::new(&comp, 3.0, Electrostatics::Cutoff).unwrap();
        let st = SystemState::new(10.0, 1);
        assert_eq!(heat_flux(&comp, &table, &st, &[2.5]).unwrap(), Vec3::zeros());
        assert!(heat_flux(&comp, &table, &st, &[]).is_err());
    }
}
