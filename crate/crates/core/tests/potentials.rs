mod common;

use std::f64::consts::PI;

use common::*;
use proptest::prelude::*;
use rigidmd::model::{MoleculeSpecies, Site, SystemComposition, SystemState};
use rigidmd::potentials::{ewald_energy, ewald_tune, ForceField};
use rigidmd::{Electrostatics, Vec3};

fn evaluated(ff: &ForceField, comp: &SystemComposition, state: &SystemState, workers: usize) -> SystemState {
    let mut s = state.clone();
    ff.evaluate(comp, &mut s, workers).unwrap();
    s
}

fn mixture(method: &str) -> (SystemComposition, Electrostatics) {
    match method {
        "lj" => (
            SystemComposition::new(
                vec![dumbbell("D", 0.5, 0.0), lj_atom("S", 1.2, 0.8, 1.5), bent_triatomic("T")],
                vec![8, 6, 6],
                7.0,
                1.0,
            )
            .unwrap(),
            Electrostatics::Cutoff,
        ),
        "rf" => (
            SystemComposition::new(vec![dumbbell("P", 0.5, 0.6), lj_atom("S", 1.0, 1.0, 1.0)], vec![14, 6], 7.0, 1.0)
                .unwrap(),
            Electrostatics::ReactionField { epsilon_rf: 30.0 },
        ),
        _ => {
            let (alpha, kmax) = ewald_tune(1e-6, 3.4, 7.0).unwrap();
            (
                SystemComposition::new(
                    vec![ion("Na", 1.0), ion("Cl", -1.0), dumbbell("P", 0.5, 0.4)],
                    vec![6, 6, 8],
                    7.0,
                    1.0,
                )
                .unwrap(),
                Electrostatics::Ewald { alpha, kmax },
            )
        }
    }
}

fn sum_abs(v: &[Vec3]) -> f64 {
    v.iter().map(|x| x.abs().sum()).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn total_force_vanishes(seed in any::<u64>(), method in prop::sample::select(vec!["lj", "rf", "ewald"])) {
        let (comp, el) = mixture(method);
        let ff = ForceField::new(&comp, 3.4, el).unwrap();
        let s = evaluated(&ff, &comp, &random_state(&comp, 0.85, &mut rng(seed)), 1);
        let total = s.forces.iter().fold(Vec3::zeros(), |a, f| a + f);
        prop_assert!(total.amax() <= 1e-10 * sum_abs(&s.forces).max(1.0), "{total:?}");
    }

    #[test]
    fn energy_is_invariant_under_translation_and_wrapping(
        seed in any::<u64>(),
        shift in prop::array::uniform3(-20.0f64..20.0),
        method in prop::sample::select(vec!["lj", "rf", "ewald"]),
    ) {
        let (comp, el) = mixture(method);
        let ff = ForceField::new(&comp, 3.4, el).unwrap();
        let state = random_state(&comp, 0.85, &mut rng(seed));
        let base = evaluated(&ff, &comp, &state, 1).energy.total();
        let mut moved = state.clone();
        moved.positions.iter_mut().for_each(|p| *p += Vec3::from(shift));
        let shifted = evaluated(&ff, &comp, &moved, 1).energy.total();
        moved.wrap_positions();
        let wrapped = evaluated(&ff, &comp, &moved, 1).energy.total();
        prop_assert!((shifted - base).abs() <= 1e-9 * base.abs().max(1.0));
        prop_assert!((wrapped - base).abs() <= 1e-9 * base.abs().max(1.0));
    }

    #[test]
    fn worker_count_does_not_change_results_beyond_rounding(seed in any::<u64>(), workers in 2usize..6) {
        let (comp, el) = mixture("rf");
        let ff = ForceField::new(&comp, 3.4, el).unwrap();
        let state = random_state(&comp, 0.85, &mut rng(seed));
        let a = evaluated(&ff, &comp, &state, 1);
        let b = evaluated(&ff, &comp, &state, workers);
        for (x, y) in a.forces.iter().zip(&b.forces).chain(a.torques.iter().zip(&b.torques)) {
            prop_assert!((x - y).amax() <= 1e-12);
        }
        prop_assert!((a.energy.total() - b.energy.total()).abs() <= 1e-12 * a.energy.total().abs().max(1.0));
    }

    #[test]
    fn dummy_sites_are_inert(seed in any::<u64>()) {
        let plain = dumbbell("D", 0.5, 0.3);
        let mut sites = plain.sites.clone();
        sites.push(Site::dummy(Vec3::new(0.0, 0.4, 0.0), 0.0));
        let decorated = MoleculeSpecies::build("D", sites).unwrap();
        let a = SystemComposition::new(vec![plain], vec![16], 7.0, 1.0).unwrap();
        let b = SystemComposition::new(vec![decorated], vec![16], 7.0, 1.0).unwrap();
        let el = Electrostatics::ReactionField { epsilon_rf: 10.0 };
        let state = random_state(&b, 0.9, &mut rng(seed));
        let ea = evaluated(&ForceField::new(&a, 3.0, el).unwrap(), &a, &state, 1);
        let eb = evaluated(&ForceField::new(&b, 3.0, el).unwrap(), &b, &state, 1);
        prop_assert_eq!(ea.energy, eb.energy);
        prop_assert_eq!(ea.forces, eb.forces);
    }
}

#[test]
fn unused_method_parts_are_exactly_zero() {
    for method in ["lj", "rf", "ewald"] {
        let (comp, el) = mixture(method);
        let ff = ForceField::new(&comp, 3.4, el).unwrap();
        let e = evaluated(&ff, &comp, &random_state(&comp, 0.85, &mut rng(1)), 1).energy;
        let sum = e.lj + e.elec_real + e.elec_recip + e.elec_self + e.reaction_field + e.lrc;
        assert_eq!(e.total(), sum);
        match method {
            "lj" => assert!(e.elec_real == 0.0 && e.elec_recip == 0.0 && e.elec_self == 0.0 && e.reaction_field == 0.0),
            "rf" => assert!(e.elec_recip == 0.0 && e.elec_self == 0.0 && e.reaction_field != 0.0),
            _ => assert!(e.reaction_field == 0.0 && e.du_dv == 0.0 && e.d2u_dv2 == 0.0 && e.elec_recip != 0.0),
        }
    }
}

#[test]
fn serial_ewald_matches_force_field() {
    let (comp, el) = mixture("ewald");
    let Electrostatics::Ewald { alpha, kmax } = el else { unreachable!() };
    let ff = ForceField::new(&comp, 3.4, el).unwrap();
    let state = random_state(&comp, 0.85, &mut rng(2));
    let full = evaluated(&ff, &comp, &state, 1);
    let (e, forces, _) = ewald_energy(&comp, &state, 3.4, alpha, kmax).unwrap();
    assert!((e.elec_recip - full.energy.elec_recip).abs() < 1e-12);
    assert!((e.elec_self - full.energy.elec_self).abs() < 1e-12);
    assert!((e.elec_real - full.energy.elec_real).abs() < 1e-10);
    // Electrostatic plus LJ forces must add up to the force field result.
    let lj_only = SystemComposition {
        species: comp
            .species
            .iter()
            .map(|s| {
                let sites = s.sites.iter().map(|x| if x.charge_value() != 0.0 { Site::dummy(x.position, x.mass) } else { x.clone() });
                MoleculeSpecies::build(s.name.clone(), sites.collect()).unwrap()
            })
            .collect(),
        ..comp.clone()
    };
    let lj = evaluated(&ForceField::new(&lj_only, 3.4, Electrostatics::Cutoff).unwrap(), &lj_only, &state, 1);
    for ((a, b), c) in forces.iter().zip(&lj.forces).zip(&full.forces) {
        assert!((a + b - c).amax() < 1e-10);
    }
}

fn ionic_state(l: f64, seed: u64) -> (SystemComposition, SystemState) {
    let comp = SystemComposition::new(vec![bare_charge("P", 1.0), bare_charge("M", -1.0)], vec![6, 6], l, 1.0).unwrap();
    let state = random_state(&comp, 0.9, &mut rng(seed));
    (comp, state)
}

fn coulomb_energy(comp: &SystemComposition, state: &SystemState, cutoff: f64, alpha: f64, kmax: u32) -> f64 {
    let (e, _, _) = ewald_energy(comp, state, cutoff, alpha, kmax).unwrap();
    e.elec_real + e.elec_recip + e.elec_self
}

#[test]
fn ewald_energy_is_independent_of_alpha() {
    // The cutoff and kmax follow alpha so that both truncation estimates
    // stay at delta.
    let (l, delta, base_cutoff) = (10.0, 1e-6, 2.5);
    let (comp, state) = ionic_state(l, 7);
    let (alpha0, _) = ewald_tune(delta, base_cutoff, l).unwrap();
    let reference = coulomb_energy(&comp, &state, base_cutoff, alpha0, ewald_tune(delta, base_cutoff, l).unwrap().1);
    for f in [0.5, 0.75, 1.25, 1.5] {
        let cutoff = base_cutoff / f;
        let (alpha, kmax) = ewald_tune(delta, cutoff, l).unwrap();
        assert!((alpha - f * alpha0).abs() < 1e-9 * alpha0);
        let e = coulomb_energy(&comp, &state, cutoff, alpha, kmax);
        assert!(((e - reference) / reference).abs() < 1e-5, "alpha factor {f}: {e} vs {reference}");
    }
}

#[test]
fn tuned_parameters_reproduce_direct_sum() {
    let (l, cutoff) = (10.0, 5.0);
    let (comp, state) = ionic_state(l, 8);
    let (alpha, kmax) = ewald_tune(1e-4, cutoff, l).unwrap();
    let e = coulomb_energy(&comp, &state, cutoff, alpha, kmax);
    let charges: Vec<f64> = [1.0; 6].into_iter().chain([-1.0; 6]).collect();
    let shells = 30;
    let mut direct = 0.0;
    for nx in -shells..=shells {
        for ny in -shells..=shells {
            for nz in -shells..=shells {
                if nx * nx + ny * ny + nz * nz > shells * shells {
                    continue;
                }
                let shift = Vec3::new(nx as f64, ny as f64, nz as f64) * l;
                for (i, (pi, qi)) in state.positions.iter().zip(&charges).enumerate() {
                    for (j, (pj, qj)) in state.positions.iter().zip(&charges).enumerate() {
                        if i != j || nx != 0 || ny != 0 || nz != 0 {
                            direct += 0.5 * qi * qj / (pj - pi + shift).norm();
                        }
                    }
                }
            }
        }
    }
    let dipole = state.positions.iter().zip(&charges).fold(Vec3::zeros(), |a, (p, q)| a + p * *q);
    direct -= 2.0 * PI * dipole.norm_squared() / (3.0 * l.powi(3));
    assert!(((e - direct) / direct).abs() <= 1e-4, "{e} vs {direct}");
}

#[test]
fn neutral_charges_give_exactly_zero_coulomb_energy() {
    let species = MoleculeSpecies::build("Z", vec![Site::charge(Vec3::zeros(), 0.0, 1.0)]).unwrap();
    let comp = SystemComposition::new(vec![species], vec![10], 6.0, 1.0).unwrap();
    let state = random_state(&comp, 0.9, &mut rng(3));
    assert_eq!(coulomb_energy(&comp, &state, 2.9, 1.1, 5), 0.0);
}
