use crate::error::{Error, Result};
use crate::model::SystemState;

use super::Dynamics;

/// Isokinetic rescaling of translational and rotational velocities to
/// `target`, each over its own degrees of freedom. Returns the two scale
/// factors; a block without degrees of freedom keeps factor 1.
pub fn thermostat(dynamics: &Dynamics, state: &mut SystemState, target: f64) -> Result<(f64, f64)> {
    let comp = &dynamics.composition;
    let (dof_t, dof_r) = (comp.translational_dof(), comp.rotational_dof());
    if dof_t + dof_r == 0 {
        return Err(Error::Thermostat("system has no kinetic degrees of freedom".into()));
    }
    let (kin_t, kin_r) = dynamics.kinetic(state);
    let factor = |dof: usize, kin: f64, what: &str| -> Result<f64> {
        if dof == 0 {
            return Ok(1.0);
        }
        if !(kin > 0.0) {
            if target > 0.0 {
                return Err(Error::Thermostat(format!("{what} kinetic energy is zero, cannot reach T = {target}")));
            }
            return Ok(1.0);
        }
        Ok((0.5 * dof as f64 * target / kin).sqrt())
    };
    let st = factor(dof_t, kin_t, "translational")?;
    let sr = factor(dof_r, kin_r, "rotational")?;
    state.velocities.iter_mut().for_each(|v| *v *= st);
    state.angular_velocities.iter_mut().for_each(|w| *w *= sr);
    Ok((st, sr))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{init_lattice, MoleculeSpecies, Site, SystemComposition};
    use crate::potentials::Electrostatics;
    use crate::Vec3;

    fn dumbbells(t: f64) -> Dynamics {
        let s = MoleculeSpecies::build(
            "D",
            vec![
                Site::lj(Vec3::new(0.5, 0.0, 0.0), 1.0, 1.0, 1.0),
                Site::lj(Vec3::new(-0.5, 0.0, 0.0), 1.0, 1.0, 1.0),
            ],
        )
        .unwrap();
        let comp = SystemComposition::with_density(vec![s], vec![32], 0.3, t).unwrap();
        Dynamics::new(comp, 2.2, Electrostatics::Cutoff, 1).unwrap()
    }

    #[test]
    fn state_at_target_is_untouched() {
        let d = dumbbells(1.2);
        let mut st = init_lattice(&d.composition, 3).unwrap();
        let (a, b) = thermostat(&d, &mut st, 1.2).unwrap();
        assert!((a - 1.0).abs() < 1e-12 && (b - 1.0).abs() < 1e-12);
    }

    #[test]
    fn doubled_temperature_scales_by_inverse_sqrt2() {
        let d = dumbbells(2.0);
        let mut st = init_lattice(&d.composition, 3).unwrap();
        let (a, b) = thermostat(&d, &mut st, 1.0).unwrap();
        let want = 0.5f64.sqrt();
        assert!((a - want).abs() < 1e-12 && (b - want).abs() < 1e-12);
        assert!((d.kinetic_temperature(&st) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn frozen_system_is_an_error() {
        let d = dumbbells(1.0);
        let mut st = SystemState::new(d.composition.box_length, 32);
        assert!(matches!(thermostat(&d, &mut st, 1.0), Err(Error::Thermostat(_))));
    }
}
