mod common;

use common::*;
use rigidmd::engine::{run, SimulationPlan, ThermostatPlan};
use rigidmd::model::SystemComposition;

fn liquid(n: usize) -> SystemComposition {
    SystemComposition::with_density(vec![lj_atom("Ar", 1.0, 1.0, 1.0)], vec![n], 0.5, 1.3).unwrap()
}

#[test]
fn isokinetic_run_holds_set_temperature() {
    let plan = SimulationPlan::new(0.004, 2_000, 100_000, 2.5);
    let bundle = run(liquid(256), plan, 3).unwrap();
    let t = bundle.temperature.unwrap();
    assert!(((t.mean - 1.3) / 1.3).abs() <= 1e-3, "{t:?}");
}

#[test]
fn massieu_with_sparse_rescaling_is_flagged() {
    let mut plan = SimulationPlan::new(0.004, 20, 200, 2.5);
    plan.samplers.massieu = true;
    let sparse = run(liquid(64), plan.clone(), 1).unwrap();
    assert!(sparse.warnings.iter().any(|w| w.contains("thermostat interval 10")), "{:?}", sparse.warnings);

    plan.thermostat = Some(ThermostatPlan { equilibration_interval: 1, production_interval: 1 });
    let dense = run(liquid(64), plan, 1).unwrap();
    assert!(dense.warnings.iter().all(|w| !w.contains("thermostat interval")));
}
