//! Loads a scenario file and prints the lifted controllability verdict for each horizon.
//!
//! cargo run --example scenario_run -- scenarios/r2-shear.json

use tanlift::lifted::{fiber_controllability_report, DEFAULT_GRID};
use tanlift::scenario::Scenario;
use tanlift::{IntegratorConfig, TangentPoint};

fn main() -> tanlift::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/r2-shear.json").to_string());
    let scenario = Scenario::load(&path)?;
    let fields = scenario.build_fields()?;
    let Some(setup) = scenario.lifted(&fields)? else {
        println!("{} has no lifted system", scenario.name);
        return Ok(());
    };
    let cfg = IntegratorConfig::default();
    let v0: &TangentPoint = &setup.initial;
    for &t in &setup.horizons {
        let r = fiber_controllability_report(&setup.system, v0, t, DEFAULT_GRID, setup.k_max, 1e-8, &cfg)?;
        println!("T = {t}: transport {} bracket {}", r.transport_controllable, r.bracket_controllable);
    }
    Ok(())
}
