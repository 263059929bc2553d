//! Checks the lift bracket identities on the sphere chart at seeded random points.

use tanlift::checks::{lift_identity_battery, BatteryConfig};
use tanlift::{ChartManifold, VectorField};

fn main() -> tanlift::Result<()> {
    let s2 = ChartManifold::sphere();
    let fields = vec![
        VectorField::coordinate(s2.clone(), 0),
        VectorField::coordinate(s2.clone(), 1),
        VectorField::from_exprs("X0", s2, &["cos(x2)", "sin(x1)"])?,
    ];
    let report = lift_identity_battery(&fields, &[], &BatteryConfig::default())?;
    for c in &report.checks {
        let mark = if c.passed { "ok " } else { "BAD" };
        println!("{mark} {:<28} max {:.2e}  tol {:.0e}", c.identity, c.max_residual, c.tolerance);
    }
    println!("all passed: {}", report.all_passed);
    Ok(())
}
