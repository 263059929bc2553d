//! Linear damping in the fiber, y' = -y, integrated over one time unit.

use std::sync::Arc;

use tanlift::vertical::{simulate_vertical_general, FiberDynamics};
use tanlift::{ChartManifold, ControlSignal, IntegratorConfig, TangentPoint};

fn main() -> tanlift::Result<()> {
    let chart = ChartManifold::sphere();
    let lambda = 1.0;
    let dynamics: FiberDynamics = Arc::new(move |_x, y, _u| Ok(-lambda * y));
    let v0 = TangentPoint::from_slices(&[1.0, 0.5], &[1.0, 2.0])?;
    let u = ControlSignal::constant(1.0, &[0.0])?;
    let traj = simulate_vertical_general(&chart, &dynamics, &v0, &u, &IntegratorConfig::default())?;
    let end = traj.last();
    println!("steps {}", traj.points.len() - 1);
    for i in 0..2 {
        println!("y{}(1)/y{}(0) = {:.12}", i + 1, i + 1, end.fiber[i] / v0.fiber[i]);
    }
    println!("e^-1        = {:.12}", (-1.0f64).exp());
    Ok(())
}
