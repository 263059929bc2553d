//! Short control pulses near t0: the scaled endpoint response approaches the transported field.

use nalgebra::DVector;
use tanlift::lifted::{bump_convergence, DEFAULT_GRID};
use tanlift::{ChartManifold, IntegratorConfig, LiftedSystem, VectorField};

fn main() -> tanlift::Result<()> {
    let r2 = ChartManifold::euclidean(2)?;
    let sys = LiftedSystem::new(
        VectorField::from_exprs("Y", r2.clone(), &["0", "x1"])?,
        vec![VectorField::coordinate(r2, 0)],
    )?;
    let x0 = DVector::from_vec(vec![1.0, 0.0]);
    let study = bump_convergence(&sys, &x0, 1.0, 0.5, 0, &[8, 16, 32, 64], DEFAULT_GRID, &IntegratorConfig::default())?;
    for s in &study.samples {
        println!("eps {:.5}  error {:.3e}", s.eps, s.error);
    }
    match study.order {
        Some(order) => println!("fitted order {order:.3}"),
        None => println!("errors too small to fit an order"),
    }
    Ok(())
}
