//! The shear drift Y = x d/dy on R2: flow differential, transported field and the lifted endpoint.

use nalgebra::DVector;
use tanlift::flow::{flow_differential, transported_derivatives, transported_field};
use tanlift::lifted::{endpoint_closed_form, simulate_lifted_ode, DEFAULT_GRID};
use tanlift::{ChartManifold, ControlSignal, IntegratorConfig, LiftedSystem, TangentPoint, VectorField};

fn main() -> tanlift::Result<()> {
    let r2 = ChartManifold::euclidean(2)?;
    let y = VectorField::from_exprs("Y", r2.clone(), &["0", "x1"])?;
    let x1 = VectorField::coordinate(r2, 0);
    let cfg = IntegratorConfig::default();
    let x0 = DVector::from_vec(vec![1.0, 0.0]);

    for t in [0.5, 1.0, 2.0] {
        let d = flow_differential(&y, &x0, t, &cfg)?;
        let w = transported_field(&y, &x1, &x0, t, &cfg)?;
        let rows = [[d[(0, 0)], d[(0, 1)]], [d[(1, 0)], d[(1, 1)]]];
        println!("t = {t}: dphi = {rows:?}, transported X1 = {:?}", w.as_slice());
    }
    let ad = transported_derivatives(&y, &x1, &x0, 2)?;
    for (k, v) in ad.iter().enumerate() {
        println!("ad^{k} = {:?}", v.as_slice());
    }

    let sys = LiftedSystem::new(y, vec![x1])?;
    let v0 = TangentPoint::from_slices(&[1.0, 0.0], &[0.0, 0.0])?;
    let u = ControlSignal::constant(1.0, &[1.0])?;
    let closed = endpoint_closed_form(&sys, &v0, &u, DEFAULT_GRID, &cfg)?;
    let ode = simulate_lifted_ode(&sys, &v0, &u, &cfg)?;
    println!("endpoint closed form {:?} over {:?}", closed.fiber.as_slice(), closed.base.as_slice());
    println!("endpoint rk4         {:?} over {:?}", ode.last().fiber.as_slice(), ode.last().base.as_slice());
    Ok(())
}
