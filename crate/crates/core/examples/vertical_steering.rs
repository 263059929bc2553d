//! Vertical affine system on S2: rank test, reachable set and steering to a fiber target.

use nalgebra::DVector;
use tanlift::vertical::{
    fiber_controllable_vertical, reachable_vertical, simulate_vertical_ode, solve_vertical_closed_form,
    steer_vertical,
};
use tanlift::{ChartManifold, IntegratorConfig, TangentPoint, VectorField, VerticalAffineSystem};

fn main() -> tanlift::Result<()> {
    let s2 = ChartManifold::sphere();
    let drift = VectorField::from_exprs("X0", s2.clone(), &["cos(x2)", "sin(x1)"])?;
    let sys = VerticalAffineSystem::new(
        drift,
        vec![VectorField::coordinate(s2.clone(), 0), VectorField::coordinate(s2, 1)],
    )?;
    let v0 = TangentPoint::from_slices(&[1.0, 0.5], &[0.2, -0.1])?;
    let horizon = 1.0;

    let rank = fiber_controllable_vertical(&sys, &v0.base, 1e-8)?;
    println!("rank {} controllable {}", rank.basis.rank, rank.controllable);

    let reach = reachable_vertical(&sys, &v0, horizon, 1e-8)?;
    println!("reachable anchor {:?}", reach.anchor_fiber);

    let target = DVector::from_vec(vec![1.5, -2.0]);
    let u = steer_vertical(&sys, &v0, &target, horizon, 1e-10)?;
    println!("constant control {:?}", u.values()[0]);

    let closed = solve_vertical_closed_form(&sys, &v0, &u, horizon)?;
    let ode = simulate_vertical_ode(&sys, &v0, &u, &IntegratorConfig::default())?;
    println!("closed form fiber {:?}", closed.fiber.as_slice());
    println!("rk4 fiber         {:?}", ode.last().fiber.as_slice());
    println!("base moved: {}", ode.points.iter().any(|p| p.base != v0.base));
    Ok(())
}
