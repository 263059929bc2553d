//! Fiber controllability of lifted systems on S2, with and without a usable control direction.

use tanlift::lifted::{fiber_controllability_report, steer_lifted, DEFAULT_GRID};
use tanlift::{ChartManifold, IntegratorConfig, LiftedSystem, TangentPoint, VectorField};

fn main() -> tanlift::Result<()> {
    let s2 = ChartManifold::sphere();
    let d_theta = VectorField::coordinate(s2.clone(), 0);
    let d_phi = VectorField::coordinate(s2, 1);
    let cfg = IntegratorConfig::default();
    let v0 = TangentPoint::from_slices(&[1.0, 0.0], &[0.0, 0.0])?;

    let systems = [
        ("commuting", LiftedSystem::new(d_phi.clone(), vec![d_theta, d_phi.clone()])?),
        ("degenerate", LiftedSystem::new(d_phi.clone(), vec![d_phi])?),
    ];
    for (name, sys) in &systems {
        let r = fiber_controllability_report(sys, &v0, 1.0, DEFAULT_GRID, 4, 1e-8, &cfg)?;
        println!(
            "{name}: S_T rank {} transport {} | bracket rank {} depth {:?} verdict {}",
            r.s_t_basis.rank, r.transport_controllable, r.ad.basis.rank, r.ad.depth, r.bracket_controllable
        );
        println!("  base endpoint {:?}", r.base_endpoint);
    }

    let sys = &systems[0].1;
    let target = TangentPoint::from_slices(&[1.0, 1.0], &[-0.4, 0.7])?;
    let u = steer_lifted(sys, &v0, &target, 1.0, 8, 1e-8, &cfg)?;
    println!("steering control on {} segments, first {:?}", u.segments(), u.values()[0]);
    Ok(())
}
