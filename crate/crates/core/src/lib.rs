//! Tangent lifts of vector fields and control systems on the tangent bundle of a
//! chart-covered manifold.
//!
//! Points of TM are pairs `(x, y)` in induced coordinates. The crate provides vertical and
//! complete lifts with their brackets, drift flows with variational equations, vertical
//! affine control systems and lifted systems `Y^c + sum u_i X_i^v`, together with
//! rank-based fiber controllability reports.

pub mod checks;
pub mod cli;
pub mod control;
pub mod error;
pub mod expr;
pub mod flow;
pub mod lift;
pub mod lifted;
pub mod manifold;
pub mod scenario;
pub mod subspace;
pub mod vertical;

pub use control::{ControlSignal, Trajectory};
pub use error::{Error, Result};
pub use expr::Expr;
pub use flow::IntegratorConfig;
pub use lift::{complete_lift, vertical_lift, LiftKind, LiftedVectorField};
pub use lifted::LiftedSystem;
pub use manifold::{BasePoint, ChartManifold, DiffConfig, TangentPoint, VectorField};
pub use subspace::SubspaceBasis;
pub use vertical::VerticalAffineSystem;
