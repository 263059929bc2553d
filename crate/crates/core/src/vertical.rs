//! Affine vertical control systems `v' = X_0^v(v) + sum_i u_i X_i^v(v)`.
//!
//! Trajectories never leave the initial fiber. In the fiber they are the
//! translations `y(t) = y(0) + t X_0(x) + sum_i (int_0^t u_i) X_i(x)`, so the
//! reachable set at time T is an affine subspace of T_xM.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::control::{integrate_controlled, ControlSignal, Trajectory};
use crate::error::{Error, Result};
use crate::flow::IntegratorConfig;
use crate::manifold::{BasePoint, ChartManifold, TangentPoint, VectorField};
use crate::subspace::{least_squares, SubspaceBasis};

#[derive(Debug, Clone)]
pub struct VerticalAffineSystem {
    pub chart: ChartManifold,
    pub drift: VectorField,
    pub controls: Vec<VectorField>,
}

impl VerticalAffineSystem {
    pub fn new(drift: VectorField, controls: Vec<VectorField>) -> Result<Self> {
        if controls.is_empty() {
            return Err(Error::invalid("a vertical system needs at least one control field"));
        }
        let chart = drift.chart().clone();
        if let Some(bad) = controls.iter().find(|c| c.dim() != chart.dim()) {
            return Err(Error::Dimension {
                expected: chart.dim(),
                got: bad.dim(),
            });
        }
        Ok(Self {
            chart,
            drift,
            controls,
        })
    }

    pub fn inputs(&self) -> usize {
        self.controls.len()
    }

    /// The n x m matrix [X_1(x) .. X_m(x)].
    pub fn control_matrix(&self, x: &BasePoint) -> Result<DMatrix<f64>> {
        let cols = self
            .controls
            .iter()
            .map(|c| c.eval(x))
            .collect::<Result<Vec<_>>>()?;
        Ok(DMatrix::from_columns(&cols))
    }

    fn check_start(&self, v0: &TangentPoint, u: &ControlSignal) -> Result<()> {
        if v0.dim() != self.chart.dim() {
            return Err(Error::Dimension {
                expected: self.chart.dim(),
                got: v0.dim(),
            });
        }
        if u.inputs() != self.inputs() {
            return Err(Error::Dimension {
                expected: self.inputs(),
                got: u.inputs(),
            });
        }
        Ok(())
    }
}

/// Fiber dynamics `y' = f(x, y, u)` of a general vertical system.
pub type FiberDynamics =
    Arc<dyn Fn(&BasePoint, &DVector<f64>, &[f64]) -> Result<DVector<f64>> + Send + Sync>;

/// Closed-form state at time t for a piecewise-constant control.
pub fn solve_vertical_closed_form(
    sys: &VerticalAffineSystem,
    v0: &TangentPoint,
    u: &ControlSignal,
    t: f64,
) -> Result<TangentPoint> {
    sys.check_start(v0, u)?;
    let integrals = u.integral_to(t)?;
    let x = &v0.base;
    let fiber = &v0.fiber + sys.drift.eval(x)? * t + sys.control_matrix(x)? * integrals;
    TangentPoint::new(x.clone(), fiber)
}

/// Integrates (x', y') = (0, f(x, y, u)) by RK4. The base derivative is the zero vector,
/// so base coordinates are reproduced bit for bit.
pub fn simulate_vertical_general(
    chart: &ChartManifold,
    dynamics: &FiberDynamics,
    v0: &TangentPoint,
    u: &ControlSignal,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    chart.check(v0.base.as_slice())?;
    let n = chart.dim();
    let rhs = |z: &DVector<f64>, row: &[f64]| -> Result<DVector<f64>> {
        let x = z.rows(0, n).into_owned();
        let y = z.rows(n, n).into_owned();
        chart.check(x.as_slice())?;
        let dy = dynamics(&x, &y, row)?;
        if dy.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: dy.len(),
            });
        }
        let mut out = DVector::zeros(2 * n);
        out.rows_mut(n, n).copy_from(&dy);
        Ok(out)
    };
    integrate_controlled(rhs, v0, u, cfg)
}

/// Direct RK4 simulation of the affine vertical system on TM.
pub fn simulate_vertical_ode(
    sys: &VerticalAffineSystem,
    v0: &TangentPoint,
    u: &ControlSignal,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    sys.check_start(v0, u)?;
    let s = sys.clone();
    let dynamics: FiberDynamics = Arc::new(move |x, _y, row| {
        let mut dy = s.drift.eval(x)?;
        for (c, ui) in s.controls.iter().zip(row) {
            dy += c.eval(x)? * *ui;
        }
        Ok(dy)
    });
    simulate_vertical_general(&sys.chart, &dynamics, v0, u, cfg)
}

/// R_T(v0) = anchor + span(basis), with anchor = v0 + T X_0(x0).
#[derive(Debug, Clone, Serialize)]
pub struct ReachableAffineSet {
    pub anchor_base: Vec<f64>,
    pub anchor_fiber: Vec<f64>,
    pub basis: SubspaceBasis,
}

impl ReachableAffineSet {
    /// Distance from a fiber vector to the affine set.
    pub fn residual(&self, fiber: &DVector<f64>) -> f64 {
        self.basis
            .residual(&(fiber - DVector::from_column_slice(&self.anchor_fiber)))
    }

    pub fn projects_to(&self, x: &BasePoint) -> bool {
        self.anchor_base.as_slice() == x.as_slice()
    }
}

pub fn reachable_vertical(
    sys: &VerticalAffineSystem,
    v0: &TangentPoint,
    horizon: f64,
    tol: f64,
) -> Result<ReachableAffineSet> {
    if !(horizon > 0.0) {
        return Err(Error::invalid("horizon must be positive"));
    }
    let x = &v0.base;
    let anchor = &v0.fiber + sys.drift.eval(x)? * horizon;
    let vectors = sys
        .controls
        .iter()
        .map(|c| c.eval(x))
        .collect::<Result<Vec<_>>>()?;
    Ok(ReachableAffineSet {
        anchor_base: x.as_slice().to_vec(),
        anchor_fiber: anchor.as_slice().to_vec(),
        basis: SubspaceBasis::new(&vectors, sys.chart.dim(), tol)?,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct VerticalRankReport {
    pub controllable: bool,
    pub basis: SubspaceBasis,
}

/// Fiber controllability over x0: the control fields must span T_{x0}M.
pub fn fiber_controllable_vertical(
    sys: &VerticalAffineSystem,
    x0: &BasePoint,
    tol: f64,
) -> Result<VerticalRankReport> {
    let vectors = sys
        .controls
        .iter()
        .map(|c| c.eval(x0))
        .collect::<Result<Vec<_>>>()?;
    let basis = SubspaceBasis::new(&vectors, sys.chart.dim(), tol)?;
    Ok(VerticalRankReport {
        controllable: basis.is_full(),
        basis,
    })
}

/// Constant control reaching `target` (a fiber vector over v0.base) at time T.
///
/// Solves sum_i alpha_i X_i(x0) = target - v0 - T X_0(x0) in the minimum-norm least-squares
/// sense and returns u_i = alpha_i / T. Fails when the residual exceeds `tol`.
pub fn steer_vertical(
    sys: &VerticalAffineSystem,
    v0: &TangentPoint,
    target: &DVector<f64>,
    horizon: f64,
    tol: f64,
) -> Result<ControlSignal> {
    if target.len() != sys.chart.dim() {
        return Err(Error::Dimension {
            expected: sys.chart.dim(),
            got: target.len(),
        });
    }
    if !(horizon > 0.0) {
        return Err(Error::invalid("horizon must be positive"));
    }
    let x = &v0.base;
    let defect = target - &v0.fiber - sys.drift.eval(x)? * horizon;
    let (alpha, residual) = least_squares(&sys.control_matrix(x)?, &defect, 1e-12)?;
    if residual > tol {
        return Err(Error::Unreachable { residual, tol });
    }
    let u: Vec<f64> = alpha.iter().map(|a| a / horizon).collect();
    ControlSignal::constant(horizon, &u)
}
