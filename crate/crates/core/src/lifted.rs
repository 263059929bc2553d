//! Lifted systems with complete drift and vertical controls,
//! `v' = Y^c(v) + sum_i u_i X_i^v(v)`.
//!
//! The base point follows the drift flow regardless of the control. The fiber
//! endpoint is
//!
//! ```text
//! v(T) = (d phi_T)_{x0} v0 + sum_i int_0^T u_i(t) (phi_{T-t})_* X_i (phi_t(x0)) dt
//! ```
//!
//! which this module evaluates on a uniform grid of N segments. Each transport
//! column is obtained as `d phi_T . (d phi_t)^{-1} . X_i(phi_t(x0))` from the
//! differentials stored along a single flow integration, and the time integral
//! uses composite Simpson per segment (controls are constant per segment).

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::control::{integrate_controlled, ControlSignal, Trajectory};
use crate::error::{Error, Result};
use crate::flow::{ad_iterates, flow_at, solve_differential, FlowResult, IntegratorConfig};
use crate::manifold::{BasePoint, ChartManifold, TangentPoint, VectorField};
use crate::subspace::{least_squares, SubspaceBasis};

/// Default number of grid segments for the discretized transport operator.
pub const DEFAULT_GRID: usize = 64;

/// Tolerance on the base point of a steering target.
pub const BASE_TARGET_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct LiftedSystem {
    pub chart: ChartManifold,
    pub drift: VectorField,
    pub controls: Vec<VectorField>,
}

impl LiftedSystem {
    pub fn new(drift: VectorField, controls: Vec<VectorField>) -> Result<Self> {
        if controls.is_empty() {
            return Err(Error::invalid("a lifted system needs at least one control field"));
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

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn inputs(&self) -> usize {
        self.controls.len()
    }
}

/// Transport data on the uniform grid `t_k = k T / N`, plus segment midpoints.
///
/// Half-grid index `j` corresponds to `t = j T / (2N)`; grid node k is `j = 2k`.
#[derive(Debug, Clone)]
pub struct TransportOperatorGrid {
    pub horizon: f64,
    pub segments: usize,
    /// Flow with differentials at every half-grid node.
    pub flow: FlowResult,
    /// `transported[j][i]` = (phi_{-t_j})_* X_i (x0), in T_{x0}M.
    pub transported: Vec<Vec<DVector<f64>>>,
    /// `columns[j][i]` = (phi_{T-t_j})_* X_i (phi_{t_j}(x0)), in T_{phi_T(x0)}M.
    pub columns: Vec<Vec<DVector<f64>>>,
}

impl TransportOperatorGrid {
    pub fn grid_times(&self) -> Vec<f64> {
        (0..=self.segments)
            .map(|k| self.horizon * k as f64 / self.segments as f64)
            .collect()
    }

    pub fn endpoint_differential(&self) -> &DMatrix<f64> {
        self.flow.final_jacobian().expect("grid flow carries differentials")
    }

    pub fn base_endpoint(&self) -> &BasePoint {
        self.flow.final_state()
    }

    /// Column at grid node k for control field i.
    pub fn node_column(&self, k: usize, i: usize) -> &DVector<f64> {
        &self.columns[2 * k][i]
    }

    /// Transported vector in T_{x0}M at grid node k for control field i.
    pub fn node_transported(&self, k: usize, i: usize) -> &DVector<f64> {
        &self.transported[2 * k][i]
    }

    /// Simpson integral of column i over grid segment k.
    pub fn segment_integral(&self, k: usize, i: usize) -> DVector<f64> {
        let dt = self.horizon / self.segments as f64;
        (&self.columns[2 * k][i] + &self.columns[2 * k + 1][i] * 4.0 + &self.columns[2 * k + 2][i])
            * (dt / 6.0)
    }

    /// The n x (N m) matrix of segment integrals; column k m + i pairs with u_i on segment k.
    pub fn segment_matrix(&self) -> DMatrix<f64> {
        let m = self.columns[0].len();
        let cols: Vec<DVector<f64>> = (0..self.segments)
            .flat_map(|k| (0..m).map(move |i| (k, i)))
            .map(|(k, i)| self.segment_integral(k, i))
            .collect();
        DMatrix::from_columns(&cols)
    }
}

pub fn build_transport_grid(
    sys: &LiftedSystem,
    x0: &BasePoint,
    horizon: f64,
    segments: usize,
    cfg: &IntegratorConfig,
) -> Result<TransportOperatorGrid> {
    if segments < 2 {
        return Err(Error::invalid("transport grid needs at least 2 segments"));
    }
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::invalid("horizon must be positive"));
    }
    let half = 2 * segments;
    let times: Vec<f64> = (0..=half).map(|j| horizon * j as f64 / half as f64).collect();
    let flow = flow_at(&sys.drift, x0, &times, cfg, true)?;
    let jacs = flow.jacobians.as_ref().expect("requested differentials");
    let end_jac = jacs.last().expect("non-empty").clone();
    let mut transported = Vec::with_capacity(times.len());
    let mut columns = Vec::with_capacity(times.len());
    for (state, jac) in flow.states.iter().zip(jacs) {
        let mut t_row = Vec::with_capacity(sys.inputs());
        let mut c_row = Vec::with_capacity(sys.inputs());
        for field in &sys.controls {
            let w = solve_differential(jac, &field.eval(state)?)?;
            c_row.push(&end_jac * &w);
            t_row.push(w);
        }
        transported.push(t_row);
        columns.push(c_row);
    }
    Ok(TransportOperatorGrid {
        horizon,
        segments,
        flow,
        transported,
        columns,
    })
}

/// Discretized L_T(u) in T_{phi_T(x0)}M. The control segments must divide the grid.
pub fn apply_lt(grid: &TransportOperatorGrid, u: &ControlSignal) -> Result<DVector<f64>> {
    if (u.horizon() - grid.horizon).abs() > 1e-12 * grid.horizon.max(1.0) {
        return Err(Error::invalid("control horizon differs from the grid horizon"));
    }
    let m = grid.columns[0].len();
    if u.inputs() != m {
        return Err(Error::Dimension {
            expected: m,
            got: u.inputs(),
        });
    }
    if !grid.segments.is_multiple_of(u.segments()) {
        return Err(Error::Alignment {
            control_segments: u.segments(),
            grid_segments: grid.segments,
        });
    }
    let per = grid.segments / u.segments();
    let n = grid.columns[0][0].len();
    let mut out = DVector::zeros(n);
    for k in 0..grid.segments {
        let row = &u.values()[k / per];
        for (i, ui) in row.iter().enumerate() {
            if *ui != 0.0 {
                out += grid.segment_integral(k, i) * *ui;
            }
        }
    }
    Ok(out)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Grid size used for a control: the least common multiple of the two segment counts.
pub fn aligned_grid(grid: usize, control_segments: usize) -> usize {
    grid / gcd(grid, control_segments) * control_segments
}

/// Endpoint v(T) from the closed-form transport formula.
pub fn endpoint_closed_form(
    sys: &LiftedSystem,
    v0: &TangentPoint,
    u: &ControlSignal,
    grid: usize,
    cfg: &IntegratorConfig,
) -> Result<TangentPoint> {
    let g = build_transport_grid(sys, &v0.base, u.horizon(), aligned_grid(grid, u.segments()), cfg)?;
    let fiber = g.endpoint_differential() * &v0.fiber + apply_lt(&g, u)?;
    TangentPoint::new(g.base_endpoint().clone(), fiber)
}

/// Direct RK4 integration of (x', y') = (Y(x), J_Y(x) y + sum_i u_i X_i(x)).
pub fn simulate_lifted_ode(
    sys: &LiftedSystem,
    v0: &TangentPoint,
    u: &ControlSignal,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    sys.chart.check(v0.base.as_slice())?;
    if u.inputs() != sys.inputs() {
        return Err(Error::Dimension {
            expected: sys.inputs(),
            got: u.inputs(),
        });
    }
    let n = sys.dim();
    let rhs = |z: &DVector<f64>, row: &[f64]| -> Result<DVector<f64>> {
        let x = z.rows(0, n).into_owned();
        let y = z.rows(n, n).into_owned();
        let dx = sys.drift.eval(&x)?;
        let mut dy = sys.drift.jacobian(&x)? * y;
        for (c, ui) in sys.controls.iter().zip(row) {
            dy += c.eval(&x)? * *ui;
        }
        let mut out = DVector::zeros(2 * n);
        out.rows_mut(0, n).copy_from(&dx);
        out.rows_mut(n, n).copy_from(&dy);
        Ok(out)
    };
    integrate_controlled(rhs, v0, u, cfg)
}

/// Span of the transported control directions at the N + 1 grid nodes, in T_{x0}M.
pub fn s_t_span(
    sys: &LiftedSystem,
    x0: &BasePoint,
    horizon: f64,
    segments: usize,
    tol: f64,
    cfg: &IntegratorConfig,
) -> Result<SubspaceBasis> {
    if segments < sys.dim() {
        return Err(Error::invalid(format!(
            "S_T sampling needs at least {} segments",
            sys.dim()
        )));
    }
    let g = build_transport_grid(sys, x0, horizon, segments, cfg)?;
    s_t_from_grid(&g, sys.dim(), tol)
}

fn s_t_from_grid(g: &TransportOperatorGrid, dim: usize, tol: f64) -> Result<SubspaceBasis> {
    let m = g.columns[0].len();
    let vectors: Vec<DVector<f64>> = (0..=g.segments)
        .flat_map(|k| (0..m).map(move |i| (k, i)))
        .map(|(k, i)| g.node_transported(k, i).clone())
        .collect();
    SubspaceBasis::new(&vectors, dim, tol)
}

/// Rank of {ad_Y^k X_i(x0)} for growing k.
#[derive(Debug, Clone, Serialize)]
pub struct AdCriterion {
    pub basis: SubspaceBasis,
    pub full_rank: bool,
    /// Smallest bracket depth at which the span is the whole tangent space.
    pub depth: Option<usize>,
    /// Depth at which the scan stopped (full rank, saturation or k_max).
    pub scanned_to: usize,
    pub rank_by_depth: Vec<usize>,
}

/// Scans k = 0..=k_max, stopping at full rank or once the rank has not grown for two
/// consecutive depths.
pub fn ad_criterion(sys: &LiftedSystem, x0: &BasePoint, k_max: usize, tol: f64) -> Result<AdCriterion> {
    let n = sys.dim();
    let iterates = sys
        .controls
        .iter()
        .map(|x| ad_iterates(&sys.drift, x, k_max))
        .collect::<Result<Vec<_>>>()?;
    let mut vectors = Vec::new();
    let mut rank_by_depth: Vec<usize> = Vec::new();
    let mut basis = SubspaceBasis::new(&[], n, tol)?;
    let mut depth = None;
    for k in 0..=k_max {
        for per_field in &iterates {
            vectors.push(per_field[k].eval(x0)?);
        }
        basis = SubspaceBasis::new(&vectors, n, tol)?;
        rank_by_depth.push(basis.rank);
        if basis.is_full() {
            depth = Some(k);
            break;
        }
        let stalled = k >= 2 && rank_by_depth[k] == rank_by_depth[k - 1] && rank_by_depth[k - 1] == rank_by_depth[k - 2];
        if stalled {
            break;
        }
    }
    Ok(AdCriterion {
        full_rank: basis.is_full(),
        depth,
        scanned_to: rank_by_depth.len() - 1,
        rank_by_depth,
        basis,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ControllabilityDiagnostics {
    pub grid_segments: usize,
    pub flow_differential_condition: f64,
    pub s_t_condition: f64,
    pub image_condition: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ControllabilityReport {
    pub horizon: f64,
    pub base_endpoint: Vec<f64>,
    /// d phi_T(v0): the reachable set is this point plus the span of `image_basis`.
    pub anchor: Vec<f64>,
    pub s_t_basis: SubspaceBasis,
    pub image_basis: SubspaceBasis,
    pub ad: AdCriterion,
    /// Transported directions span T_{x0}M.
    pub transport_controllable: bool,
    /// Iterated brackets span T_{x0}M.
    pub bracket_controllable: bool,
    pub caveat: Option<String>,
    pub diagnostics: ControllabilityDiagnostics,
}

pub fn fiber_controllability_report(
    sys: &LiftedSystem,
    v0: &TangentPoint,
    horizon: f64,
    segments: usize,
    k_max: usize,
    tol: f64,
    cfg: &IntegratorConfig,
) -> Result<ControllabilityReport> {
    let n = sys.dim();
    if segments < n {
        return Err(Error::invalid(format!("S_T sampling needs at least {n} segments")));
    }
    let g = build_transport_grid(sys, &v0.base, horizon, segments, cfg)?;
    let s_t = s_t_from_grid(&g, n, tol)?;
    let dphi = g.endpoint_differential();
    let image_vectors: Vec<DVector<f64>> = s_t
        .vectors
        .iter()
        .map(|s| dphi * DVector::from_column_slice(s))
        .collect();
    let image = SubspaceBasis::new(&image_vectors, n, tol)?;
    let ad = ad_criterion(sys, &v0.base, k_max, tol)?;
    let sv = dphi.singular_values();
    let transport_controllable = s_t.is_full();
    let caveat = (!transport_controllable).then(|| {
        format!(
            "grid-sampled: S_T was sampled at {} nodes per control field; a finer grid can only raise the rank",
            segments + 1
        )
    });
    Ok(ControllabilityReport {
        horizon,
        base_endpoint: g.base_endpoint().as_slice().to_vec(),
        anchor: (dphi * &v0.fiber).as_slice().to_vec(),
        transport_controllable,
        bracket_controllable: ad.full_rank,
        caveat,
        diagnostics: ControllabilityDiagnostics {
            grid_segments: segments,
            flow_differential_condition: sv.max() / sv.min(),
            s_t_condition: s_t.condition_number(),
            image_condition: image.condition_number(),
        },
        s_t_basis: s_t,
        image_basis: image,
        ad,
    })
}

/// Piecewise-constant control on `segments` segments steering v0 to `target` at time T.
pub fn steer_lifted(
    sys: &LiftedSystem,
    v0: &TangentPoint,
    target: &TangentPoint,
    horizon: f64,
    segments: usize,
    tol: f64,
    cfg: &IntegratorConfig,
) -> Result<ControlSignal> {
    let g = build_transport_grid(sys, &v0.base, horizon, segments, cfg)?;
    let distance = (&target.base - g.base_endpoint()).amax();
    if distance > BASE_TARGET_TOL {
        return Err(Error::BaseFixed { distance });
    }
    let defect = &target.fiber - g.endpoint_differential() * &v0.fiber;
    let (alpha, residual) = least_squares(&g.segment_matrix(), &defect, 1e-12)?;
    if residual > tol {
        return Err(Error::Unreachable { residual, tol });
    }
    let m = sys.inputs();
    let values = (0..segments)
        .map(|k| alpha.rows(k * m, m).iter().copied().collect())
        .collect();
    ControlSignal::new(horizon, values)
}

#[derive(Debug, Clone, Serialize)]
pub struct BumpSample {
    pub eps: f64,
    pub error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BumpStudy {
    pub t0: f64,
    pub input: usize,
    pub samples: Vec<BumpSample>,
    /// Least-squares slope of log(error) against log(eps); absent when every error is zero.
    pub order: Option<f64>,
}

/// Applies L_T to bumps of mass one on [t0, t0 + eps] and measures the distance to the
/// transport column at t0, for eps = T / d over the given divisors.
pub fn bump_convergence(
    sys: &LiftedSystem,
    x0: &BasePoint,
    horizon: f64,
    t0: f64,
    input: usize,
    divisors: &[usize],
    segments: usize,
    cfg: &IntegratorConfig,
) -> Result<BumpStudy> {
    if input >= sys.inputs() {
        return Err(Error::invalid("bump input index out of range"));
    }
    let g = build_transport_grid(sys, x0, horizon, segments, cfg)?;
    let node = t0 / horizon * segments as f64;
    let k0 = node.round() as usize;
    if (node - k0 as f64).abs() > 1e-9 || k0 >= segments {
        return Err(Error::invalid("bump start must be a grid node before the horizon"));
    }
    let target = g.node_column(k0, input).clone();
    let mut samples = Vec::with_capacity(divisors.len());
    for &d in divisors {
        let pos = t0 / horizon * d as f64;
        let k = pos.round() as usize;
        if (pos - k as f64).abs() > 1e-9 || k >= d {
            return Err(Error::invalid(format!("t0 is not a segment boundary for eps = T/{d}")));
        }
        let bump = ControlSignal::bump(horizon, d, k, input, sys.inputs())?;
        let error = (apply_lt(&g, &bump)? - &target).norm();
        samples.push(BumpSample {
            eps: horizon / d as f64,
            error,
        });
    }
    Ok(BumpStudy {
        t0,
        input,
        order: fitted_order(&samples),
        samples,
    })
}

fn fitted_order(samples: &[BumpSample]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|s| s.error > 0.0)
        .map(|s| (s.eps.ln(), s.error.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Some(sxy / sxx)
}
