//! Flows of base vector fields, their differentials and transported fields.
//!
//! The flow differential is obtained from the variational equation
//! `J' = J_Y(phi_t(x0)) J`, `J(0) = I`, integrated jointly with the flow by
//! fixed-step RK4.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lift::base_lie_bracket;
use crate::manifold::{BasePoint, VectorField};

/// Largest bracket depth accepted by [`transported_derivatives`].
pub const MAX_TRANSPORT_ORDER: usize = 6;

/// Condition number above which a flow differential is treated as singular.
const SINGULAR_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub step: f64,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            step: 1e-3,
            max_steps: 1_000_000,
        }
    }
}

impl IntegratorConfig {
    pub fn with_step(step: f64) -> Self {
        Self {
            step,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) || !self.step.is_finite() {
            return Err(Error::invalid("integrator step must be positive"));
        }
        Ok(())
    }

    /// Number of RK4 steps covering `span` with steps no longer than `self.step`.
    pub(crate) fn steps_for(&self, span: f64) -> usize {
        ((span.abs() / self.step - 1e-9).ceil() as usize).max(1)
    }
}

/// One classical RK4 step of `y' = f(t, y)`.
pub(crate) fn rk4_step<F>(f: &F, t: f64, y: &DVector<f64>, h: f64) -> Result<DVector<f64>>
where
    F: Fn(f64, &DVector<f64>) -> Result<DVector<f64>>,
{
    let k1 = f(t, y)?;
    let k2 = f(t + h / 2.0, &(y + &k1 * (h / 2.0)))?;
    let k3 = f(t + h / 2.0, &(y + &k2 * (h / 2.0)))?;
    let k4 = f(t + h, &(y + &k3 * h))?;
    Ok(y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0))
}

/// Integrates through the increasing (or decreasing) `nodes`, hitting each one exactly,
/// and returns the state at every node. `substeps[k]` RK4 steps span node k to k+1.
pub(crate) fn integrate_nodes<F>(
    f: &F,
    y0: DVector<f64>,
    nodes: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Vec<DVector<f64>>>
where
    F: Fn(f64, &DVector<f64>) -> Result<DVector<f64>>,
{
    cfg.validate()?;
    let needed: usize = nodes.windows(2).map(|w| cfg.steps_for(w[1] - w[0])).sum();
    if needed > cfg.max_steps {
        return Err(Error::StepBudget {
            needed,
            budget: cfg.max_steps,
        });
    }
    let mut out = Vec::with_capacity(nodes.len());
    let mut y = y0;
    out.push(y.clone());
    for w in nodes.windows(2) {
        let (a, b) = (w[0], w[1]);
        let m = cfg.steps_for(b - a);
        let h = (b - a) / m as f64;
        for s in 0..m {
            y = rk4_step(f, a + s as f64 * h, &y, h)?;
        }
        out.push(y.clone());
    }
    Ok(out)
}

/// Turns a domain error raised inside the right-hand side into a domain-exit error at `t`.
pub(crate) fn exit_at(t: f64) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::Domain { chart, .. } => Error::DomainExit { chart, time: t },
        other => other,
    }
}

/// Samples of the flow phi_t(x0), optionally with the flow differential at every node.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowResult {
    pub times: Vec<f64>,
    pub states: Vec<BasePoint>,
    pub jacobians: Option<Vec<DMatrix<f64>>>,
}

impl FlowResult {
    pub fn final_state(&self) -> &BasePoint {
        self.states.last().expect("flow has at least one node")
    }

    pub fn final_jacobian(&self) -> Option<&DMatrix<f64>> {
        self.jacobians.as_ref().and_then(|j| j.last())
    }
}

/// Uniform grid `0, T/m, ..., T` with the coarsest m whose spacing is at most `step`.
pub fn step_grid(horizon: f64, cfg: &IntegratorConfig) -> Vec<f64> {
    if horizon == 0.0 {
        return vec![0.0];
    }
    let m = cfg.steps_for(horizon);
    (0..=m).map(|k| horizon * k as f64 / m as f64).collect()
}

/// Integrates x' = Y(x) from x0 (T may be negative) and records every RK4 node.
pub fn flow(field: &VectorField, x0: &BasePoint, horizon: f64, cfg: &IntegratorConfig) -> Result<FlowResult> {
    flow_at(field, x0, &step_grid(horizon, cfg), cfg, false)
}

/// Flow (and optionally its differential) recorded at the given times, which must start at 0.
pub fn flow_at(
    field: &VectorField,
    x0: &BasePoint,
    times: &[f64],
    cfg: &IntegratorConfig,
    with_jacobian: bool,
) -> Result<FlowResult> {
    field.chart().check(x0.as_slice())?;
    if times.first() != Some(&0.0) {
        return Err(Error::invalid("flow sample times must start at 0"));
    }
    let n = field.dim();
    if !with_jacobian {
        let rhs = |t: f64, x: &DVector<f64>| field.eval(x).map_err(exit_at(t));
        let states = integrate_nodes(&rhs, x0.clone(), times, cfg)?;
        return Ok(FlowResult {
            times: times.to_vec(),
            states,
            jacobians: None,
        });
    }
    // Augmented state (x, vec(J)) with J stored column-major.
    let rhs = |t: f64, z: &DVector<f64>| -> Result<DVector<f64>> {
        let x = z.rows(0, n).into_owned();
        let j = DMatrix::from_column_slice(n, n, &z.as_slice()[n..]);
        let dx = field.eval(&x).map_err(exit_at(t))?;
        let dj = field.jacobian(&x).map_err(exit_at(t))? * j;
        let mut out = DVector::zeros(n + n * n);
        out.rows_mut(0, n).copy_from(&dx);
        out.as_mut_slice()[n..].copy_from_slice(dj.as_slice());
        Ok(out)
    };
    let mut z0 = DVector::zeros(n + n * n);
    z0.rows_mut(0, n).copy_from(x0);
    for i in 0..n {
        z0[n + i * n + i] = 1.0;
    }
    let zs = integrate_nodes(&rhs, z0, times, cfg)?;
    let states = zs.iter().map(|z| z.rows(0, n).into_owned()).collect();
    let jacobians = zs
        .iter()
        .map(|z| DMatrix::from_column_slice(n, n, &z.as_slice()[n..]))
        .collect();
    Ok(FlowResult {
        times: times.to_vec(),
        states,
        jacobians: Some(jacobians),
    })
}

/// (d phi_T)_{x0} from the variational equation.
pub fn flow_differential(
    field: &VectorField,
    x0: &BasePoint,
    horizon: f64,
    cfg: &IntegratorConfig,
) -> Result<DMatrix<f64>> {
    let res = flow_at(field, x0, &step_grid(horizon, cfg), cfg, true)?;
    Ok(res.final_jacobian().expect("jacobians requested").clone())
}

/// Solves `jac w = rhs`, refusing numerically singular differentials.
pub(crate) fn solve_differential(jac: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    let sv = jac.singular_values();
    let (max, min) = (sv.max(), sv.min());
    let condition = if min > 0.0 { max / min } else { f64::INFINITY };
    if condition > SINGULAR_CONDITION {
        return Err(Error::SingularJacobian { condition });
    }
    jac.clone()
        .lu()
        .solve(rhs)
        .ok_or(Error::SingularJacobian { condition })
}

/// (phi_{-t})_* X (x0) = (d phi_t)_{x0}^{-1} X(phi_t(x0)), a vector in T_{x0}M.
pub fn transported_field(
    drift: &VectorField,
    field: &VectorField,
    x0: &BasePoint,
    t: f64,
    cfg: &IntegratorConfig,
) -> Result<DVector<f64>> {
    let res = flow_at(drift, x0, &step_grid(t, cfg), cfg, true)?;
    transported_from(&res, field, res.times.len() - 1)
}

/// Transported field at node `k` of a flow that carries its differentials.
pub fn transported_from(flow: &FlowResult, field: &VectorField, k: usize) -> Result<DVector<f64>> {
    let jac = &flow
        .jacobians
        .as_ref()
        .ok_or_else(|| Error::invalid("flow was computed without differentials"))?[k];
    solve_differential(jac, &field.eval(&flow.states[k])?)
}

/// Iterated brackets ad_Y^k X for k = 0..=k_max, as vector fields.
pub fn ad_iterates(drift: &VectorField, field: &VectorField, k_max: usize) -> Result<Vec<VectorField>> {
    let mut out = vec![field.clone()];
    for _ in 0..k_max {
        let next = base_lie_bracket(drift, out.last().expect("non-empty"))?;
        out.push(next);
    }
    Ok(out)
}

/// Taylor data of t -> (phi_{-t})_* X (x0) at t = 0: entry k is ad_Y^k X (x0),
/// with ad_Y X = [Y, X] = J_X Y - J_Y X.
pub fn transported_derivatives(
    drift: &VectorField,
    field: &VectorField,
    x0: &BasePoint,
    k_max: usize,
) -> Result<Vec<DVector<f64>>> {
    if k_max > MAX_TRANSPORT_ORDER {
        return Err(Error::invalid(format!(
            "transport derivative order {k_max} exceeds {MAX_TRANSPORT_ORDER}"
        )));
    }
    ad_iterates(drift, field, k_max)?
        .iter()
        .map(|z| z.eval(x0))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::ChartManifold;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn r2() -> ChartManifold {
        ChartManifold::euclidean(2).unwrap()
    }

    fn shear() -> VectorField {
        VectorField::from_exprs("Y", r2(), &["0", "x1"]).unwrap()
    }

    fn p(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    fn nonlinear() -> VectorField {
        VectorField::from_exprs("N", r2(), &["sin(x2) - 0.3*x1", "cos(x1)*0.5 + 0.2*x2"]).unwrap()
    }

    #[test]
    fn rotation_flow_on_sphere() {
        let s2 = ChartManifold::sphere();
        let dphi = VectorField::coordinate(s2, 1);
        let res = flow(&dphi, &p(&[1.1, 0.3]), 2.5, &IntegratorConfig::default()).unwrap();
        let end = res.final_state();
        assert!((end[0] - 1.1).abs() < 1e-10);
        assert!((end[1] - 2.8).abs() < 1e-10);
    }

    #[test]
    fn shear_flow_and_identity_flow() {
        let cfg = IntegratorConfig::default();
        let res = flow(&shear(), &p(&[0.7, -1.0]), 3.0, &cfg).unwrap();
        assert!((res.final_state() - p(&[0.7, -1.0 + 3.0 * 0.7])).amax() < 1e-10);
        let still = flow(&shear(), &p(&[0.7, -1.0]), 0.0, &cfg).unwrap();
        assert_eq!(still.states, vec![p(&[0.7, -1.0])]);
        let back = flow(&shear(), &p(&[0.7, -1.0]), -2.0, &cfg).unwrap();
        assert!((back.final_state() - p(&[0.7, -2.4])).amax() < 1e-10);
    }

    #[test]
    fn shear_differential() {
        let cfg = IntegratorConfig::default();
        for t in [0.5, 1.0, 2.0] {
            let j = flow_differential(&shear(), &p(&[0.3, 0.1]), t, &cfg).unwrap();
            let expect = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, t, 1.0]);
            assert!((j - expect).amax() < 1e-9);
        }
        let j0 = flow_differential(&shear(), &p(&[0.3, 0.1]), 0.0, &cfg).unwrap();
        assert_eq!(j0, DMatrix::identity(2, 2));
    }

    #[test]
    fn constant_field_has_identity_differential() {
        // oracle: J_Y = 0 so J(t) = I solves the variational equation exactly
        let dphi = VectorField::coordinate(ChartManifold::sphere(), 1);
        for t in [0.3, 1.0, 4.0] {
            let j = flow_differential(&dphi, &p(&[1.0, 0.0]), t, &IntegratorConfig::default()).unwrap();
            assert!((j - DMatrix::identity(2, 2)).amax() < 1e-14);
        }
    }

    #[test]
    fn transport_examples() {
        let cfg = IntegratorConfig::default();
        let dx = VectorField::coordinate(r2(), 0);
        for t in [0.0, 0.25, 0.5, 1.0] {
            let w = transported_field(&shear(), &dx, &p(&[0.4, 0.2]), t, &cfg).unwrap();
            assert!((w - p(&[1.0, -t])).amax() < 1e-8);
        }
        let s2 = ChartManifold::sphere();
        let dphi = VectorField::coordinate(s2.clone(), 1);
        let dtheta = VectorField::coordinate(s2, 0);
        let w = transported_field(&dphi, &dtheta, &p(&[1.2, 0.0]), 1.7, &cfg).unwrap();
        assert!((w - p(&[1.0, 0.0])).amax() < 1e-12);
    }

    #[test]
    fn transported_derivatives_from_brackets() {
        let dx = VectorField::coordinate(r2(), 0);
        let d = transported_derivatives(&shear(), &dx, &p(&[0.5, 0.5]), 1).unwrap();
        // the transported curve is (1, -t)
        assert_eq!(d, vec![p(&[1.0, 0.0]), p(&[0.0, -1.0])]);
        let s2 = ChartManifold::sphere();
        let dphi = VectorField::coordinate(s2.clone(), 1);
        let dtheta = VectorField::coordinate(s2, 0);
        let d = transported_derivatives(&dphi, &dtheta, &p(&[1.0, 0.0]), 3).unwrap();
        assert_eq!(d[0], p(&[1.0, 0.0]));
        assert!(d[1..].iter().all(|z| z.amax() == 0.0));
        assert!(transported_derivatives(&dphi, &dtheta, &p(&[1.0, 0.0]), 7).is_err());
    }

    #[test]
    fn domain_exit_reports_time() {
        let s2 = ChartManifold::sphere();
        let dtheta = VectorField::coordinate(s2, 0);
        let err = flow(&dtheta, &p(&[3.0, 0.0]), 1.0, &IntegratorConfig::default()).unwrap_err();
        match err {
            Error::DomainExit { time, .. } => assert!(time > 0.1 && time < 0.14, "{time}"),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn step_budget_is_enforced() {
        let cfg = IntegratorConfig {
            step: 1e-3,
            max_steps: 100,
        };
        let err = flow(&shear(), &p(&[0.0, 0.0]), 1.0, &cfg).unwrap_err();
        assert!(matches!(err, Error::StepBudget { needed: 1000, budget: 100 }), "{err:?}");
    }

    #[test]
    fn group_law_and_chain_rule() {
        let cfg = IntegratorConfig::default();
        let y = nonlinear();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..10 {
            let x0 = p(&[rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]);
            let (s, t): (f64, f64) = (rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
            let direct = flow(&y, &x0, s + t, &cfg).unwrap();
            let mid = flow(&y, &x0, s, &cfg).unwrap();
            let composed = flow(&y, mid.final_state(), t, &cfg).unwrap();
            assert!((direct.final_state() - composed.final_state()).amax() < 1e-8);

            let j_total = flow_differential(&y, &x0, s + t, &cfg).unwrap();
            let j_first = flow_differential(&y, &x0, s, &cfg).unwrap();
            let j_second = flow_differential(&y, mid.final_state(), t, &cfg).unwrap();
            assert!((j_total - j_second * j_first).amax() < 1e-7);
        }
    }

    #[test]
    fn transport_derivative_matches_bracket() {
        let cfg = IntegratorConfig::with_step(1e-4);
        let y = nonlinear();
        let x = VectorField::from_exprs("X", r2(), &["1 + 0.2*x2", "sin(x1)"]).unwrap();
        let x0 = p(&[0.3, -0.4]);
        let h = 1e-3;
        let plus = transported_field(&y, &x, &x0, h, &cfg).unwrap();
        let minus = transported_field(&y, &x, &x0, -h, &cfg).unwrap();
        let fd = (plus - minus) / (2.0 * h);
        let d = transported_derivatives(&y, &x, &x0, 1).unwrap();
        assert!((&fd - &d[1]).amax() < 1e-4, "{fd} {}", d[1]);
    }

    #[test]
    fn differential_is_invertible() {
        let cfg = IntegratorConfig::default();
        let j = flow_differential(&nonlinear(), &p(&[0.2, 0.1]), 5.0, &cfg).unwrap();
        assert!(j.singular_values().min() > 1e-10);
    }
}
