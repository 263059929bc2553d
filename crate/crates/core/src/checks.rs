//! Numerical battery for the lift identities on a family of vector fields.
//!
//! Every bracket here is evaluated from finite differences of the lifted components and
//! compared with the closed form built from the base bracket, so a pass says something
//! about both.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::{flow_differential, flow, IntegratorConfig};
use crate::lift::{
    base_lie_bracket, complete_lift, lie_bracket_numeric, lifted_derivative, vertical_lift, FunctionLift,
    ScalarField,
};
use crate::manifold::{dprojection, ChartManifold, DiffConfig, TangentPoint, VectorField};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BatteryConfig {
    pub samples: usize,
    pub seed: u64,
    /// Distance kept from finite chart bounds when sampling base points.
    pub margin: f64,
    /// Fiber coordinates are drawn from [-fiber_scale, fiber_scale].
    pub fiber_scale: f64,
    pub diff: DiffConfig,
}

impl Default for BatteryConfig {
    fn default() -> Self {
        Self {
            samples: 50,
            seed: 42,
            margin: 0.2,
            fiber_scale: 1.0,
            diff: DiffConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub identity: String,
    pub tolerance: f64,
    pub max_residual: f64,
    pub evaluations: usize,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityReport {
    pub fields: Vec<String>,
    pub samples: usize,
    pub seed: u64,
    pub checks: Vec<IdentityCheck>,
    pub all_passed: bool,
}

impl IdentityReport {
    pub fn check(&self, identity: &str) -> Option<&IdentityCheck> {
        self.checks.iter().find(|c| c.identity == identity)
    }
}

pub const VV: &str = "[X^v, Y^v] = 0";
pub const CV: &str = "[X^c, Y^v] = [X, Y]^v";
pub const VC: &str = "[X^v, Y^c] = [X, Y]^v";
pub const CC: &str = "[X^c, Y^c] = [X, Y]^c";
pub const PROJECTION: &str = "dpi(X^c) = X(pi)";
pub const LINEAR_V: &str = "(aX + bY)^v = a X^v + b Y^v";
pub const LINEAR_C: &str = "(aX + bY)^c = a X^c + b Y^c";
pub const DERIV_VV: &str = "X^v(f^v) = 0";
pub const DERIV_VC: &str = "X^v(f^c) = (Xf)^v";
pub const DERIV_CV: &str = "X^c(f^v) = (Xf)^v";
pub const DERIV_CC: &str = "X^c(f^c) = (Xf)^c";
pub const FLOW_V: &str = "d/dt (x, y + t X(x)) = X^v";
pub const FLOW_C: &str = "d/dt (phi_t(x), d phi_t y) = X^c";

struct Accumulator {
    identity: &'static str,
    tolerance: f64,
    max_residual: f64,
    evaluations: usize,
}

impl Accumulator {
    fn new(identity: &'static str, tolerance: f64) -> Self {
        Self {
            identity,
            tolerance,
            max_residual: 0.0,
            evaluations: 0,
        }
    }

    fn record(&mut self, residual: f64) {
        self.evaluations += 1;
        // NaN must not hide behind max()
        if residual.is_nan() || residual > self.max_residual {
            self.max_residual = residual;
        }
    }

    fn finish(self) -> IdentityCheck {
        IdentityCheck {
            identity: self.identity.to_string(),
            tolerance: self.tolerance,
            passed: self.max_residual <= self.tolerance,
            max_residual: self.max_residual,
            evaluations: self.evaluations,
        }
    }
}

/// Seeded sample points of TM.
pub fn sample_tangent_points(chart: &ChartManifold, cfg: &BatteryConfig) -> Vec<TangentPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    (0..cfg.samples)
        .map(|_| {
            let base = chart.sample_point(&mut rng, cfg.margin);
            let fiber = DVector::from_fn(chart.dim(), |_, _| rng.random_range(-cfg.fiber_scale..cfg.fiber_scale));
            TangentPoint { base, fiber }
        })
        .collect()
}

/// A fixed smooth test function used when the caller supplies none.
pub fn default_test_function(chart: &ChartManifold) -> Result<ScalarField> {
    let text = if chart.dim() >= 2 {
        "sin(x1)*x2 + cos(x2) + 0.5*x1*x1".to_string()
    } else {
        "sin(x1) + 0.5*x1*x1".to_string()
    };
    ScalarField::from_expr(chart.clone(), &text)
}

pub fn lift_identity_battery(
    fields: &[VectorField],
    functions: &[ScalarField],
    cfg: &BatteryConfig,
) -> Result<IdentityReport> {
    if fields.len() < 2 {
        return Err(Error::invalid("the identity battery needs at least two vector fields"));
    }
    if cfg.samples == 0 {
        return Err(Error::invalid("the identity battery needs at least one sample"));
    }
    let chart = fields[0].chart().clone();
    if let Some(bad) = fields.iter().find(|f| f.dim() != chart.dim()) {
        return Err(Error::Dimension {
            expected: chart.dim(),
            got: bad.dim(),
        });
    }
    let default_fn;
    let functions = if functions.is_empty() {
        default_fn = [default_test_function(&chart)?];
        &default_fn[..]
    } else {
        functions
    };
    let points = sample_tangent_points(&chart, cfg);
    let n = chart.dim();
    let diff = cfg.diff;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));

    let mut vv = Accumulator::new(VV, 1e-6);
    let mut cv = Accumulator::new(CV, 1e-5);
    let mut vc = Accumulator::new(VC, 1e-5);
    let mut cc = Accumulator::new(CC, 1e-5);
    let mut proj = Accumulator::new(PROJECTION, 1e-9);
    let mut lin_v = Accumulator::new(LINEAR_V, 1e-12);
    let mut lin_c = Accumulator::new(LINEAR_C, 1e-6);
    let mut d_vv = Accumulator::new(DERIV_VV, 1e-5);
    let mut d_vc = Accumulator::new(DERIV_VC, 1e-5);
    let mut d_cv = Accumulator::new(DERIV_CV, 1e-5);
    let mut d_cc = Accumulator::new(DERIV_CC, 1e-5);
    let mut flow_v = Accumulator::new(FLOW_V, 1e-6);
    let mut flow_c = Accumulator::new(FLOW_C, 1e-6);

    let verticals: Vec<_> = fields.iter().map(vertical_lift).collect();
    let completes: Vec<_> = fields.iter().map(complete_lift).collect();

    for i in 0..fields.len() {
        for j in (i + 1)..fields.len() {
            let (x, y) = (&fields[i], &fields[j]);
            let bracket = base_lie_bracket(x, y)?;
            let (bv, bc) = (vertical_lift(&bracket), complete_lift(&bracket));
            let (alpha, beta) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            let combo = VectorField::linear_combination(alpha, x, beta, y)?;
            let (combo_v, combo_c) = (vertical_lift(&combo), complete_lift(&combo));
            for v in &points {
                let r = lie_bracket_numeric(&verticals[i], &verticals[j], v, diff)?;
                vv.record(r.amax());
                let r = lie_bracket_numeric(&completes[i], &verticals[j], v, diff)? - bv.eval(v)?;
                cv.record(r.amax());
                let r = lie_bracket_numeric(&verticals[i], &completes[j], v, diff)? - bv.eval(v)?;
                vc.record(r.amax());
                let r = lie_bracket_numeric(&completes[i], &completes[j], v, diff)? - bc.eval(v)?;
                cc.record(r.amax());

                let lhs = combo_v.eval(v)?;
                let rhs = verticals[i].eval(v)? * alpha + verticals[j].eval(v)? * beta;
                lin_v.record((lhs - rhs).amax());
                let lhs = combo_c.eval(v)?;
                let rhs = completes[i].eval(v)? * alpha + completes[j].eval(v)? * beta;
                lin_c.record((lhs - rhs).amax());
            }
        }
    }

    let step = IntegratorConfig::with_step(1e-4);
    let h = 1e-4;
    for (k, x) in fields.iter().enumerate() {
        for v in &points {
            let xc = completes[k].eval(v)?;
            proj.record((dprojection(v, &xc)? - x.eval(&v.base)?).amax());

            // the curve (x, y + t X(x)) differentiated by central differences
            let xv = verticals[k].eval(v)?;
            let lift_x = x.eval(&v.base)?;
            let curve = |t: f64| {
                let mut p = v.stacked();
                p.rows_mut(n, n).axpy(t, &lift_x, 1.0);
                p
            };
            flow_v.record(((curve(h) - curve(-h)) / (2.0 * h) - &xv).amax());

            let flowed = |t: f64| -> Result<DVector<f64>> {
                let end = flow(x, &v.base, t, &step)?;
                let jac = flow_differential(x, &v.base, t, &step)?;
                let mut p = DVector::zeros(2 * n);
                p.rows_mut(0, n).copy_from(end.final_state());
                p.rows_mut(n, n).copy_from(&(jac * &v.fiber));
                Ok(p)
            };
            let fd = (flowed(h)? - flowed(-h)?) / (2.0 * h);
            flow_c.record((fd - xc).amax());
        }
        for f in functions {
            let xf = f.along(x);
            let (fv, fc) = (FunctionLift::vertical(f.clone()), FunctionLift::complete(f.clone()));
            let (xfv, xfc) = (FunctionLift::vertical(xf.clone()), FunctionLift::complete(xf));
            for v in &points {
                d_vv.record(lifted_derivative(&verticals[k], &fv, v, diff)?.abs());
                d_vc.record((lifted_derivative(&verticals[k], &fc, v, diff)? - xfv.eval(v)?).abs());
                d_cv.record((lifted_derivative(&completes[k], &fv, v, diff)? - xfv.eval(v)?).abs());
                d_cc.record((lifted_derivative(&completes[k], &fc, v, diff)? - xfc.eval(v)?).abs());
            }
        }
    }

    let checks: Vec<IdentityCheck> = [vv, cv, vc, cc, proj, lin_v, lin_c, d_vv, d_vc, d_cv, d_cc, flow_v, flow_c]
        .into_iter()
        .map(Accumulator::finish)
        .collect();
    Ok(IdentityReport {
        fields: fields.iter().map(|f| f.name().to_string()).collect(),
        samples: points.len(),
        seed: cfg.seed,
        all_passed: checks.iter().all(|c| c.passed),
        checks,
    })
}
