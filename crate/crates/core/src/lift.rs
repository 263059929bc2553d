//! Vertical and complete lifts of vector fields to TM, function lifts and Lie brackets.
//!
//! In induced coordinates (x, y) the lifts of X = X^i d/dx^i are
//!
//! ```text
//! X^v = X^i(x) d/dy^i
//! X^c = X^i(x) d/dx^i + y^j dX^i/dx^j (x) d/dy^i
//! ```
//!
//! and lifted fields are represented by their 2n components in the frame
//! (d/dx^1..d/dx^n, d/dy^1..d/dy^n).

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::manifold::{
    central_jacobian, coordinate_names, BasePoint, ChartManifold, DiffConfig, TangentPoint,
    VectorField,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LiftKind {
    Vertical,
    Complete,
    General,
}

type LiftedFn = dyn Fn(&TangentPoint) -> Result<DVector<f64>> + Send + Sync;

/// A vector field on TM with components in the induced frame.
#[derive(Clone)]
pub struct LiftedVectorField {
    name: String,
    kind: LiftKind,
    source: Option<VectorField>,
    chart: ChartManifold,
    coeffs: Arc<LiftedFn>,
}

impl fmt::Debug for LiftedVectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LiftedVectorField")
            .field("name", &self.name)
            .field("kind", &self.kind)
            .field("source", &self.source.as_ref().map(VectorField::name))
            .finish()
    }
}

impl LiftedVectorField {
    /// A field on TM given directly by its 2n components, e.g. fiber dynamics.
    pub fn general<F>(name: impl Into<String>, chart: ChartManifold, coeffs: F) -> Self
    where
        F: Fn(&TangentPoint) -> DVector<f64> + Send + Sync + 'static,
    {
        let c = chart.clone();
        Self {
            name: name.into(),
            kind: LiftKind::General,
            source: None,
            chart,
            coeffs: Arc::new(move |v| {
                c.check(v.base.as_slice())?;
                Ok(coeffs(v))
            }),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> LiftKind {
        self.kind
    }

    pub fn source(&self) -> Option<&VectorField> {
        self.source.as_ref()
    }

    pub fn chart(&self) -> &ChartManifold {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn eval(&self, v: &TangentPoint) -> Result<DVector<f64>> {
        if v.dim() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: v.dim(),
            });
        }
        let out = (self.coeffs)(v)?;
        if out.len() != 2 * self.dim() {
            return Err(Error::Dimension {
                expected: 2 * self.dim(),
                got: out.len(),
            });
        }
        Ok(out)
    }

    /// Jacobian of the 2n components with respect to the stacked coordinates (x, y).
    pub fn numeric_jacobian(&self, v: &TangentPoint, diff: DiffConfig) -> Result<DMatrix<f64>> {
        central_jacobian(|p| self.eval(&TangentPoint::from_stacked(p)), &v.stacked(), diff)
    }
}

/// X^v = (0, X(x)).
pub fn vertical_lift(field: &VectorField) -> LiftedVectorField {
    let n = field.dim();
    let f = field.clone();
    LiftedVectorField {
        name: format!("{}^v", field.name()),
        kind: LiftKind::Vertical,
        source: Some(field.clone()),
        chart: field.chart().clone(),
        coeffs: Arc::new(move |v| {
            let x = f.eval(&v.base)?;
            let mut out = DVector::zeros(2 * n);
            out.rows_mut(n, n).copy_from(&x);
            Ok(out)
        }),
    }
}

/// X^c = (X(x), J_X(x) y).
pub fn complete_lift(field: &VectorField) -> LiftedVectorField {
    let n = field.dim();
    let f = field.clone();
    LiftedVectorField {
        name: format!("{}^c", field.name()),
        kind: LiftKind::Complete,
        source: Some(field.clone()),
        chart: field.chart().clone(),
        coeffs: Arc::new(move |v| {
            let x = f.eval(&v.base)?;
            let jy = f.jacobian(&v.base)? * &v.fiber;
            let mut out = DVector::zeros(2 * n);
            out.rows_mut(0, n).copy_from(&x);
            out.rows_mut(n, n).copy_from(&jy);
            Ok(out)
        }),
    }
}

/// [X, Y] = J_Y X - J_X Y, as a new vector field.
///
/// Symbolic operands give a symbolic bracket, so iterated brackets stay exact.
pub fn base_lie_bracket(x: &VectorField, y: &VectorField) -> Result<VectorField> {
    if x.dim() != y.dim() {
        return Err(Error::Dimension {
            expected: x.dim(),
            got: y.dim(),
        });
    }
    let n = x.dim();
    let name = format!("[{}, {}]", x.name(), y.name());
    if let (Some(ex), Some(ey)) = (x.expressions(), y.expressions()) {
        let exprs = (0..n)
            .map(|i| {
                (0..n).fold(Expr::Const(0.0), |acc, j| {
                    acc + ey[i].derivative(j) * ex[j].clone() - ex[i].derivative(j) * ey[j].clone()
                })
            })
            .collect();
        return Ok(VectorField::from_parsed(name, x.chart().clone(), exprs));
    }
    let (xa, ya) = (x.clone(), y.clone());
    let diff = x.diff();
    let chart = x.chart().clone();
    let xc = x.raw_coeffs();
    let yc = y.raw_coeffs();
    // Evaluation goes through the fields so Jacobians use their own analytic or numeric route.
    let bracket = move |p: &DVector<f64>| -> DVector<f64> {
        match (xa.jacobian(p), ya.jacobian(p)) {
            (Ok(jx), Ok(jy)) => jy * xc(p) - jx * yc(p),
            _ => DVector::from_element(p.len(), f64::NAN),
        }
    };
    Ok(VectorField::new(name, chart, bracket).with_diff(diff))
}

/// Closed-form bracket of two lifted fields when both kinds are vertical or complete lifts.
fn closed_form_bracket(
    a: &LiftedVectorField,
    b: &LiftedVectorField,
) -> Result<Option<LiftedVectorField>> {
    use LiftKind::*;
    let (Some(x), Some(y)) = (a.source(), b.source()) else {
        return Ok(None);
    };
    Ok(match (a.kind, b.kind) {
        (Vertical, Vertical) => Some(vertical_lift(&VectorField::zero(a.chart.clone()))),
        // [X^c, Y^v] = [X, Y]^v and [X^v, Y^c] = -[Y, X]^v = [X, Y]^v
        (Complete, Vertical) | (Vertical, Complete) => Some(vertical_lift(&base_lie_bracket(x, y)?)),
        (Complete, Complete) => Some(complete_lift(&base_lie_bracket(x, y)?)),
        _ => None,
    })
}

/// [A, B](v) = J_B A - J_A B, evaluated from finite differences of the components.
pub fn lie_bracket_numeric(
    a: &LiftedVectorField,
    b: &LiftedVectorField,
    v: &TangentPoint,
    diff: DiffConfig,
) -> Result<DVector<f64>> {
    let ja = a.numeric_jacobian(v, diff)?;
    let jb = b.numeric_jacobian(v, diff)?;
    Ok(jb * a.eval(v)? - ja * b.eval(v)?)
}

/// [A, B](v). Uses the closed-form lift identities when both kinds are known,
/// finite differences on the 2n components otherwise.
pub fn lie_bracket(
    a: &LiftedVectorField,
    b: &LiftedVectorField,
    v: &TangentPoint,
    h: f64,
) -> Result<DVector<f64>> {
    match closed_form_bracket(a, b)? {
        Some(c) => c.eval(v),
        None => lie_bracket_numeric(
            a,
            b,
            v,
            DiffConfig {
                step: h,
                richardson: false,
            },
        ),
    }
}

/// True when the d/dx block of `field` vanishes within `tol` at every sample.
pub fn is_vertical(field: &LiftedVectorField, samples: &[TangentPoint], tol: f64) -> Result<bool> {
    if samples.is_empty() {
        return Err(Error::invalid("is_vertical needs at least one sample point"));
    }
    let n = field.dim();
    for v in samples {
        if field.eval(v)?.rows(0, n).amax() > tol {
            return Ok(false);
        }
    }
    Ok(true)
}

type ScalarFn = dyn Fn(&DVector<f64>) -> f64 + Send + Sync;
type GradFn = dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync;

/// A smooth function f on the chart, with its gradient.
#[derive(Clone)]
pub struct ScalarField {
    chart: ChartManifold,
    value: Arc<ScalarFn>,
    gradient: Option<Arc<GradFn>>,
    expr: Option<Expr>,
    diff: DiffConfig,
}

impl ScalarField {
    pub fn new<F>(chart: ChartManifold, f: F) -> Self
    where
        F: Fn(&DVector<f64>) -> f64 + Send + Sync + 'static,
    {
        Self {
            chart,
            value: Arc::new(f),
            gradient: None,
            expr: None,
            diff: DiffConfig::default(),
        }
    }

    pub fn from_expr(chart: ChartManifold, text: &str) -> Result<Self> {
        let vars = coordinate_names("x", chart.dim());
        let vars: Vec<&str> = vars.iter().map(String::as_str).collect();
        let e = Expr::parse(text, &vars).map_err(|source| Error::Parse {
            context: text.to_string(),
            source,
        })?;
        Ok(Self::from_parsed(chart, e))
    }

    pub fn from_parsed(chart: ChartManifold, expr: Expr) -> Self {
        let n = chart.dim();
        let expr = expr.simplify();
        let grad: Vec<Expr> = (0..n).map(|j| expr.derivative(j)).collect();
        let e = expr.clone();
        Self {
            chart,
            value: Arc::new(move |x| e.eval(x.as_slice())),
            gradient: Some(Arc::new(move |x| {
                DVector::from_iterator(n, grad.iter().map(|g| g.eval(x.as_slice())))
            })),
            expr: Some(expr),
            diff: DiffConfig::default(),
        }
    }

    pub fn eval(&self, x: &BasePoint) -> Result<f64> {
        self.chart.check(x.as_slice())?;
        Ok((self.value)(x))
    }

    pub fn gradient(&self, x: &BasePoint) -> Result<DVector<f64>> {
        self.chart.check(x.as_slice())?;
        if let Some(g) = &self.gradient {
            return Ok(g(x));
        }
        let row = central_jacobian(|p| Ok(DVector::from_element(1, self.eval(p)?)), x, self.diff)?;
        Ok(row.row(0).transpose())
    }

    /// The derivative Xf = X^i df/dx^i as a new function.
    pub fn along(&self, field: &VectorField) -> ScalarField {
        if let (Some(e), Some(ex)) = (&self.expr, field.expressions()) {
            let xf = ex
                .iter()
                .enumerate()
                .fold(Expr::Const(0.0), |acc, (i, c)| acc + c.clone() * e.derivative(i));
            return Self::from_parsed(self.chart.clone(), xf);
        }
        let (f, x) = (self.clone(), field.clone());
        Self::new(self.chart.clone(), move |p| match (f.gradient(p), x.eval(p)) {
            (Ok(g), Ok(v)) => g.dot(&v),
            _ => f64::NAN,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FunctionLiftKind {
    /// f^v = f o pi
    Vertical,
    /// f^c(x, y) = df/dx^i (x) y^i
    Complete,
}

#[derive(Clone)]
pub struct FunctionLift {
    pub base_fn: ScalarField,
    pub kind: FunctionLiftKind,
}

impl FunctionLift {
    pub fn vertical(f: ScalarField) -> Self {
        Self {
            base_fn: f,
            kind: FunctionLiftKind::Vertical,
        }
    }

    pub fn complete(f: ScalarField) -> Self {
        Self {
            base_fn: f,
            kind: FunctionLiftKind::Complete,
        }
    }

    pub fn eval(&self, v: &TangentPoint) -> Result<f64> {
        match self.kind {
            FunctionLiftKind::Vertical => self.base_fn.eval(&v.base),
            FunctionLiftKind::Complete => Ok(self.base_fn.gradient(&v.base)?.dot(&v.fiber)),
        }
    }
}

/// Action of a lifted field on a function on TM, by a central difference along the field.
pub fn lifted_derivative(
    field: &LiftedVectorField,
    f: &FunctionLift,
    v: &TangentPoint,
    diff: DiffConfig,
) -> Result<f64> {
    let dir = field.eval(v)?;
    let p = v.stacked();
    let at = |s: f64| f.eval(&TangentPoint::from_stacked(&(&p + &dir * s)));
    let one = |h: f64| -> Result<f64> { Ok((at(h)? - at(-h)?) / (2.0 * h)) };
    let coarse = one(diff.step)?;
    if !diff.richardson {
        return Ok(coarse);
    }
    Ok((4.0 * one(diff.step / 2.0)? - coarse) / 3.0)
}
