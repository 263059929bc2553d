//! Single-chart manifolds, tangent points and vector fields in chart coordinates.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::expr::Expr;

/// Chart coordinates of a point of M.
pub type BasePoint = DVector<f64>;

/// Margin excluded from the poles of the spherical chart.
pub const S2_POLE_MARGIN: f64 = 0.01;

/// A coordinate chart of dimension `dim` whose domain is a product of open intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartManifold {
    name: String,
    bounds: Vec<(f64, f64)>,
}

impl ChartManifold {
    pub fn new(name: impl Into<String>, bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::invalid("chart dimension must be at least 1"));
        }
        if bounds.iter().any(|(lo, hi)| !(lo < hi)) {
            return Err(Error::invalid("chart bounds must satisfy lo < hi"));
        }
        Ok(Self {
            name: name.into(),
            bounds,
        })
    }

    /// All of R^n.
    pub fn euclidean(dim: usize) -> Result<Self> {
        Self::new(
            format!("R{dim}"),
            vec![(f64::NEG_INFINITY, f64::INFINITY); dim],
        )
    }

    /// Spherical chart (theta, phi) on S^2 with the poles cut away.
    pub fn sphere() -> Self {
        Self {
            name: "S2-spherical".into(),
            bounds: vec![
                (S2_POLE_MARGIN, PI - S2_POLE_MARGIN),
                (f64::NEG_INFINITY, f64::INFINITY),
            ],
        }
    }

    /// Looks up one of the built-in charts by identifier.
    pub fn builtin(id: &str) -> Result<Self> {
        match id {
            "S2-spherical" => Ok(Self::sphere()),
            _ => match id.strip_prefix('R').and_then(|d| d.parse::<usize>().ok()) {
                Some(n) if n >= 1 => Self::euclidean(n),
                _ => Err(Error::invalid(format!("unknown manifold '{id}'"))),
            },
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn in_domain(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(&self.bounds)
                .all(|(v, (lo, hi))| v.is_finite() && *v > *lo && *v < *hi)
    }

    pub fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: x.len(),
            });
        }
        if !self.in_domain(x) {
            return Err(Error::Domain {
                chart: self.name.clone(),
                point: x.to_vec(),
            });
        }
        Ok(())
    }

    /// Draws a point well inside the domain: `margin` away from finite bounds,
    /// and within [-2, 2] along unbounded coordinates.
    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R, margin: f64) -> BasePoint {
        DVector::from_iterator(
            self.dim(),
            self.bounds.iter().map(|&(lo, hi)| {
                let lo = if lo.is_finite() { lo + margin } else { -2.0 };
                let hi = if hi.is_finite() { hi - margin } else { 2.0 };
                rng.random_range(lo..hi)
            }),
        )
    }
}

/// A point of TM in induced coordinates (x, y).
#[derive(Debug, Clone, PartialEq)]
pub struct TangentPoint {
    pub base: BasePoint,
    pub fiber: DVector<f64>,
}

impl TangentPoint {
    pub fn new(base: BasePoint, fiber: DVector<f64>) -> Result<Self> {
        if base.len() != fiber.len() {
            return Err(Error::Dimension {
                expected: base.len(),
                got: fiber.len(),
            });
        }
        Ok(Self { base, fiber })
    }

    pub fn from_slices(base: &[f64], fiber: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(base), DVector::from_column_slice(fiber))
    }

    pub fn dim(&self) -> usize {
        self.base.len()
    }

    /// The point as a single 2n vector (x, y).
    pub fn stacked(&self) -> DVector<f64> {
        let n = self.dim();
        DVector::from_fn(2 * n, |i, _| {
            if i < n {
                self.base[i]
            } else {
                self.fiber[i - n]
            }
        })
    }

    pub fn from_stacked(v: &DVector<f64>) -> Self {
        let n = v.len() / 2;
        Self {
            base: v.rows(0, n).into_owned(),
            fiber: v.rows(n, n).into_owned(),
        }
    }
}

/// Canonical projection pi(x, y) = x.
pub fn project(v: &TangentPoint) -> BasePoint {
    v.base.clone()
}

/// Differential of the projection at `v`: keeps the d/dx block of `w = (a, b)`.
pub fn dprojection(v: &TangentPoint, w: &DVector<f64>) -> Result<DVector<f64>> {
    let n = v.dim();
    if w.len() != 2 * n {
        return Err(Error::Dimension {
            expected: 2 * n,
            got: w.len(),
        });
    }
    Ok(w.rows(0, n).into_owned())
}

/// Finite-difference settings shared by every numerically differentiated quantity.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DiffConfig {
    pub step: f64,
    /// One level of Richardson extrapolation on top of the central difference.
    pub richardson: bool,
}

impl Default for DiffConfig {
    fn default() -> Self {
        Self {
            step: 1e-5,
            richardson: false,
        }
    }
}

/// Central-difference Jacobian of `f` at `x`, column j = (f(x + h e_j) - f(x - h e_j)) / 2h.
pub fn central_jacobian<F>(f: F, x: &DVector<f64>, diff: DiffConfig) -> Result<DMatrix<f64>>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>>,
{
    let n = x.len();
    let one_level = |h: f64| -> Result<DMatrix<f64>> {
        let mut cols = Vec::with_capacity(n);
        for j in 0..n {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            cols.push((f(&xp)? - f(&xm)?) / (2.0 * h));
        }
        Ok(DMatrix::from_columns(&cols))
    };
    let coarse = one_level(diff.step)?;
    if !diff.richardson {
        return Ok(coarse);
    }
    let fine = one_level(diff.step / 2.0)?;
    Ok((fine * 4.0 - coarse) / 3.0)
}

/// Central-difference Jacobian of a vector field, ignoring any analytic Jacobian it carries.
pub fn numeric_jacobian(field: &VectorField, x: &BasePoint, h: f64) -> Result<DMatrix<f64>> {
    if !(h > 0.0) {
        return Err(Error::invalid("finite-difference step must be positive"));
    }
    central_jacobian(
        |p| field.eval(p),
        x,
        DiffConfig {
            step: h,
            richardson: false,
        },
    )
}

type CoeffFn = dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync;
type JacFn = dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync;

/// A smooth vector field X = X^i d/dx^i on a chart.
///
/// Fields built from expressions keep their symbolic form, which gives exact
/// Jacobians and exact iterated brackets. Closure-backed fields may supply an
/// analytic Jacobian; otherwise central differences are used.
#[derive(Clone)]
pub struct VectorField {
    name: String,
    chart: ChartManifold,
    coeffs: Arc<CoeffFn>,
    jacobian: Option<Arc<JacFn>>,
    symbolic: Option<Arc<Vec<Expr>>>,
    diff: DiffConfig,
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorField")
            .field("name", &self.name)
            .field("chart", &self.chart.name())
            .field("analytic_jacobian", &self.jacobian.is_some())
            .field("symbolic", &self.symbolic.is_some())
            .finish()
    }
}

impl VectorField {
    pub fn new<F>(name: impl Into<String>, chart: ChartManifold, coeffs: F) -> Self
    where
        F: Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            chart,
            coeffs: Arc::new(coeffs),
            jacobian: None,
            symbolic: None,
            diff: DiffConfig::default(),
        }
    }

    pub fn with_jacobian<J>(mut self, jacobian: J) -> Self
    where
        J: Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    {
        self.jacobian = Some(Arc::new(jacobian));
        self
    }

    pub fn with_diff(mut self, diff: DiffConfig) -> Self {
        self.diff = diff;
        self
    }

    /// Builds a field from one coefficient expression per coordinate, over `x1..xn`.
    pub fn from_exprs(name: impl Into<String>, chart: ChartManifold, exprs: &[&str]) -> Result<Self> {
        let name = name.into();
        let n = chart.dim();
        if exprs.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: exprs.len(),
            });
        }
        let vars = coordinate_names("x", n);
        let vars: Vec<&str> = vars.iter().map(String::as_str).collect();
        let parsed = exprs
            .iter()
            .enumerate()
            .map(|(i, s)| {
                Expr::parse(s, &vars).map_err(|source| Error::Parse {
                    context: format!("{name}[{i}]"),
                    source,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_parsed(name, chart, parsed))
    }

    /// Builds a field from already-parsed expressions whose variables index the chart coordinates.
    pub fn from_parsed(name: impl Into<String>, chart: ChartManifold, exprs: Vec<Expr>) -> Self {
        let n = exprs.len();
        let exprs: Vec<Expr> = exprs.into_iter().map(Expr::simplify).collect();
        let jac: Vec<Expr> = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| exprs[i].derivative(j))
            .collect();
        let exprs = Arc::new(exprs);
        let e = exprs.clone();
        let coeffs = move |x: &DVector<f64>| {
            DVector::from_iterator(n, e.iter().map(|c| c.eval(x.as_slice())))
        };
        let jacobian = move |x: &DVector<f64>| {
            DMatrix::from_row_iterator(n, n, jac.iter().map(|c| c.eval(x.as_slice())))
        };
        Self {
            name: name.into(),
            chart,
            coeffs: Arc::new(coeffs),
            jacobian: Some(Arc::new(jacobian)),
            symbolic: Some(exprs),
            diff: DiffConfig::default(),
        }
    }

    pub fn zero(chart: ChartManifold) -> Self {
        let n = chart.dim();
        Self::from_parsed("0", chart, vec![Expr::Const(0.0); n])
    }

    /// The coordinate field d/dx^k.
    pub fn coordinate(chart: ChartManifold, k: usize) -> Self {
        let n = chart.dim();
        let exprs = (0..n)
            .map(|i| Expr::Const(if i == k { 1.0 } else { 0.0 }))
            .collect();
        Self::from_parsed(format!("d/dx{}", k + 1), chart, exprs)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn chart(&self) -> &ChartManifold {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn diff(&self) -> DiffConfig {
        self.diff
    }

    pub fn expressions(&self) -> Option<&[Expr]> {
        self.symbolic.as_deref().map(Vec::as_slice)
    }

    pub fn has_analytic_jacobian(&self) -> bool {
        self.jacobian.is_some()
    }

    /// X(x), after checking that x lies in the chart domain.
    pub fn eval(&self, x: &BasePoint) -> Result<DVector<f64>> {
        self.chart.check(x.as_slice())?;
        let out = (self.coeffs)(x);
        if out.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: out.len(),
            });
        }
        if out.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite {
                field: self.name.clone(),
                point: x.as_slice().to_vec(),
            });
        }
        Ok(out)
    }

    /// dX^i/dx^j at x: analytic when available, central differences otherwise.
    pub fn jacobian(&self, x: &BasePoint) -> Result<DMatrix<f64>> {
        match &self.jacobian {
            Some(j) => {
                self.chart.check(x.as_slice())?;
                Ok(j(x))
            }
            None => central_jacobian(|p| self.eval(p), x, self.diff),
        }
    }

    /// alpha X + beta Y, symbolic when both operands are.
    pub fn linear_combination(alpha: f64, x: &VectorField, beta: f64, y: &VectorField) -> Result<Self> {
        if x.dim() != y.dim() {
            return Err(Error::Dimension {
                expected: x.dim(),
                got: y.dim(),
            });
        }
        let name = format!("{alpha}*{} + {beta}*{}", x.name, y.name);
        if let (Some(ex), Some(ey)) = (x.expressions(), y.expressions()) {
            let exprs = ex
                .iter()
                .zip(ey)
                .map(|(a, b)| Expr::Const(alpha) * a.clone() + Expr::Const(beta) * b.clone())
                .collect();
            return Ok(Self::from_parsed(name, x.chart.clone(), exprs));
        }
        let (fx, fy) = (x.coeffs.clone(), y.coeffs.clone());
        let mut out = Self::new(name, x.chart.clone(), move |p| fx(p) * alpha + fy(p) * beta);
        if let (Some(jx), Some(jy)) = (x.jacobian.clone(), y.jacobian.clone()) {
            out = out.with_jacobian(move |p| jx(p) * alpha + jy(p) * beta);
        }
        Ok(out.with_diff(x.diff))
    }

    pub(crate) fn raw_coeffs(&self) -> Arc<CoeffFn> {
        self.coeffs.clone()
    }
}

/// `prefix1`, `prefix2`, ... `prefix{n}`.
pub fn coordinate_names(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}
