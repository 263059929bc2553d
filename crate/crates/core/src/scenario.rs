//! JSON scenario documents consumed by the `tanlift` command line.
//!
//! ```json
//! {
//!   "schema": "tanlift-scenario/1",
//!   "name": "shear",
//!   "manifold": "R2",
//!   "fields": { "Y": ["0", "x1"], "X1": ["1", "0"] },
//!   "lifted_system": {
//!     "drift": "Y",
//!     "controls": ["X1"],
//!     "initial": { "base": [1.0, 0.0], "fiber": [0.0, 0.0] },
//!     "horizon": 1.0,
//!     "control": { "values": [[1.0]] }
//!   },
//!   "run": ["simulate", "controllability"]
//! }
//! ```
//!
//! Field components are expressions over `x1..xn`. Fiber dynamics of a general vertical
//! system are expressions over `x1..xn`, `y1..yn` and `u1..um`.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::control::ControlSignal;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::lift::ScalarField;
use crate::lifted::LiftedSystem;
use crate::manifold::{coordinate_names, ChartManifold, TangentPoint, VectorField};
use crate::vertical::{FiberDynamics, VerticalAffineSystem};

pub const SCHEMA: &str = "tanlift-scenario/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema: String,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub manifold: String,
    pub fields: BTreeMap<String, Vec<String>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub functions: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lift_check: Option<LiftCheckSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertical_system: Option<VerticalSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lifted_system: Option<LiftedSpec>,
    /// Commands this scenario is meant for; the golden regression suite replays them.
    #[serde(default)]
    pub run: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSpec>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LiftCheckSpec {
    pub fields: Option<Vec<String>>,
    pub samples: Option<usize>,
    pub margin: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    pub base: Vec<f64>,
    pub fiber: Vec<f64>,
}

/// Piecewise-constant control on equal segments of the horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlSpec {
    pub values: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerticalSpec {
    /// Defaults to the zero field.
    pub drift: Option<String>,
    #[serde(default)]
    pub controls: Vec<String>,
    pub fiber_dynamics: Option<Vec<String>>,
    pub initial: InitialSpec,
    pub horizon: f64,
    pub control: Option<ControlSpec>,
    /// Fiber vector over the initial base point.
    pub target: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    /// Defaults to the drift endpoint phi_T(x0).
    pub base: Option<Vec<f64>>,
    pub fiber: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpSpec {
    pub t0: Option<f64>,
    #[serde(default)]
    pub input: usize,
    pub divisors: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LiftedSpec {
    pub drift: String,
    pub controls: Vec<String>,
    pub initial: InitialSpec,
    pub horizon: f64,
    pub control: Option<ControlSpec>,
    /// Horizons for the controllability report; defaults to `[horizon]`.
    pub horizons: Option<Vec<f64>>,
    /// Deepest bracket level scanned; defaults to twice the dimension.
    pub k_max: Option<usize>,
    pub target: Option<TargetSpec>,
    pub bump: Option<BumpSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: Option<String>,
}

pub struct VerticalSetup {
    pub affine: Option<VerticalAffineSystem>,
    pub dynamics: Option<FiberDynamics>,
    pub initial: TangentPoint,
    pub horizon: f64,
    /// None when the horizon is zero.
    pub control: Option<ControlSignal>,
    pub target: Option<DVector<f64>>,
}

pub struct LiftedSetup {
    pub system: LiftedSystem,
    pub initial: TangentPoint,
    pub horizon: f64,
    pub control: Option<ControlSignal>,
    pub horizons: Vec<f64>,
    pub k_max: usize,
    pub target: Option<TargetSpec>,
    pub bump: Option<BumpSpec>,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| {
            Error::invalid(format!("scenario JSON, line {} column {}: {e}", e.line(), e.column()))
        })?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::invalid(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Schema tag, field references and horizon signs.
    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA {
            return Err(Error::invalid(format!(
                "unsupported schema '{}', expected '{SCHEMA}'",
                self.schema
            )));
        }
        let known = |name: &String| -> Result<()> {
            if self.fields.contains_key(name) {
                Ok(())
            } else {
                Err(Error::invalid(format!("field '{name}' is not defined")))
            }
        };
        if let Some(lc) = &self.lift_check {
            lc.fields.iter().flatten().try_for_each(known)?;
        }
        if let Some(v) = &self.vertical_system {
            v.drift.iter().try_for_each(known)?;
            v.controls.iter().try_for_each(known)?;
            if !(v.horizon >= 0.0) {
                return Err(Error::invalid("vertical_system.horizon must be non-negative"));
            }
            if v.controls.is_empty() && v.fiber_dynamics.is_none() {
                return Err(Error::invalid("vertical_system needs controls or fiber_dynamics"));
            }
        }
        if let Some(l) = &self.lifted_system {
            known(&l.drift)?;
            l.controls.iter().try_for_each(known)?;
            if !(l.horizon >= 0.0) {
                return Err(Error::invalid("lifted_system.horizon must be non-negative"));
            }
            if l.horizons.iter().flatten().any(|t| !(*t > 0.0)) {
                return Err(Error::invalid("lifted_system.horizons must be positive"));
            }
        }
        Ok(())
    }

    pub fn chart(&self) -> Result<ChartManifold> {
        ChartManifold::builtin(&self.manifold)
    }

    pub fn build_fields(&self) -> Result<BTreeMap<String, VectorField>> {
        let chart = self.chart()?;
        self.fields
            .iter()
            .map(|(name, comps)| {
                let comps: Vec<&str> = comps.iter().map(String::as_str).collect();
                Ok((name.clone(), VectorField::from_exprs(name.clone(), chart.clone(), &comps)?))
            })
            .collect()
    }

    pub fn build_functions(&self) -> Result<Vec<ScalarField>> {
        let chart = self.chart()?;
        self.functions
            .values()
            .map(|text| ScalarField::from_expr(chart.clone(), text))
            .collect()
    }

    pub fn vertical(&self, fields: &BTreeMap<String, VectorField>) -> Result<Option<VerticalSetup>> {
        let Some(spec) = &self.vertical_system else {
            return Ok(None);
        };
        let chart = self.chart()?;
        let n = chart.dim();
        let initial = initial_point(&chart, &spec.initial)?;
        let pick = |name: &String| fields[name].clone();
        let affine = if spec.controls.is_empty() {
            None
        } else {
            let drift = spec.drift.as_ref().map(pick).unwrap_or_else(|| VectorField::zero(chart.clone()));
            Some(VerticalAffineSystem::new(drift, spec.controls.iter().map(pick).collect())?)
        };
        let inputs = match &spec.control {
            Some(c) => c.values.first().map(Vec::len).unwrap_or(0),
            None => spec.controls.len().max(1),
        };
        if let Some(sys) = &affine {
            if inputs != sys.inputs() {
                return Err(Error::Dimension {
                    expected: sys.inputs(),
                    got: inputs,
                });
            }
        }
        let dynamics = spec
            .fiber_dynamics
            .as_ref()
            .map(|comps| parse_fiber_dynamics(comps, n, inputs))
            .transpose()?;
        let control = control_signal(spec.control.as_ref(), spec.horizon, inputs)?;
        let target = spec
            .target
            .as_ref()
            .map(|t| {
                if t.len() != n {
                    return Err(Error::Dimension {
                        expected: n,
                        got: t.len(),
                    });
                }
                Ok(DVector::from_column_slice(t))
            })
            .transpose()?;
        Ok(Some(VerticalSetup {
            affine,
            dynamics,
            initial,
            horizon: spec.horizon,
            control,
            target,
        }))
    }

    pub fn lifted(&self, fields: &BTreeMap<String, VectorField>) -> Result<Option<LiftedSetup>> {
        let Some(spec) = &self.lifted_system else {
            return Ok(None);
        };
        let chart = self.chart()?;
        let initial = initial_point(&chart, &spec.initial)?;
        let system = LiftedSystem::new(
            fields[&spec.drift].clone(),
            spec.controls.iter().map(|c| fields[c].clone()).collect(),
        )?;
        let control = control_signal(spec.control.as_ref(), spec.horizon, system.inputs())?;
        if let Some(u) = &control {
            if u.inputs() != system.inputs() {
                return Err(Error::Dimension {
                    expected: system.inputs(),
                    got: u.inputs(),
                });
            }
        }
        let horizons = spec.horizons.clone().unwrap_or_else(|| vec![spec.horizon]);
        Ok(Some(LiftedSetup {
            k_max: spec.k_max.unwrap_or(2 * chart.dim()),
            system,
            initial,
            horizon: spec.horizon,
            control,
            horizons,
            target: spec.target.clone(),
            bump: spec.bump.clone(),
        }))
    }
}

fn initial_point(chart: &ChartManifold, spec: &InitialSpec) -> Result<TangentPoint> {
    if spec.base.len() != chart.dim() {
        return Err(Error::Dimension {
            expected: chart.dim(),
            got: spec.base.len(),
        });
    }
    chart.check(&spec.base)?;
    TangentPoint::from_slices(&spec.base, &spec.fiber)
}

fn control_signal(spec: Option<&ControlSpec>, horizon: f64, inputs: usize) -> Result<Option<ControlSignal>> {
    if horizon == 0.0 {
        return Ok(None);
    }
    Ok(Some(match spec {
        Some(c) => ControlSignal::new(horizon, c.values.clone())?,
        None => ControlSignal::zero(horizon, inputs.max(1), 1)?,
    }))
}

fn parse_fiber_dynamics(comps: &[String], n: usize, inputs: usize) -> Result<FiberDynamics> {
    if comps.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: comps.len(),
        });
    }
    let names: Vec<String> = coordinate_names("x", n)
        .into_iter()
        .chain(coordinate_names("y", n))
        .chain(coordinate_names("u", inputs))
        .collect();
    let vars: Vec<&str> = names.iter().map(String::as_str).collect();
    let exprs = comps
        .iter()
        .enumerate()
        .map(|(i, s)| {
            Expr::parse(s, &vars).map_err(|source| Error::Parse {
                context: format!("fiber_dynamics[{i}]"),
                source,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Arc::new(move |x, y, u| {
        let args: Vec<f64> = x.iter().chain(y.iter()).chain(u.iter()).copied().collect();
        let out = DVector::from_iterator(exprs.len(), exprs.iter().map(|e| e.eval(&args)));
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                field: "fiber_dynamics".into(),
                point: args,
            });
        }
        Ok(out)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SHEAR: &str = r#"{
        "schema": "tanlift-scenario/1",
        "name": "shear",
        "manifold": "R2",
        "fields": { "Y": ["0", "x1"], "X1": ["1", "0"] },
        "lifted_system": {
            "drift": "Y", "controls": ["X1"],
            "initial": { "base": [1.0, 0.0], "fiber": [0.0, 0.0] },
            "horizon": 1.0,
            "control": { "values": [[1.0]] }
        }
    }"#;

    #[test]
    fn parses_and_builds_a_lifted_system() {
        let s = Scenario::from_json(SHEAR).unwrap();
        let fields = s.build_fields().unwrap();
        let setup = s.lifted(&fields).unwrap().unwrap();
        assert_eq!(setup.system.inputs(), 1);
        assert_eq!(setup.horizons, vec![1.0]);
        assert_eq!(setup.k_max, 4);
        assert!(s.vertical(&fields).unwrap().is_none());
    }

    #[test]
    fn rejects_bad_documents() {
        let wrong_schema = SHEAR.replace("tanlift-scenario/1", "tanlift-scenario/0");
        assert!(Scenario::from_json(&wrong_schema).is_err());
        let dangling = SHEAR.replace("\"controls\": [\"X1\"]", "\"controls\": [\"X9\"]");
        assert!(Scenario::from_json(&dangling).unwrap_err().to_string().contains("X9"));
        let negative = SHEAR.replace("\"horizon\": 1.0", "\"horizon\": -1.0");
        assert!(Scenario::from_json(&negative).is_err());
        let err = Scenario::from_json("{ \"schema\": ").unwrap_err();
        assert!(err.to_string().contains("line 1"));
    }

    #[test]
    fn malformed_expression_reports_its_column() {
        let s = Scenario::from_json(&SHEAR.replace("\"x1\"]", "\"sin(\"]")).unwrap();
        let err = s.build_fields().unwrap_err();
        assert!(err.is_input_error());
        assert!(err.to_string().contains("column"), "{err}");
    }

    #[test]
    fn fiber_dynamics_see_base_fiber_and_control() {
        let dynamics = parse_fiber_dynamics(&["-y1 + u1".into(), "x1*y2".into()], 2, 1).unwrap();
        let out = dynamics(
            &DVector::from_vec(vec![2.0, 0.0]),
            &DVector::from_vec(vec![1.0, 3.0]),
            &[0.5],
        )
        .unwrap();
        assert_eq!(out.as_slice(), &[-0.5, 6.0]);
    }
}
