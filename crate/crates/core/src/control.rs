//! Piecewise-constant controls and trajectories on TM.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{exit_at, rk4_step, IntegratorConfig};
use crate::manifold::TangentPoint;

/// u(t) on [0, T], constant on each of N equal segments. `values[k][i]` is u_i on segment k.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlSignal {
    horizon: f64,
    values: Vec<Vec<f64>>,
}

impl ControlSignal {
    pub fn new(horizon: f64, values: Vec<Vec<f64>>) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::invalid("control horizon must be positive"));
        }
        let m = values.first().map(Vec::len).unwrap_or(0);
        if values.is_empty() || m == 0 {
            return Err(Error::invalid("control needs at least one segment and one input"));
        }
        if values.iter().any(|row| row.len() != m) {
            return Err(Error::invalid("every control segment must have the same number of inputs"));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("control values must be finite"));
        }
        Ok(Self { horizon, values })
    }

    pub fn constant(horizon: f64, u: &[f64]) -> Result<Self> {
        Self::new(horizon, vec![u.to_vec()])
    }

    pub fn zero(horizon: f64, inputs: usize, segments: usize) -> Result<Self> {
        Self::new(horizon, vec![vec![0.0; inputs]; segments.max(1)])
    }

    /// u_input = 1/eps on segment `k` of `segments`, zero elsewhere (eps = T / segments).
    pub fn bump(horizon: f64, segments: usize, k: usize, input: usize, inputs: usize) -> Result<Self> {
        if k >= segments || input >= inputs {
            return Err(Error::invalid("bump segment or input index out of range"));
        }
        let mut values = vec![vec![0.0; inputs]; segments];
        values[k][input] = segments as f64 / horizon;
        Self::new(horizon, values)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn segments(&self) -> usize {
        self.values.len()
    }

    pub fn inputs(&self) -> usize {
        self.values[0].len()
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn segment_len(&self) -> f64 {
        self.horizon / self.segments() as f64
    }

    /// Segment boundaries 0 = t_0 < ... < t_N = T.
    pub fn breakpoints(&self) -> Vec<f64> {
        let n = self.segments();
        (0..=n).map(|k| self.horizon * k as f64 / n as f64).collect()
    }

    /// The same signal resampled on `factor` times as many segments.
    pub fn refine(&self, factor: usize) -> Self {
        let values = self
            .values
            .iter()
            .flat_map(|row| std::iter::repeat_n(row.clone(), factor.max(1)))
            .collect();
        Self {
            horizon: self.horizon,
            values,
        }
    }

    /// Exact integral of u over [0, t].
    pub fn integral_to(&self, t: f64) -> Result<DVector<f64>> {
        if !(0.0..=self.horizon).contains(&t) {
            return Err(Error::OutsideHorizon {
                t,
                horizon: self.horizon,
            });
        }
        let dt = self.segment_len();
        let mut acc = DVector::zeros(self.inputs());
        for (k, row) in self.values.iter().enumerate() {
            let start = k as f64 * dt;
            if start >= t {
                break;
            }
            let len = (t - start).min(dt);
            acc += DVector::from_column_slice(row) * len;
        }
        Ok(acc)
    }

    /// alpha u + beta w, for signals on the same grid.
    pub fn combine(alpha: f64, u: &Self, beta: f64, w: &Self) -> Result<Self> {
        if u.horizon != w.horizon || u.segments() != w.segments() || u.inputs() != w.inputs() {
            return Err(Error::invalid("controls must share horizon, segments and inputs"));
        }
        let values = u
            .values
            .iter()
            .zip(&w.values)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| alpha * x + beta * y).collect())
            .collect();
        Self::new(u.horizon, values)
    }
}

/// Samples of a curve on TM.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub points: Vec<TangentPoint>,
}

impl Trajectory {
    pub fn last(&self) -> &TangentPoint {
        self.points.last().expect("trajectory has at least one sample")
    }

    /// CSV with header `t,x1..xn,y1..yn`, 17 significant digits per value.
    pub fn to_csv(&self) -> String {
        let n = self.points.first().map(TangentPoint::dim).unwrap_or(0);
        let mut out = String::from("t");
        for i in 1..=n {
            out.push_str(&format!(",x{i}"));
        }
        for i in 1..=n {
            out.push_str(&format!(",y{i}"));
        }
        out.push('\n');
        for (t, p) in self.times.iter().zip(&self.points) {
            out.push_str(&format!("{t:.16e}"));
            for v in p.base.iter().chain(p.fiber.iter()) {
                out.push_str(&format!(",{v:.16e}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Integrates z' = f(t, z, u(t)) on TM with RK4 steps aligned to the control segments.
pub(crate) fn integrate_controlled<F>(
    rhs: F,
    v0: &TangentPoint,
    u: &ControlSignal,
    cfg: &IntegratorConfig,
) -> Result<Trajectory>
where
    F: Fn(&DVector<f64>, &[f64]) -> Result<DVector<f64>>,
{
    let per_segment = cfg.steps_for(u.segment_len());
    let needed = per_segment * u.segments();
    if needed > cfg.max_steps {
        return Err(Error::StepBudget {
            needed,
            budget: cfg.max_steps,
        });
    }
    let nodes = u.breakpoints();
    let mut z = v0.stacked();
    let mut times = vec![0.0];
    let mut points = vec![v0.clone()];
    for (k, row) in u.values().iter().enumerate() {
        let (a, b) = (nodes[k], nodes[k + 1]);
        let h = (b - a) / per_segment as f64;
        let f = |t: f64, z: &DVector<f64>| rhs(z, row).map_err(exit_at(t));
        for s in 0..per_segment {
            z = rk4_step(&f, a + s as f64 * h, &z, h)?;
            times.push(if s + 1 == per_segment { b } else { a + (s + 1) as f64 * h });
            points.push(TangentPoint::from_stacked(&z));
        }
    }
    Ok(Trajectory { times, points })
}
