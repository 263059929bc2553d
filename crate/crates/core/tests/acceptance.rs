//! Acceptance criteria, one line per criterion.
//!
//! Runs without the libtest harness so the lines show up in plain `cargo test` output. The
//! process fails when any gated check fails. Lines tagged `not gated` report a criterion
//! whose literal wording disagrees with its own oracle; the gated line next to it checks
//! the oracle value.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use approx::abs_diff_eq;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use tanlift::checks::{lift_identity_battery, sample_tangent_points, BatteryConfig, CC, CV, PROJECTION, VV};
use tanlift::flow::{flow, flow_at, flow_differential, transported_field};
use tanlift::lift::{base_lie_bracket, complete_lift, lie_bracket_numeric, vertical_lift};
use tanlift::lifted::{
    bump_convergence, endpoint_closed_form, fiber_controllability_report, simulate_lifted_ode,
    LiftedSystem,
};
use tanlift::manifold::{dprojection, ChartManifold, DiffConfig, TangentPoint, VectorField};
use tanlift::vertical::{
    fiber_controllable_vertical, simulate_vertical_ode, solve_vertical_closed_form, steer_vertical,
    VerticalAffineSystem,
};
use tanlift::{ControlSignal, IntegratorConfig};

const SEED: u64 = 42;
const TOL_VV: f64 = 1e-6;
const TOL_CV: f64 = 1e-5;
const TOL_CC: f64 = 1e-5;
const TOL_PROJECTION: f64 = 1e-9;
const TOL_VERTICAL_ENDPOINT: f64 = 1e-9;
const TOL_STEER: f64 = 1e-10;
const TOL_DAMPING: f64 = 1e-8;
const TOL_LIFTED_ENDPOINT: f64 = 1e-7;
const TOL_TRANSPORT: f64 = 1e-8;
const TOL_DIFFERENTIAL: f64 = 1e-9;
const MIN_BUMP_ORDER: f64 = 0.9;
const TOL_CHAIN_RULE: f64 = 1e-7;
const TOL_AD: f64 = 1e-4;
const RANK_TOL: f64 = 1e-8;
const GRID: usize = 64;

struct Line {
    id: &'static str,
    gated: bool,
    passed: bool,
    text: String,
}

#[derive(Default)]
struct Report {
    lines: Vec<Line>,
}

impl Report {
    fn gate(&mut self, id: &'static str, passed: bool, text: impl Into<String>) {
        self.push(id, true, passed, text.into());
    }

    fn note(&mut self, id: &'static str, passed: bool, text: impl Into<String>) {
        self.push(id, false, passed, text.into());
    }

    fn push(&mut self, id: &'static str, gated: bool, passed: bool, text: String) {
        let status = if passed { "PASS" } else { "FAIL" };
        let tag = if gated { "" } else { " (not gated)" };
        println!("[{status}] criterion {id}{tag}: {text}");
        self.lines.push(Line {
            id,
            gated,
            passed,
            text,
        });
    }
}

fn p(x: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(x)
}

fn s2() -> ChartManifold {
    ChartManifold::sphere()
}

fn r2() -> ChartManifold {
    ChartManifold::euclidean(2).unwrap()
}

fn shear() -> LiftedSystem {
    let y = VectorField::from_exprs("Y", r2(), &["0", "x1"]).unwrap();
    LiftedSystem::new(y, vec![VectorField::coordinate(r2(), 0)]).unwrap()
}

fn s2_commuting() -> LiftedSystem {
    LiftedSystem::new(
        VectorField::coordinate(s2(), 1),
        vec![VectorField::coordinate(s2(), 0), VectorField::coordinate(s2(), 1)],
    )
    .unwrap()
}

fn s2_degenerate() -> LiftedSystem {
    let y = VectorField::coordinate(s2(), 1);
    LiftedSystem::new(y.clone(), vec![y]).unwrap()
}

fn x0_field() -> VectorField {
    VectorField::from_exprs("X0", s2(), &["cos(x2)", "sin(x1)"]).unwrap()
}

/// Hand-derived brackets of the S2 fields, with their Jacobians, indexed by (i, j) over
/// (d/dtheta, d/dphi, X0). [X, Y] = J_Y X - J_X Y.
fn s2_bracket_oracle(i: usize, j: usize, x: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let (th, ph) = (x[0], x[1]);
    let zero = (p(&[0.0, 0.0]), DMatrix::zeros(2, 2));
    // [d/dtheta, X0] = (0, cos theta), [d/dphi, X0] = (-sin phi, 0)
    let th_x0 = (p(&[0.0, th.cos()]), DMatrix::from_row_slice(2, 2, &[0.0, 0.0, -th.sin(), 0.0]));
    let ph_x0 = (p(&[-ph.sin(), 0.0]), DMatrix::from_row_slice(2, 2, &[0.0, -ph.cos(), 0.0, 0.0]));
    let neg = |(v, m): (DVector<f64>, DMatrix<f64>)| (-v, -m);
    match (i, j) {
        (0, 2) => th_x0,
        (2, 0) => neg(th_x0),
        (1, 2) => ph_x0,
        (2, 1) => neg(ph_x0),
        _ => zero,
    }
}

fn criterion_1(r: &mut Report) {
    let fields = [VectorField::coordinate(s2(), 0), VectorField::coordinate(s2(), 1), x0_field()];
    let cfg = BatteryConfig {
        seed: SEED,
        ..BatteryConfig::default()
    };
    let points = sample_tangent_points(&s2(), &cfg);
    let diff = DiffConfig::default();
    let (mut vv, mut cv, mut cc, mut proj) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for v in &points {
        for i in 0..3 {
            for j in 0..3 {
                if i == j {
                    continue;
                }
                let (xv, yv) = (vertical_lift(&fields[i]), vertical_lift(&fields[j]));
                let (xc, yc) = (complete_lift(&fields[i]), complete_lift(&fields[j]));
                let (b, jb) = s2_bracket_oracle(i, j, &v.base);
                let mut b_v = DVector::zeros(4);
                b_v.rows_mut(2, 2).copy_from(&b);
                let mut b_c = DVector::zeros(4);
                b_c.rows_mut(0, 2).copy_from(&b);
                b_c.rows_mut(2, 2).copy_from(&(jb * &v.fiber));
                vv = vv.max(lie_bracket_numeric(&xv, &yv, v, diff).unwrap().amax());
                cv = cv.max((lie_bracket_numeric(&xc, &yv, v, diff).unwrap() - &b_v).amax());
                cc = cc.max((lie_bracket_numeric(&xc, &yc, v, diff).unwrap() - &b_c).amax());
            }
            let xc = complete_lift(&fields[i]).eval(v).unwrap();
            proj = proj.max((dprojection(v, &xc).unwrap() - fields[i].eval(&v.base).unwrap()).amax());
        }
    }
    let battery = lift_identity_battery(&fields, &[], &cfg).unwrap();
    let battery_max = |id: &str| battery.check(id).unwrap().max_residual;
    let ok = vv <= TOL_VV && cv <= TOL_CV && cc <= TOL_CC && proj <= TOL_PROJECTION;
    r.gate(
        "1",
        ok,
        format!(
            "lift identities at {} seeded points on TS2 against hand-derived brackets: \
             vv {vv:.1e} (<= {TOL_VV:.0e}), cv {cv:.1e} (<= {TOL_CV:.0e}), cc {cc:.1e} (<= {TOL_CC:.0e}), \
             projection {proj:.1e} (<= {TOL_PROJECTION:.0e})",
            points.len()
        ),
    );
    let ok = battery.all_passed
        && battery_max(VV) <= TOL_VV
        && battery_max(CV) <= TOL_CV
        && battery_max(CC) <= TOL_CC
        && battery_max(PROJECTION) <= TOL_PROJECTION;
    r.gate(
        "1",
        ok,
        format!(
            "identity battery ({} checks) all passed = {}",
            battery.checks.len(),
            battery.all_passed
        ),
    );
}

fn s2_vertical() -> VerticalAffineSystem {
    VerticalAffineSystem::new(x0_field(), vec![VectorField::coordinate(s2(), 0), VectorField::coordinate(s2(), 1)])
        .unwrap()
}

fn criterion_2(r: &mut Report) {
    let sys = s2_vertical();
    let cfg = IntegratorConfig::default();
    let mut worst = 0.0f64;
    let mut bitwise = true;
    for (base, fiber, u, t) in [
        ([1.0, 0.5], [0.2, -0.1], [1.0, -0.5], 1.0),
        ([0.3, -2.0], [0.0, 0.0], [0.0, 3.0], 2.5),
        ([2.8, 4.0], [-1.0, 1.0], [-2.0, 0.1], 0.7),
    ] {
        let v0 = TangentPoint::from_slices(&base, &fiber).unwrap();
        let control = ControlSignal::constant(t, &u).unwrap();
        // y(T) = y0 + T (cos phi + u1, sin theta + u2)
        let oracle = p(&[fiber[0] + t * (base[1].cos() + u[0]), fiber[1] + t * (base[0].sin() + u[1])]);
        let closed = solve_vertical_closed_form(&sys, &v0, &control, t).unwrap();
        let ode = simulate_vertical_ode(&sys, &v0, &control, &cfg).unwrap();
        worst = worst
            .max((&closed.fiber - &ode.last().fiber).amax())
            .max((&closed.fiber - &oracle).amax());
        bitwise &= ode.points.iter().all(|q| q.base.as_slice() == base.as_slice());
    }
    r.gate(
        "2",
        worst <= TOL_VERTICAL_ENDPOINT && bitwise,
        format!(
            "vertical closed form vs RK4 and hand oracle: max {worst:.1e} (<= {TOL_VERTICAL_ENDPOINT:.0e}); \
             base bitwise constant = {bitwise}"
        ),
    );
}

fn criterion_3(r: &mut Report) {
    let sys = s2_vertical();
    let x = p(&[1.0, 0.5]);
    let both = fiber_controllable_vertical(&sys, &x, RANK_TOL).unwrap();
    let single_sys = VerticalAffineSystem::new(x0_field(), vec![VectorField::coordinate(s2(), 0)]).unwrap();
    let single = fiber_controllable_vertical(&single_sys, &x, RANK_TOL).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let base = [rng.random_range(0.2..2.9), rng.random_range(-3.0..3.0)];
        let v0 = TangentPoint::from_slices(&base, &[rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
            .unwrap();
        let target = p(&[rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)]);
        let t = rng.random_range(0.5..2.0);
        let u = steer_vertical(&sys, &v0, &target, t, TOL_STEER).unwrap();
        // oracle: closed form evaluated by hand with the returned constant control
        let c = &u.values()[0];
        let reached = p(&[
            v0.fiber[0] + t * (base[1].cos() + c[0]),
            v0.fiber[1] + t * (base[0].sin() + c[1]),
        ]);
        worst = worst.max((reached - &target).norm());
    }
    let ok = both.basis.rank == 2
        && both.controllable
        && single.basis.rank == 1
        && !single.controllable
        && worst <= TOL_STEER;
    r.gate(
        "3",
        ok,
        format!(
            "two fields: rank {} controllable {}; one field: rank {} controllable {}; \
             20 steered targets max residual {worst:.1e} (<= {TOL_STEER:.0e})",
            both.basis.rank, both.controllable, single.basis.rank, single.controllable
        ),
    );
}

fn scenario_path(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn cli(args: &[&str]) -> (Option<i32>, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_tanlift")).args(args).output().unwrap();
    (out.status.code(), out.stdout)
}

fn criterion_4(r: &mut Report) {
    let file = scenario_path("s2-damping.json");
    let (code, stdout) = cli(&["simulate", "--scenario", file.to_str().unwrap(), "--step", "1e-3"]);
    let report: Value = serde_json::from_slice(&stdout).unwrap();
    let end = &report["result"]["vertical"]["ode"]["fiber"];
    let expected = (-1.0f64).exp();
    let ratios = [end[0].as_f64().unwrap() / 1.0, end[1].as_f64().unwrap() / 2.0];
    let err = ratios.iter().map(|q| (q - expected).abs()).fold(0.0, f64::max);
    let ok = code == Some(0) && ratios.iter().all(|q| abs_diff_eq!(*q, expected, epsilon = TOL_DAMPING));
    r.gate(
        "4",
        ok,
        format!(
            "damping y(1)/y(0) = {:.11} and {:.11} vs e^-1 = {expected:.11}: error {err:.1e} (<= {TOL_DAMPING:.0e})",
            ratios[0], ratios[1]
        ),
    );
}

/// Classical RK4 on x' = 0, y' = x, vx' = 1, vy' = vx, written out independently.
fn shear_oracle(state: [f64; 4], t_end: f64, steps: usize) -> [f64; 4] {
    let f = |s: [f64; 4]| [0.0, s[0], 1.0, s[2]];
    let h = t_end / steps as f64;
    let mut s = state;
    for _ in 0..steps {
        let shift = |a: [f64; 4], k: [f64; 4], c: f64| [a[0] + c * k[0], a[1] + c * k[1], a[2] + c * k[2], a[3] + c * k[3]];
        let k1 = f(s);
        let k2 = f(shift(s, k1, h / 2.0));
        let k3 = f(shift(s, k2, h / 2.0));
        let k4 = f(shift(s, k3, h));
        for i in 0..4 {
            s[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    s
}

fn criterion_5(r: &mut Report) {
    let sys = shear();
    let cfg = IntegratorConfig::default();
    let v0 = TangentPoint::from_slices(&[1.0, 0.0], &[0.0, 0.0]).unwrap();
    let u = ControlSignal::constant(1.0, &[1.0]).unwrap();
    let closed = endpoint_closed_form(&sys, &v0, &u, GRID, &cfg).unwrap();
    let ode = simulate_lifted_ode(&sys, &v0, &u, &cfg).unwrap();
    let oracle = shear_oracle([1.0, 0.0, 0.0, 0.0], 1.0, 10_000);
    let oracle_fiber = p(&oracle[2..]);
    let discrepancy = (&closed.fiber - &ode.last().fiber).amax();
    let vs_oracle = (&closed.fiber - &oracle_fiber).amax();
    r.gate(
        "5",
        discrepancy <= TOL_LIFTED_ENDPOINT && vs_oracle <= TOL_LIFTED_ENDPOINT,
        format!(
            "shear endpoint fiber ({:.12}, {:.12}); RK4 oracle ({:.12}, {:.12}); closed form vs ODE {discrepancy:.1e}, \
             vs oracle {vs_oracle:.1e} (<= {TOL_LIFTED_ENDPOINT:.0e})",
            closed.fiber[0], closed.fiber[1], oracle[2], oracle[3]
        ),
    );
    let stated = p(&[1.0, 1.5]);
    let literal = (&closed.fiber - &stated).amax();
    r.note(
        "5",
        literal <= TOL_LIFTED_ENDPOINT,
        format!(
            "stated fiber (1, 1.5) is off by {literal:.3}; the stated RK4 oracle itself gives (1, 0.5) from v0 = (0, 0) \
             and (1, 1.5) only from v0 = (0, 1)"
        ),
    );
}

fn criterion_6(r: &mut Report) {
    let sys = shear();
    let cfg = IntegratorConfig::default();
    let x0 = p(&[0.7, -0.3]);
    let worst = [0.25, 0.5, 1.0]
        .iter()
        .map(|&t| (transported_field(&sys.drift, &sys.controls[0], &x0, t, &cfg).unwrap() - p(&[1.0, -t])).amax())
        .fold(0.0, f64::max);
    r.gate(
        "6",
        worst <= TOL_TRANSPORT,
        format!("shear transported field vs (1, -t) at t = 0.25, 0.5, 1: max {worst:.1e} (<= {TOL_TRANSPORT:.0e})"),
    );
}

fn criterion_7(r: &mut Report) {
    let sys = shear();
    let cfg = IntegratorConfig::default();
    let x0 = p(&[0.7, -0.3]);
    let worst = [0.5, 1.0, 2.0]
        .iter()
        .map(|&t| {
            let expected = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, t, 1.0]);
            (flow_differential(&sys.drift, &x0, t, &cfg).unwrap() - expected).amax()
        })
        .fold(0.0, f64::max);
    r.gate(
        "7",
        worst <= TOL_DIFFERENTIAL,
        format!("shear d phi_t vs [[1, 0], [t, 1]] at t = 0.5, 1, 2: max {worst:.1e} (<= {TOL_DIFFERENTIAL:.0e})"),
    );
}

fn criterion_8(r: &mut Report) {
    let cfg = IntegratorConfig::default();
    let report = |sys: &LiftedSystem, base: [f64; 2], t: f64| {
        let v0 = TangentPoint::from_slices(&base, &[0.0, 0.0]).unwrap();
        fiber_controllability_report(sys, &v0, t, GRID, 4, RANK_TOL, &cfg).unwrap()
    };
    let shear_reports: Vec<_> = [0.1, 1.0, 5.0].iter().map(|&t| report(&shear(), [1.0, 0.0], t)).collect();
    let shear_ok = shear_reports
        .iter()
        .all(|r| r.transport_controllable && r.bracket_controllable && r.ad.depth == Some(1));
    r.gate(
        "8",
        shear_ok,
        format!(
            "shear: (c) true at T = 0.1, 1, 5 = {}; (d) true with depth {:?}",
            shear_reports.iter().all(|r| r.transport_controllable),
            shear_reports[0].ad.depth
        ),
    );
    let comm = report(&s2_commuting(), [1.0, 0.0], 1.0);
    r.gate(
        "8",
        comm.transport_controllable && comm.bracket_controllable && comm.ad.depth == Some(0),
        format!(
            "S2 commuting: (c) {}, (d) {} at depth {:?}",
            comm.transport_controllable, comm.bracket_controllable, comm.ad.depth
        ),
    );
    let deg = report(&s2_degenerate(), [1.0, 0.0], 1.0);
    r.gate(
        "8",
        !deg.transport_controllable && !deg.bracket_controllable,
        format!(
            "degenerate X1 = Y: (c) {} (S_T rank {}), (d) {} (bracket rank {})",
            deg.transport_controllable, deg.s_t_basis.rank, deg.bracket_controllable, deg.ad.basis.rank
        ),
    );
}

fn criterion_9(r: &mut Report) {
    let cfg = IntegratorConfig::default();
    let study = bump_convergence(&shear(), &p(&[1.0, 0.0]), 1.0, 0.5, 0, &[8, 16, 32], GRID, &cfg).unwrap();
    let errors: Vec<String> = study.samples.iter().map(|s| format!("{:.2e}", s.error)).collect();
    let order = study.order.unwrap_or(f64::NAN);
    r.gate(
        "9",
        order >= MIN_BUMP_ORDER,
        format!(
            "shear bump errors at eps = T/8, T/16, T/32: [{}]; fitted order {order:.4} (>= {MIN_BUMP_ORDER})",
            errors.join(", ")
        ),
    );
}

fn criterion_10(r: &mut Report) {
    let cfg = IntegratorConfig::default();
    let horizon = 1.0;
    let nodes: Vec<f64> = (0..=GRID).map(|k| horizon * k as f64 / GRID as f64).collect();
    let mut per_example = Vec::new();
    for (sys, x0) in [(s2_commuting(), p(&[1.0, 0.0])), (shear(), p(&[1.0, 0.0]))] {
        let along = flow_at(&sys.drift, &x0, &nodes, &cfg, true).unwrap();
        let jacs = along.jacobians.as_ref().unwrap();
        let d_total = jacs.last().unwrap();
        let mut worst = 0.0f64;
        for (k, t) in nodes.iter().enumerate() {
            let xt = &along.states[k];
            let rest = flow_differential(&sys.drift, xt, horizon - t, &cfg).unwrap();
            for x in &sys.controls {
                let transported = jacs[k].clone().lu().solve(&x.eval(xt).unwrap()).unwrap();
                let lhs = d_total * transported;
                let rhs = &rest * x.eval(xt).unwrap();
                worst = worst.max((lhs - rhs).amax());
            }
        }
        per_example.push(worst);
    }
    let worst = per_example.iter().copied().fold(0.0, f64::max);
    r.gate(
        "10",
        worst <= TOL_CHAIN_RULE,
        format!(
            "chain rule over {} grid nodes: S2 commuting {:.1e}, shear {:.1e} (<= {TOL_CHAIN_RULE:.0e})",
            nodes.len(),
            per_example[0],
            per_example[1]
        ),
    );
}

fn criterion_11(r: &mut Report) {
    let sys = shear();
    let cfg = IntegratorConfig::with_step(1e-4);
    let x0 = p(&[1.0, 0.0]);
    let h = 1e-3;
    let plus = transported_field(&sys.drift, &sys.controls[0], &x0, h, &cfg).unwrap();
    let minus = transported_field(&sys.drift, &sys.controls[0], &x0, -h, &cfg).unwrap();
    let fd = (plus - minus) / (2.0 * h);
    let bracket = base_lie_bracket(&sys.drift, &sys.controls[0]).unwrap().eval(&x0).unwrap();
    let derivatives = tanlift::flow::transported_derivatives(&sys.drift, &sys.controls[0], &x0, 1).unwrap();
    let literal = (&fd + &bracket).amax();
    let corrected = (&fd - &bracket).amax();
    let entry = (&fd - &derivatives[1]).amax();
    r.note(
        "11",
        literal <= TOL_AD,
        format!(
            "as stated, d/dt transported at 0 = ({:.6}, {:.6}) vs -[Y, X1] = ({}, {}): off by {literal:.3}",
            fd[0], fd[1], 0.0 - bracket[0], 0.0 - bracket[1]
        ),
    );
    r.gate(
        "11",
        corrected <= TOL_AD && entry <= TOL_AD,
        format!(
            "d/dt transported at 0 vs +[Y, X1] = ({}, {}): {corrected:.1e}; vs transported_derivatives[1]: {entry:.1e} \
             (<= {TOL_AD:.0e}); the transported curve is (1, -t), so its slope is [Y, X1] = -d/dy",
            bracket[0], bracket[1]
        ),
    );
}

fn criterion_12(r: &mut Report) {
    let mut identical = true;
    let mut runs = 0;
    for (command, file) in [
        ("lift-check", "s2-vertical-affine.json"),
        ("simulate", "r2-shear.json"),
        ("controllability", "r2-shear.json"),
        ("bump-convergence", "s2-lifted-commuting.json"),
    ] {
        let path = scenario_path(file);
        let args = [command, "--scenario", path.to_str().unwrap(), "--seed", "42"];
        let (code_a, a) = cli(&args);
        let (code_b, b) = cli(&args);
        identical &= code_a == Some(0) && code_a == code_b && !a.is_empty() && a == b;
        runs += 2;
    }
    r.gate("12", identical, format!("{runs} CLI runs with seed 42: payloads byte-identical = {identical}"));
}

type Criterion = (&'static str, fn(&mut Report));

fn main() {
    let started = Instant::now();
    let mut report = Report::default();
    let criteria: [Criterion; 12] = [
        ("1", criterion_1),
        ("2", criterion_2),
        ("3", criterion_3),
        ("4", criterion_4),
        ("5", criterion_5),
        ("6", criterion_6),
        ("7", criterion_7),
        ("8", criterion_8),
        ("9", criterion_9),
        ("10", criterion_10),
        ("11", criterion_11),
        ("12", criterion_12),
    ];
    for (id, run) in criteria {
        let t = Instant::now();
        run(&mut report);
        let secs = t.elapsed().as_secs_f64();
        if secs > 10.0 {
            report.gate(id, false, format!("took {secs:.1} s, over the 10 s budget"));
        }
    }
    // sanity: the flow helper used above agrees with the base flow of the shear
    let end = flow(&shear().drift, &p(&[1.0, 0.0]), 1.0, &IntegratorConfig::default()).unwrap();
    assert!((end.final_state() - p(&[1.0, 1.0])).amax() < 1e-12);

    let gated: Vec<&Line> = report.lines.iter().filter(|l| l.gated).collect();
    let failed: Vec<&&Line> = gated.iter().filter(|l| !l.passed).collect();
    let notes = report.lines.iter().filter(|l| !l.gated && !l.passed).count();
    println!(
        "acceptance: {} of {} gated checks passed, {} literal-statement discrepancies reported, {:.2} s",
        gated.len() - failed.len(),
        gated.len(),
        notes,
        started.elapsed().as_secs_f64()
    );
    if !failed.is_empty() {
        for l in failed {
            eprintln!("failed criterion {}: {}", l.id, l.text);
        }
        std::process::exit(1);
    }
}
