//! Oracle suite: checks with known answers that do not depend on the
//! working point being any good.
//!
//! - harmonic limit (`beta_L = 0`, `kappa = 0`): single-SQUID levels `n + 1/2`;
//! - `kappa = 0`: coupled levels are sums of single-SQUID levels, for both
//!   coupled solvers;
//! - split-operator against the RK4 reference on the CNOT pulse;
//! - norm drift over the longest gate;
//! - second-order convergence of the split-operator step.

use std::time::Instant;

use serde::Serialize;

use crate::config::RunConfig;
use crate::device::{derive_constants, Qubit};
use crate::error::Result;
use crate::gates::{GateDesigner, GateSchedule, GateSettings, RabiSource};
use crate::label::StateLabel;
use crate::output::{fmt_f64, Csv};
use crate::propagator::{propagate, Integrator, IntegratorConfig, StateVector};
use crate::spectral::{solve_1d, solve_coupled, SolverMethod};
use crate::system::CoupledSystem;

pub const HARMONIC_TOLERANCE: f64 = 1e-8;
pub const SEPARABILITY_TOLERANCE: f64 = 1e-10;
pub const AGREEMENT_TOLERANCE: f64 = 1e-6;
pub const NORM_DRIFT_TOLERANCE: f64 = 1e-9;
pub const ORDER_TOLERANCE: f64 = 0.2;

/// Levels checked in the spectral oracles.
const LEVELS: usize = 10;
/// The split-operator run in the agreement check uses `dtau / 8`: its
/// second-order error at `dtau` is ~4e-5 over the longest gate, while RK4
/// at `dtau` is two orders of magnitude closer to converged.
const AGREEMENT_REFINEMENT: f64 = 8.0;
/// Length of the CNOT segment used to measure the convergence order.
const ORDER_SPAN: f64 = 20_000.0;
const ORDER_STEPS: [f64; 3] = [0.08, 0.04, 0.02];

#[derive(Clone, Debug, Serialize)]
pub struct OracleCheck {
    pub name: &'static str,
    pub value: f64,
    /// Human-readable acceptance rule.
    pub limit: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl OracleCheck {
    pub fn line(&self) -> String {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        format!("{verdict} {:<22} {:>12.4e}  ({})  {}", self.name, self.value, self.limit, self.detail)
    }
}

fn timed<F: FnOnce() -> Result<OracleCheck>>(f: F) -> Result<OracleCheck> {
    let t = Instant::now();
    let mut c = f()?;
    c.seconds = t.elapsed().as_secs_f64();
    Ok(c)
}

fn below(name: &'static str, value: f64, tol: f64, detail: String) -> OracleCheck {
    OracleCheck { name, value, limit: format!("< {tol:e}"), passed: value < tol, detail, seconds: 0.0 }
}

/// Largest `|E_n - (n + 1/2)|` for the lowest levels of either SQUID with
/// the Josephson term and the coupling switched off.
pub fn harmonic_oracle(cfg: &RunConfig) -> Result<OracleCheck> {
    let p = cfg.device_params()?.with_beta_l(0.0).with_kappa(0.0);
    let d = derive_constants(&p)?;
    let (g1, g2) = cfg.solver.grids(&d)?;
    let mut worst: f64 = 0.0;
    for (g, q) in [(g1, Qubit::Control), (g2, Qubit::Target)] {
        let s = solve_1d(&p, &d, &g, q)?;
        for n in 0..LEVELS {
            worst = worst.max((s.energies[n] - (n as f64 + 0.5)).abs());
        }
    }
    Ok(below("harmonic-limit", worst, HARMONIC_TOLERANCE, format!("lowest {LEVELS} levels, both SQUIDs")))
}

/// Largest gap between the coupled levels at `kappa = 0` and the sorted
/// sums of single-SQUID levels, over both coupled solvers.
pub fn separability_oracle(cfg: &RunConfig) -> Result<OracleCheck> {
    let p = cfg.device_params()?.with_kappa(0.0);
    let d = derive_constants(&p)?;
    let (g1, g2) = cfg.solver.grids(&d)?;
    let e1 = solve_1d(&p, &d, &g1, Qubit::Control)?.energies;
    let e2 = solve_1d(&p, &d, &g2, Qubit::Target)?.energies;
    let k = cfg.solver.k_basis;
    let mut sums: Vec<f64> = (0..k).flat_map(|a| (0..k).map(move |b| (a, b))).map(|(a, b)| e1[a] + e2[b]).collect();
    sums.sort_by(f64::total_cmp);
    let mut worst: f64 = 0.0;
    for method in [SolverMethod::ProductBasis, SolverMethod::Direct2d] {
        let sol = solve_coupled(&p, &d, &crate::spectral::SolverConfig { method, ..cfg.solver })?;
        for (n, e) in sol.energies.iter().enumerate() {
            worst = worst.max((e - sums[n]).abs());
        }
    }
    Ok(below(
        "kappa0-separability",
        worst,
        SEPARABILITY_TOLERANCE,
        format!("{} levels, product basis and direct 2D", cfg.solver.n_states),
    ))
}

/// Designer for the propagation oracles. Rabi frequencies come from the
/// rotating-wave estimate: the oracles compare integrators, not gates.
pub fn oracle_designer(cfg: &RunConfig, sys: &CoupledSystem) -> Result<GateDesigner> {
    let settings = GateSettings { rabi: RabiSource::Rwa, ..cfg.gates };
    let integrator = IntegratorConfig { method: Integrator::SplitOperator, ..cfg.integrator };
    GateDesigner::new(&sys.table, &sys.constants, settings, integrator, cfg.drive)
}

fn endpoint(d: &GateDesigner, gate: &GateSchedule, init: StateLabel, dtau: f64, method: Integrator, span: f64) -> Result<StateVector> {
    let h = d.hamiltonian.with_schedule(gate.schedule.clone());
    let c0 = StateVector::computational(h.dim(), &d.basis, init, 0.0);
    let cfg = IntegratorConfig { dtau, record_stride: usize::MAX, method };
    Ok(propagate(&c0, &h, &cfg, span)?.final_state())
}

/// Split-operator at `dtau / 8` against RK4 at `dtau` over every gate
/// schedule (rotations by pi/2 and pi, CNOT, Bell); the worst endpoint
/// distance counts. The split-operator distance at `dtau` itself is
/// reported alongside.
pub fn agreement_oracle(d: &GateDesigner) -> Result<OracleCheck> {
    let cases = [
        (d.rotation(std::f64::consts::FRAC_PI_2)?, StateLabel::L00),
        (d.rotation(std::f64::consts::PI)?, StateLabel::L00),
        (d.cnot()?, StateLabel::L10),
        (d.bell()?, StateLabel::L00),
    ];
    let dtau = d.integrator.dtau;
    let mut worst = (0.0, 0.0, String::new());
    for (gate, init) in &cases {
        let span = gate.duration();
        let rk4 = endpoint(d, gate, *init, dtau, Integrator::ReferenceRk4, span)?;
        let fine = endpoint(d, gate, *init, dtau / AGREEMENT_REFINEMENT, Integrator::SplitOperator, span)?;
        let coarse = endpoint(d, gate, *init, dtau, Integrator::SplitOperator, span)?;
        let dist = fine.distance(&rk4);
        if dist >= worst.0 {
            worst = (dist, coarse.distance(&rk4), format!("{} from |{init}>, tau = {span:.0}", gate.name));
        }
    }
    Ok(below(
        "split-vs-rk4",
        worst.0,
        AGREEMENT_TOLERANCE,
        format!(
            "worst of {} schedules: {}; split dtau = {} vs rk4 dtau = {dtau}; split at dtau = {dtau}: {:.2e}",
            cases.len(),
            worst.2,
            dtau / AGREEMENT_REFINEMENT,
            worst.1
        ),
    ))
}

/// Largest `|norm - 1|` along the longest of the rotation-pi, CNOT and Bell
/// schedules.
pub fn norm_drift_oracle(d: &GateDesigner) -> Result<OracleCheck> {
    let gates = [d.rotation(std::f64::consts::PI)?, d.cnot()?, d.bell()?];
    let gate = gates.iter().max_by(|a, b| a.duration().total_cmp(&b.duration())).expect("three gates");
    let h = d.hamiltonian.with_schedule(gate.schedule.clone());
    let c0 = StateVector::computational(h.dim(), &d.basis, StateLabel::L00, 0.0);
    let cfg = IntegratorConfig { record_stride: 1000, method: Integrator::SplitOperator, ..d.integrator };
    let traj = propagate(&c0, &h, &cfg, gate.duration())?;
    let drift = traj.norm.iter().map(|n| (n - 1.0).abs()).fold(0.0, f64::max);
    Ok(below(
        "norm-drift",
        drift,
        NORM_DRIFT_TOLERANCE,
        format!("{} from |00>, tau = {:.0}, dtau = {}", gate.name, gate.duration(), d.integrator.dtau),
    ))
}

/// `log2(|y(h) - y(h/2)| / |y(h/2) - y(h/4)|)` on a segment of the CNOT
/// pulse from `|10>`.
pub fn order_oracle(d: &GateDesigner) -> Result<OracleCheck> {
    let gate = d.cnot()?;
    let span = ORDER_SPAN.min(gate.duration());
    let ends = ORDER_STEPS
        .iter()
        .map(|&h| endpoint(d, &gate, StateLabel::L10, h, Integrator::SplitOperator, span))
        .collect::<Result<Vec<_>>>()?;
    let d1 = ends[0].distance(&ends[1]);
    let d2 = ends[1].distance(&ends[2]);
    let p = (d1 / d2).log2();
    Ok(OracleCheck {
        name: "convergence-order",
        value: p,
        limit: format!("2 +- {ORDER_TOLERANCE}"),
        passed: (p - 2.0).abs() <= ORDER_TOLERANCE,
        detail: format!("dtau {ORDER_STEPS:?} over tau = {span:.0}; differences {d1:.2e}, {d2:.2e}"),
        seconds: 0.0,
    })
}

/// Runs every oracle on the device of `cfg`.
pub fn run_selfcheck(cfg: &RunConfig) -> Result<Vec<OracleCheck>> {
    let mut out = vec![timed(|| harmonic_oracle(cfg))?, timed(|| separability_oracle(cfg))?];
    let sys = CoupledSystem::build(&cfg.device_params()?, &cfg.solver)?;
    let d = oracle_designer(cfg, &sys)?;
    out.push(timed(|| agreement_oracle(&d))?);
    out.push(timed(|| norm_drift_oracle(&d))?);
    out.push(timed(|| order_oracle(&d))?);
    Ok(out)
}

pub fn selfcheck_csv(checks: &[OracleCheck]) -> Csv {
    let mut csv = Csv::new(&["check", "value", "limit", "passed", "detail"]);
    for c in checks {
        csv.row(&[
            c.name.to_string(),
            fmt_f64(c.value),
            c.limit.clone(),
            c.passed.to_string(),
            format!("\"{}\"", c.detail.replace('"', "'")),
        ]);
    }
    csv
}

