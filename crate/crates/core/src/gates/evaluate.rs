//! Running gate schedules and scoring them: fidelities, leakage and the
//! rotation angle read off the populations.

use std::f64::consts::TAU;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use super::schedule::{bell_states, GateDesigner, GateSchedule, GateSettings};
use crate::drive::Envelope;
use crate::error::Result;
use crate::label::StateLabel;
use crate::propagator::{propagate, IntegratorConfig, StateVector, TrajectoryRecord};
use crate::spectral::ComputationalBasis;

/// Leakage above which an extracted angle carries a warning.
pub const ANGLE_LEAKAGE_WARNING: f64 = 0.02;

/// `2 arcsin(sqrt(p))`, with `p` clamped to `[0, 1]`.
pub fn rotation_angle(p_transfer: f64) -> f64 {
    2.0 * p_transfer.clamp(0.0, 1.0).sqrt().asin()
}

/// Unwraps a sampled sequence of `2 arcsin(sqrt(P))` values, which fold
/// back at `pi` and `0`, into a continuous angle. Each sample may stand for
/// `2 pi k + raw` or `2 pi k - raw`; the candidate closest to the linear
/// extrapolation of the previous two is taken.
pub fn unwrap_rotation_angles(raw: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::with_capacity(raw.len());
    for (k, &r) in raw.iter().enumerate() {
        let predicted = match k {
            0 => r,
            1 => out[0],
            _ => 2.0 * out[k - 1] - out[k - 2],
        };
        let turn = (predicted / TAU).round();
        let mut best = r;
        for m in [turn - 1.0, turn, turn + 1.0] {
            for cand in [m * TAU + r, m * TAU - r] {
                if (cand - predicted).abs() < (best - predicted).abs() {
                    best = cand;
                }
            }
        }
        out.push(best);
    }
    out
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct AngleExtraction {
    pub tau: Vec<f64>,
    /// Unwrapped angle at each sample.
    pub theta: Vec<f64>,
    pub max_leakage: f64,
    pub warning: Option<String>,
}

impl AngleExtraction {
    /// Final angle folded into `[0, 2 pi)`.
    pub fn final_theta(&self) -> f64 {
        self.theta.last().copied().unwrap_or(0.0).rem_euclid(TAU)
    }
}

/// Rotation angle of the control qubit along a trajectory started in the
/// computational state `init`, from the population of the state with the
/// control flipped.
pub fn extract_rotation_angle(traj: &TrajectoryRecord, basis: &ComputationalBasis, init: StateLabel) -> AngleExtraction {
    let flipped = basis.index(init.flip_control());
    let raw: Vec<f64> = (0..traj.len()).map(|k| rotation_angle(traj.population(k, flipped))).collect();
    let max_leakage = traj.max_leakage(basis);
    let warning = (max_leakage > ANGLE_LEAKAGE_WARNING)
        .then(|| format!("leakage reached {max_leakage:.3}; angle from populations is unreliable"));
    AngleExtraction { tau: traj.tau.clone(), theta: unwrap_rotation_angles(&raw), max_leakage, warning }
}

/// Least-squares line `y = a + b x` and its coefficient of determination.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    (intercept, slope, 1.0 - ss_res / syy)
}

/// `(sum_j sqrt(p_j q_j))^2` between two population distributions.
pub fn classical_fidelity(p: &[f64; 4], q: &[f64; 4]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a.max(0.0) * b.max(0.0)).sqrt()).sum::<f64>().powi(2).min(1.0)
}

/// `|<target|c>|^2` on four computational amplitudes.
pub fn overlap4(c: &[C64; 4], target: &[C64; 4]) -> f64 {
    c.iter().zip(target).map(|(a, b)| b.conj() * a).sum::<C64>().norm_sqr().min(1.0)
}

#[derive(Clone, Debug, Serialize)]
pub struct StageOutcome {
    pub name: String,
    pub tau: f64,
    pub fidelity: f64,
}

/// One propagation of a gate from a computational state.
#[derive(Clone, Debug, Serialize)]
pub struct InitialStateRun {
    pub init: StateLabel,
    /// Most likely computational outcome under the ideal gate.
    pub target: StateLabel,
    pub final_populations: [f64; 4],
    /// Rotating-frame amplitudes of `|00>..|11>` at the end.
    #[serde(skip)]
    pub final_amplitudes: [C64; 4],
    /// Amplitude-level fidelity to the ideal output.
    pub fidelity: f64,
    /// Fidelity of the computational populations to the ideal ones.
    pub population_fidelity: f64,
    pub leakage_max: f64,
    pub stages: Vec<StageOutcome>,
    /// Closest Bell state and the fidelity to it.
    pub nearest_bell: (&'static str, f64),
    pub theta: f64,
    #[serde(skip)]
    pub trajectory: TrajectoryRecord,
}

#[derive(Clone, Debug, Serialize)]
pub struct GateResult {
    pub name: String,
    pub runs: Vec<InitialStateRun>,
    pub theta: Option<f64>,
    pub omega_rabi: f64,
    pub leakage_max: f64,
    pub warnings: Vec<String>,
}

impl GateResult {
    pub fn run(&self, init: StateLabel) -> Option<&InitialStateRun> {
        self.runs.iter().find(|r| r.init == init)
    }

    pub fn min_fidelity(&self) -> f64 {
        self.runs.iter().map(|r| r.fidelity).fold(1.0, f64::min)
    }

    pub fn min_population_fidelity(&self) -> f64 {
        self.runs.iter().map(|r| r.population_fidelity).fold(1.0, f64::min)
    }
}

fn computational_amplitudes(s: &StateVector, d: &GateDesigner) -> [C64; 4] {
    let rot = s.rotating_frame(&d.hamiltonian.energies);
    std::array::from_fn(|i| rot[d.basis.index(StateLabel::from_index(i))])
}

fn nearest_bell(c: &[C64; 4]) -> (&'static str, f64) {
    bell_states()
        .iter()
        .map(|(name, b)| (*name, overlap4(c, b)))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("four Bell states")
}

impl GateDesigner {
    /// Propagates `gate` from `init`, stage by stage so each stage end is
    /// sampled exactly.
    pub fn run_from(&self, gate: &GateSchedule, init: StateLabel) -> Result<InitialStateRun> {
        let dim = self.hamiltonian.dim();
        let h = self.hamiltonian.with_schedule(gate.schedule.clone());
        let mut state = StateVector::computational(dim, &self.basis, init, 0.0);
        let mut traj = TrajectoryRecord::default();
        traj.tau.push(0.0);
        traj.norm.push(state.norm());
        traj.amplitudes.push(state.amplitudes.clone());
        let mut stages = Vec::new();
        for stage in &gate.stages {
            let span = stage.end - state.tau;
            if span > 0.0 {
                let rec = propagate(&state, &h, &self.integrator, span)?;
                traj.tau.extend_from_slice(&rec.tau[1..]);
                traj.norm.extend_from_slice(&rec.norm[1..]);
                traj.amplitudes.extend_from_slice(&rec.amplitudes[1..]);
                state = rec.final_state();
            }
            let target: [C64; 4] = std::array::from_fn(|i| stage.expected[(i, init.index())]);
            stages.push(StageOutcome {
                name: stage.name.clone(),
                tau: state.tau,
                fidelity: overlap4(&computational_amplitudes(&state, self), &target),
            });
        }
        let expected = gate.expected_output(init);
        let q: [f64; 4] = std::array::from_fn(|i| expected[i].norm_sqr());
        let p = traj.computational_populations(traj.len() - 1, &self.basis);
        let amps = computational_amplitudes(&state, self);
        let target = StateLabel::from_index((0..4).max_by(|&a, &b| q[a].total_cmp(&q[b])).unwrap_or(0));
        Ok(InitialStateRun {
            init,
            target,
            final_populations: p,
            final_amplitudes: amps,
            fidelity: overlap4(&amps, &expected),
            population_fidelity: classical_fidelity(&p, &q),
            leakage_max: traj.max_leakage(&self.basis),
            stages,
            nearest_bell: nearest_bell(&amps),
            theta: rotation_angle(p[init.flip_control().index()]),
            trajectory: traj,
        })
    }

    /// Runs `gate` from each of `inits` in parallel.
    pub fn evaluate(&self, gate: &GateSchedule, inits: &[StateLabel]) -> Result<GateResult> {
        let runs: Vec<InitialStateRun> =
            inits.par_iter().map(|&l| self.run_from(gate, l)).collect::<Result<_>>()?;
        let leakage_max = runs.iter().map(|r| r.leakage_max).fold(0.0, f64::max);
        let mut warnings = Vec::new();
        if leakage_max > ANGLE_LEAKAGE_WARNING {
            warnings.push(format!("leakage reached {leakage_max:.3}"));
        }
        Ok(GateResult {
            name: gate.name.clone(),
            theta: gate.theta.map(|_| runs.first().map(|r| r.theta).unwrap_or(0.0)),
            omega_rabi: gate.omega_rabi,
            leakage_max,
            warnings,
            runs,
        })
    }
}

/// Rotation angle versus pulse width for the two-tone rotation.
#[derive(Clone, Debug, Serialize)]
pub struct WidthScan {
    pub width: Vec<f64>,
    pub theta: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub extraction: AngleExtraction,
}

impl GateDesigner {
    /// Scans widths covering rotation angles `[0, theta_max]` from `|00>`.
    /// The rotation pulses are rectangular, so one run of the longest pulse
    /// sampled along the way is the scan.
    pub fn width_scan(&self, theta_max: f64, samples: usize) -> Result<WidthScan> {
        let gate = self
            .with_settings(GateSettings { envelope: Envelope::Rectangular, ..self.settings })
            .rotation(theta_max)?;
        let steps = (gate.duration() / self.integrator.dtau).ceil() as usize;
        let cfg = IntegratorConfig { record_stride: (steps / samples.max(2)).max(1), ..self.integrator };
        let h = self.hamiltonian.with_schedule(gate.schedule.clone());
        let init = StateLabel::L00;
        let traj = propagate(&StateVector::computational(h.dim(), &self.basis, init, 0.0), &h, &cfg, gate.duration())?;
        let extraction = extract_rotation_angle(&traj, &self.basis, init);
        let (intercept, slope, r_squared) = linear_fit(&extraction.tau, &extraction.theta);
        Ok(WidthScan { width: extraction.tau.clone(), theta: extraction.theta.clone(), slope, intercept, r_squared, extraction })
    }
}
