//! Microwave pulses on the two flux-bias lines and the reduced Hamiltonian
//! they produce in the truncated eigenbasis.
//!
//! A pulse on the control line adds `x_C(t)` to the flux of qubit 1; through
//! the mutual inductance it also reaches qubit 2 with weight `kappa/2`, and
//! vice versa. In units of hbar omega_LC the interaction is
//!
//! ```text
//! V = d1 (x1 - xe1) + d2 (x2 - xe2) + d12
//! d1  = (x_C + kappa x_T / 2) / eta
//! d2  = (x_T + kappa x_C / 2) / eta
//! d12 = (x_C^2 + x_T^2 + kappa x_C x_T) / (2 eta)
//! ```

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::device::DerivedConstants;
use crate::error::{Error, Result};
use crate::spectral::TransitionTable;

/// Flux-bias line a pulse is applied to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Line {
    /// Control qubit (qubit 1).
    C,
    /// Target qubit (qubit 2).
    T,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Envelope {
    Rectangular,
    /// Raised-cosine edges each lasting `ramp_fraction * width`.
    CosineRamped { ramp_fraction: f64 },
}

/// `amplitude * envelope(tau) * cos(omega * tau + phase)` on one line, for
/// `t_start <= tau < t_start + width`. Times are dimensionless
/// (`tau = omega_LC t`), `omega` is in units of omega_LC and the phase
/// refers to `tau = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    pub line: Line,
    pub amplitude: f64,
    pub omega: f64,
    pub phase: f64,
    pub t_start: f64,
    pub width: f64,
    pub envelope: Envelope,
}

impl PulseSpec {
    pub fn rectangular(line: Line, amplitude: f64, omega: f64, phase: f64, t_start: f64, width: f64) -> Self {
        PulseSpec { line, amplitude, omega, phase, t_start, width, envelope: Envelope::Rectangular }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.amplitude.is_finite()
            && self.amplitude >= 0.0
            && self.width.is_finite()
            && self.width > 0.0
            && self.omega.is_finite()
            && self.omega > 0.0
            && self.phase.is_finite()
            && self.t_start.is_finite();
        if !ok {
            return Err(Error::Parameter(format!("invalid pulse {self:?}")));
        }
        if let Envelope::CosineRamped { ramp_fraction } = self.envelope {
            if !(ramp_fraction > 0.0 && ramp_fraction <= 0.5) {
                return Err(Error::Parameter(format!("ramp_fraction must be in (0, 0.5], got {ramp_fraction}")));
            }
        }
        Ok(())
    }

    pub fn end(&self) -> f64 {
        self.t_start + self.width
    }

    pub fn envelope_at(&self, tau: f64) -> f64 {
        let s = tau - self.t_start;
        if s < 0.0 || s >= self.width {
            return 0.0;
        }
        match self.envelope {
            Envelope::Rectangular => 1.0,
            Envelope::CosineRamped { ramp_fraction } => {
                let ramp = ramp_fraction * self.width;
                let edge = s.min(self.width - s);
                if edge >= ramp {
                    1.0
                } else {
                    0.5 * (1.0 - (PI * edge / ramp).cos())
                }
            }
        }
    }

    pub fn value(&self, tau: f64) -> f64 {
        let env = self.envelope_at(tau);
        if env == 0.0 {
            0.0
        } else {
            self.amplitude * env * (self.omega * tau + self.phase).cos()
        }
    }
}

/// Pulses applied during one run; overlapping pulses on a line add.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DriveSchedule {
    pub pulses: Vec<PulseSpec>,
    pub duration: f64,
}

impl DriveSchedule {
    /// Duration is the end of the last pulse.
    pub fn new(pulses: Vec<PulseSpec>) -> Result<Self> {
        let duration = pulses.iter().map(PulseSpec::end).fold(0.0, f64::max);
        Self::with_duration(pulses, duration)
    }

    pub fn with_duration(pulses: Vec<PulseSpec>, duration: f64) -> Result<Self> {
        for p in &pulses {
            p.validate()?;
        }
        let last = pulses.iter().map(PulseSpec::end).fold(0.0, f64::max);
        if duration < last {
            return Err(Error::Parameter(format!("duration {duration} ends before the last pulse ({last})")));
        }
        Ok(DriveSchedule { pulses, duration })
    }

    pub fn empty(duration: f64) -> Self {
        DriveSchedule { pulses: Vec::new(), duration }
    }

    /// Instantaneous `(x_C, x_T)`.
    pub fn line_values(&self, tau: f64) -> (f64, f64) {
        let mut xc = 0.0;
        let mut xt = 0.0;
        for p in &self.pulses {
            let v = p.value(tau);
            match p.line {
                Line::C => xc += v,
                Line::T => xt += v,
            }
        }
        (xc, xt)
    }

    pub fn max_omega(&self) -> f64 {
        self.pulses.iter().map(|p| p.omega).fold(0.0, f64::max)
    }

    pub fn uses_line(&self, line: Line) -> bool {
        self.pulses.iter().any(|p| p.line == line && p.amplitude > 0.0)
    }

    /// Every pulse scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for p in &mut out.pulses {
            p.amplitude *= factor;
        }
        out
    }

    /// Appends `other` shifted to start at this schedule's end.
    pub fn then(&self, other: &DriveSchedule) -> Self {
        let offset = self.duration;
        let mut pulses = self.pulses.clone();
        pulses.extend(other.pulses.iter().map(|p| PulseSpec { t_start: p.t_start + offset, ..*p }));
        DriveSchedule { pulses, duration: offset + other.duration }
    }
}

/// `(d1, d2, d12)` in units of hbar omega_LC for line fluxes `x_C`, `x_T`.
pub fn drive_coefficients(x_c: f64, x_t: f64, d: &DerivedConstants) -> (f64, f64, f64) {
    let k = d.kappa;
    let d1 = (x_c + 0.5 * k * x_t) / d.eta;
    let d2 = (x_t + 0.5 * k * x_c) / d.eta;
    let d12 = (x_c * x_c + x_t * x_t + k * x_c * x_t) / (2.0 * d.eta);
    (d1, d2, d12)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriveOptions {
    /// Keep the scalar `d12` term. It only adds a global phase.
    pub include_identity_term: bool,
}

/// `H^R(tau) = diag(E_n) + d1(tau) D1 + d2(tau) D2 [+ d12(tau) I]` in units
/// of hbar omega_LC.
#[derive(Clone, Debug)]
pub struct ReducedHamiltonian {
    pub energies: DVector<f64>,
    pub d1: DMatrix<f64>,
    pub d2: DMatrix<f64>,
    /// Response to unit flux on the control line, `(D1 + kappa/2 D2) / eta`.
    pub control_operator: DMatrix<f64>,
    /// Response to unit flux on the target line, `(D2 + kappa/2 D1) / eta`.
    pub target_operator: DMatrix<f64>,
    pub schedule: DriveSchedule,
    pub constants: DerivedConstants,
    pub options: DriveOptions,
}

impl ReducedHamiltonian {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn coefficients(&self, tau: f64) -> (f64, f64, f64) {
        let (xc, xt) = self.schedule.line_values(tau);
        let (d1, d2, d12) = drive_coefficients(xc, xt, &self.constants);
        (d1, d2, if self.options.include_identity_term { d12 } else { 0.0 })
    }

    /// Identity-term coefficient at `tau` (zero when disabled).
    pub fn identity_term(&self, tau: f64) -> f64 {
        self.coefficients(tau).2
    }

    /// Drive part `W(tau)` (everything except `diag(E_n)`).
    pub fn drive_matrix(&self, tau: f64) -> DMatrix<f64> {
        let (d1, d2, d12) = self.coefficients(tau);
        let mut w = &self.d1 * d1 + &self.d2 * d2;
        if d12 != 0.0 {
            for i in 0..self.dim() {
                w[(i, i)] += d12;
            }
        }
        w
    }

    /// Full `H^R(tau)`; real symmetric under the real-eigenvector convention.
    pub fn matrix(&self, tau: f64) -> DMatrix<f64> {
        let mut h = self.drive_matrix(tau);
        for i in 0..self.dim() {
            h[(i, i)] += self.energies[i];
        }
        h
    }

    /// Response operator of `line` (per unit line flux).
    pub fn line_operator(&self, line: Line) -> &DMatrix<f64> {
        match line {
            Line::C => &self.control_operator,
            Line::T => &self.target_operator,
        }
    }

    /// Same Hamiltonian with another schedule.
    pub fn with_schedule(&self, schedule: DriveSchedule) -> Self {
        ReducedHamiltonian { schedule, ..self.clone() }
    }
}

pub fn reduced_hamiltonian(
    table: &TransitionTable,
    d: &DerivedConstants,
    schedule: DriveSchedule,
    options: DriveOptions,
) -> Result<ReducedHamiltonian> {
    let n = table.n_states();
    for (name, m) in [("D1", &table.d1), ("D2", &table.d2)] {
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::Configuration(format!(
                "{name} is {}x{}, expected {n}x{n}",
                m.nrows(),
                m.ncols()
            )));
        }
    }
    for line in [Line::C, Line::T] {
        let dip = match line {
            Line::C => &table.d1,
            Line::T => &table.d2,
        };
        if schedule.uses_line(line) && dip.iter().all(|&v| v == 0.0) {
            return Err(Error::Configuration(format!("schedule drives line {line:?} but it has no dipole data")));
        }
    }
    let k = d.kappa;
    Ok(ReducedHamiltonian {
        energies: DVector::from_vec(table.energies.clone()),
        d1: table.d1.clone(),
        d2: table.d2.clone(),
        control_operator: (&table.d1 + &table.d2 * (0.5 * k)) / d.eta,
        target_operator: (&table.d2 + &table.d1 * (0.5 * k)) / d.eta,
        schedule,
        constants: *d,
        options,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::{derive_constants, DeviceParams};
    use crate::spectral::ComputationalBasis;

    fn constants(kappa: f64) -> DerivedConstants {
        derive_constants(&DeviceParams::reference_defaults().with_kappa(kappa)).unwrap()
    }

    fn toy_table() -> TransitionTable {
        let e = vec![0.0, 0.3, 0.7];
        let d1 = DMatrix::from_row_slice(3, 3, &[0.0, 0.01, 0.002, 0.01, 0.0, 0.03, 0.002, 0.03, 0.0]);
        let d2 = DMatrix::from_row_slice(3, 3, &[0.1, 0.0, 0.004, 0.0, -0.1, 0.0, 0.004, 0.0, 0.05]);
        TransitionTable {
            spacing: DMatrix::from_fn(3, 3, |i, j| e[j] - e[i]),
            energies: e,
            d1,
            d2,
            basis: ComputationalBasis { indices: [0, 1, 2, 2], masses: [1.0; 4] },
        }
    }

    #[test]
    fn coefficients_zero_and_uncoupled() {
        let d = constants(5e-4);
        assert_eq!(drive_coefficients(0.0, 0.0, &d), (0.0, 0.0, 0.0));
        let d0 = constants(0.0);
        let (d1, d2, _) = drive_coefficients(3e-5, 0.0, &d0);
        assert!(d1 > 0.0 && d2 == 0.0);
        let (d1, d2, _) = drive_coefficients(0.0, 3e-5, &d0);
        assert!(d1 == 0.0 && d2 > 0.0);
    }

    #[test]
    fn cross_talk_ratio() {
        let d = constants(5e-4);
        let (d1, d2, d12) = drive_coefficients(5e-5, 0.0, &d);
        assert!((d2 / d1 - 2.5e-4).abs() < 1e-15);
        assert!((d12 - 5e-5 * 5e-5 / (2.0 * d.eta)).abs() < 1e-20);
    }

    #[test]
    fn envelope_shapes() {
        let p = PulseSpec::rectangular(Line::C, 1.0, 0.5, 0.0, 10.0, 20.0);
        assert_eq!(p.value(9.99), 0.0);
        assert_eq!(p.value(30.0), 0.0);
        assert!((p.value(10.0) - (5.0f64).cos()).abs() < 1e-15);
        let r = PulseSpec { envelope: Envelope::CosineRamped { ramp_fraction: 0.25 }, ..p };
        assert!((r.envelope_at(10.0)).abs() < 1e-15);
        assert!((r.envelope_at(12.5) - 0.5).abs() < 1e-12);
        assert_eq!(r.envelope_at(20.0), 1.0);
        assert!((r.envelope_at(27.5) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn schedule_validation() {
        let bad = PulseSpec::rectangular(Line::C, -1.0, 0.5, 0.0, 0.0, 1.0);
        assert!(DriveSchedule::new(vec![bad]).is_err());
        let p = PulseSpec::rectangular(Line::T, 1e-5, 0.5, 0.0, 0.0, 10.0);
        assert!(DriveSchedule::with_duration(vec![p], 5.0).is_err());
        let s = DriveSchedule::new(vec![p]).unwrap();
        assert_eq!(s.duration, 10.0);
        let both = s.then(&s);
        assert_eq!(both.duration, 20.0);
        assert_eq!(both.pulses[1].t_start, 10.0);
    }

    #[test]
    fn zero_amplitude_is_diagonal() {
        let d = constants(5e-4);
        let p = PulseSpec::rectangular(Line::C, 0.0, 0.3, 0.0, 0.0, 50.0);
        let h = reduced_hamiltonian(&toy_table(), &d, DriveSchedule::new(vec![p]).unwrap(), DriveOptions::default())
            .unwrap();
        for tau in [0.0, 3.3, 49.0] {
            let m = h.matrix(tau);
            assert_eq!(m, DMatrix::from_diagonal(&h.energies));
        }
    }

    #[test]
    fn hand_assembled_block() {
        let d = constants(5e-4);
        let t = toy_table();
        let amp = 4e-5;
        let p = PulseSpec::rectangular(Line::C, amp, 0.3, 0.0, 0.0, 50.0);
        let h = reduced_hamiltonian(&t, &d, DriveSchedule::new(vec![p]).unwrap(), DriveOptions::default()).unwrap();
        // cos(0.3 * tau) = 1 at tau = 0.
        let m = h.matrix(0.0);
        let expected01 = amp / d.eta * (t.d1[(0, 1)] + 0.5 * d.kappa * t.d2[(0, 1)]);
        assert!((m[(0, 1)] - expected01).abs() < 1e-15);
        let expected11 = t.energies[1] + amp / d.eta * (t.d1[(1, 1)] + 0.5 * d.kappa * t.d2[(1, 1)]);
        assert!((m[(1, 1)] - expected11).abs() < 1e-14);
    }

    #[test]
    fn hermitian_and_linear() {
        let d = constants(5e-4);
        let pulses = vec![
            PulseSpec::rectangular(Line::C, 5e-5, 0.239, 0.3, 0.0, 500.0),
            PulseSpec::rectangular(Line::C, 5.14e-5, 0.259, -0.2, 0.0, 500.0),
            PulseSpec::rectangular(Line::T, 5e-5, 0.0592, 1.0, 100.0, 300.0),
        ];
        let sched = DriveSchedule::new(pulses).unwrap();
        let h = reduced_hamiltonian(&toy_table(), &d, sched.clone(), DriveOptions::default()).unwrap();
        let h2 = h.with_schedule(sched.scaled(2.0));
        for k in 0..100 {
            let tau = 4.97 * k as f64;
            let m = h.matrix(tau);
            assert!((&m - m.transpose()).abs().max() < 1e-13);
            let w = h.drive_matrix(tau);
            let w2 = h2.drive_matrix(tau);
            assert_eq!(w * 2.0, w2);
        }
    }

    #[test]
    fn missing_dipole_data() {
        let d = constants(5e-4);
        let mut t = toy_table();
        t.d2 = DMatrix::zeros(3, 3);
        let p = PulseSpec::rectangular(Line::T, 1e-5, 0.3, 0.0, 0.0, 5.0);
        let r = reduced_hamiltonian(&t, &d, DriveSchedule::new(vec![p]).unwrap(), DriveOptions::default());
        assert!(matches!(r, Err(Error::Configuration(_))));
        t.d1 = DMatrix::zeros(2, 2);
        let r = reduced_hamiltonian(&t, &d, DriveSchedule::empty(1.0), DriveOptions::default());
        assert!(r.is_err());
    }
}
