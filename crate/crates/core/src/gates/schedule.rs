//! Pulse programs for rotations, NOT, CNOT and Bell-state preparation.
//!
//! Every tone drives one computational transition resonantly. Its phase is
//! chosen so that, in the rotating frame, the two-level action is a
//! rotation about y: with `m` the line-operator element between the lower
//! and upper state, `phase = -sign(m) pi/2` gives `exp(-i theta sigma_y/2)`.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::sync::Mutex;

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::calibration::{calibrate_pi_pulse, rwa_rabi_frequency, transition_element, RabiCalibration};
use super::decomposition::{on_control, SingleQubitGate};
use crate::device::DerivedConstants;
use crate::drive::{reduced_hamiltonian, DriveOptions, DriveSchedule, Envelope, Line, PulseSpec, ReducedHamiltonian};
use crate::error::{Error, Result};
use crate::label::StateLabel;
use crate::propagator::IntegratorConfig;
use crate::spectral::{ComputationalBasis, TransitionTable};

/// Raised-cosine edge length per side, as a fraction of the pulse width.
/// Switching a tone on or off abruptly leaves behind the phase modulation
/// from the diagonal dipole elements (tenths of a radian between the
/// computational states for the target tone); smooth edges remove it.
pub const DEFAULT_RAMP_FRACTION: f64 = 0.1;

/// Relative tolerance between a tone and its level spacing.
pub const RESONANCE_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RotationMode {
    /// Both conditional tones at once.
    #[default]
    Simultaneous,
    /// Tone for target `|0>` first, then the one for `|1>`.
    Sequential,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RabiSource {
    /// Fit a resonant scan for each tone.
    Calibrated,
    /// `amplitude * |m|`, no propagation.
    Rwa,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GateSettings {
    /// Tone on `|00> <-> |10>`.
    pub amplitude_c1: f64,
    /// Tone on `|01> <-> |11>`; balanced to equal Rabi frequency when absent.
    pub amplitude_c2: Option<f64>,
    /// CNOT tone on `|10> <-> |11>`.
    pub amplitude_t: f64,
    pub mode: RotationMode,
    pub envelope: Envelope,
    pub rabi: RabiSource,
}

impl Default for GateSettings {
    fn default() -> Self {
        GateSettings {
            amplitude_c1: 5e-5,
            amplitude_c2: None,
            amplitude_t: 5e-5,
            mode: RotationMode::Simultaneous,
            envelope: Envelope::CosineRamped { ramp_fraction: DEFAULT_RAMP_FRACTION },
            rabi: RabiSource::Calibrated,
        }
    }
}

/// Transition a pulse is tuned to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Tone {
    pub lower: StateLabel,
    pub upper: StateLabel,
}

/// Intended action at the end of a stage, on rotating-frame amplitudes
/// of `|00>, |01>, |10>, |11>` (columns are inputs).
#[derive(Clone, Debug, PartialEq)]
pub struct Stage {
    pub name: String,
    pub end: f64,
    pub expected: Matrix4<C64>,
}

#[derive(Clone, Debug)]
pub struct GateSchedule {
    pub name: String,
    pub schedule: DriveSchedule,
    /// One per pulse.
    pub tones: Vec<Tone>,
    /// Cumulative targets; the last one is the gate.
    pub stages: Vec<Stage>,
    pub theta: Option<f64>,
    /// Rabi frequency of the (first) tone.
    pub omega_rabi: f64,
}

impl GateSchedule {
    pub fn expected(&self) -> &Matrix4<C64> {
        &self.stages.last().expect("schedule has a stage").expected
    }

    pub fn duration(&self) -> f64 {
        self.schedule.duration
    }

    /// Expected rotating-frame output for a computational input.
    pub fn expected_output(&self, init: StateLabel) -> [C64; 4] {
        let m = self.expected();
        std::array::from_fn(|i| m[(i, init.index())])
    }

    /// Every tone sits on its level spacing to `RESONANCE_TOLERANCE`.
    pub fn check_resonances(&self, table: &TransitionTable) -> Result<()> {
        if self.tones.len() != self.schedule.pulses.len() {
            return Err(Error::Validation(format!("{}: {} tones for {} pulses", self.name, self.tones.len(), self.schedule.pulses.len())));
        }
        for (p, t) in self.schedule.pulses.iter().zip(&self.tones) {
            let de = table.delta(t.lower, t.upper).abs();
            if (p.omega - de).abs() > RESONANCE_TOLERANCE * de {
                return Err(Error::Validation(format!(
                    "{}: tone {} -> {} at {} is off its spacing {de}",
                    self.name, t.lower, t.upper, p.omega
                )));
            }
        }
        Ok(())
    }
}

/// Ideal controlled rotation: `Ry(theta)` on the target when the control is
/// `|1>`.
pub fn controlled_ry(theta: f64) -> Matrix4<C64> {
    let r = SingleQubitGate::ry(theta).u;
    let mut m = Matrix4::identity();
    m.fixed_view_mut::<2, 2>(2, 2).copy_from(&r);
    m
}

/// Builds gate schedules for one device; caches pi-pulse calibrations.
pub struct GateDesigner {
    pub hamiltonian: ReducedHamiltonian,
    pub basis: ComputationalBasis,
    pub table: TransitionTable,
    pub settings: GateSettings,
    pub integrator: IntegratorConfig,
    cache: Mutex<HashMap<(Line, usize, usize, u64), RabiCalibration>>,
}

impl GateDesigner {
    pub fn new(
        table: &TransitionTable,
        constants: &DerivedConstants,
        settings: GateSettings,
        integrator: IntegratorConfig,
        options: DriveOptions,
    ) -> Result<Self> {
        for (name, a) in [("amplitude_c1", settings.amplitude_c1), ("amplitude_t", settings.amplitude_t)]
            .into_iter()
            .chain(settings.amplitude_c2.map(|a| ("amplitude_c2", a)))
        {
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::Parameter(format!("{name} must be positive, got {a}")));
            }
        }
        if let Envelope::CosineRamped { ramp_fraction } = settings.envelope {
            if !(ramp_fraction > 0.0 && ramp_fraction <= 0.5) {
                return Err(Error::Parameter(format!("ramp_fraction must be in (0, 0.5], got {ramp_fraction}")));
            }
        }
        let hamiltonian = reduced_hamiltonian(table, constants, DriveSchedule::empty(0.0), options)?;
        Ok(GateDesigner {
            hamiltonian,
            basis: table.basis,
            table: table.clone(),
            settings,
            integrator,
            cache: Mutex::new(HashMap::new()),
        })
    }

    /// Same device with other settings; calibrations are carried over.
    pub fn with_settings(&self, settings: GateSettings) -> Self {
        let cache = self.cache.lock().expect("calibration cache").clone();
        GateDesigner {
            hamiltonian: self.hamiltonian.clone(),
            basis: self.basis,
            table: self.table.clone(),
            settings,
            integrator: self.integrator,
            cache: Mutex::new(cache),
        }
    }

    fn index(&self, l: StateLabel) -> usize {
        self.basis.index(l)
    }

    pub fn element(&self, line: Line, tone: Tone) -> f64 {
        transition_element(&self.hamiltonian, line, self.index(tone.lower), self.index(tone.upper))
    }

    /// Calibration of `tone` on `line` (cached).
    pub fn calibration(&self, line: Line, tone: Tone, amplitude: f64) -> Result<RabiCalibration> {
        let key = (line, self.index(tone.lower), self.index(tone.upper), amplitude.to_bits());
        if let Some(c) = self.cache.lock().expect("calibration cache").get(&key) {
            return Ok(*c);
        }
        let c = calibrate_pi_pulse(&self.hamiltonian, line, (key.1, key.2), amplitude, &self.integrator)?;
        self.cache.lock().expect("calibration cache").insert(key, c);
        Ok(c)
    }

    /// Rabi frequency of `tone` per the configured source.
    pub fn rabi_frequency(&self, line: Line, tone: Tone, amplitude: f64) -> Result<f64> {
        match self.settings.rabi {
            RabiSource::Calibrated => Ok(self.calibration(line, tone, amplitude)?.omega_rabi),
            RabiSource::Rwa => {
                let om = rwa_rabi_frequency(&self.hamiltonian, line, self.index(tone.lower), self.index(tone.upper), amplitude);
                if om > 0.0 {
                    Ok(om)
                } else {
                    Err(Error::Calibration(format!("tone {} -> {} has no matrix element", tone.lower, tone.upper)))
                }
            }
        }
    }

    /// Pulse area per unit width and peak amplitude.
    fn area_factor(&self) -> f64 {
        match self.settings.envelope {
            Envelope::Rectangular => 1.0,
            Envelope::CosineRamped { ramp_fraction } => 1.0 - ramp_fraction,
        }
    }

    fn pulse(&self, line: Line, tone: Tone, amplitude: f64, t_start: f64, width: f64) -> PulseSpec {
        let m = self.element(line, tone);
        PulseSpec {
            line,
            amplitude,
            omega: self.table.delta(tone.lower, tone.upper).abs(),
            phase: -m.signum() * FRAC_PI_2,
            t_start,
            width,
            envelope: self.settings.envelope,
        }
    }

    /// Control-tone amplitude for the `|01> <-> |11>` transition: configured,
    /// or `amplitude_c1 |m_13| / |m_24|` so both conditional rotations run at
    /// the same Rabi frequency.
    pub fn amplitude_c2(&self) -> Result<f64> {
        if let Some(a) = self.settings.amplitude_c2 {
            return Ok(a);
        }
        let m13 = self.element(Line::C, TONE_C1).abs();
        let m24 = self.element(Line::C, TONE_C2).abs();
        if !(m24 > 0.0) {
            return Err(Error::Calibration("|01> <-> |11> has no control-line matrix element".into()));
        }
        Ok(self.settings.amplitude_c1 * m13 / m24)
    }

    /// `Ry(theta)` on the control qubit, whatever the target state: two
    /// conditional rotations at `Delta E_13` and `Delta E_24`.
    pub fn rotation(&self, theta: f64) -> Result<GateSchedule> {
        if !theta.is_finite() {
            return Err(Error::Parameter(format!("rotation angle must be finite, got {theta}")));
        }
        let theta = theta.rem_euclid(TAU);
        let a1 = self.settings.amplitude_c1;
        let a2 = self.amplitude_c2()?;
        let omega = self.rabi_frequency(Line::C, TONE_C1, a1)?;
        let width = theta / (omega * self.area_factor());
        let (pulses, tones, duration) = if width == 0.0 {
            (Vec::new(), Vec::new(), 0.0)
        } else {
            let start2 = match self.settings.mode {
                RotationMode::Simultaneous => 0.0,
                RotationMode::Sequential => width,
            };
            (
                vec![self.pulse(Line::C, TONE_C1, a1, 0.0, width), self.pulse(Line::C, TONE_C2, a2, start2, width)],
                vec![TONE_C1, TONE_C2],
                start2 + width,
            )
        };
        let gate = GateSchedule {
            name: format!("rotation({theta:.6})"),
            schedule: DriveSchedule::with_duration(pulses, duration)?,
            tones,
            stages: vec![Stage { name: "rotation".into(), end: duration, expected: on_control(&SingleQubitGate::ry(theta).u) }],
            theta: Some(theta),
            omega_rabi: omega,
        };
        gate.check_resonances(&self.table)?;
        Ok(gate)
    }

    /// NOT on the control qubit (a pi rotation; equal to NOT up to signs).
    pub fn not(&self) -> Result<GateSchedule> {
        let mut g = self.rotation(PI)?;
        g.name = "not".into();
        Ok(g)
    }

    /// Pi pulse at `Delta E_34` on the target line: the target flips only
    /// when the control is `|1>`.
    pub fn cnot(&self) -> Result<GateSchedule> {
        let a = self.settings.amplitude_t;
        let omega = self.rabi_frequency(Line::T, TONE_T, a)?;
        let width = PI / (omega * self.area_factor());
        let gate = GateSchedule {
            name: "cnot".into(),
            schedule: DriveSchedule::new(vec![self.pulse(Line::T, TONE_T, a, 0.0, width)])?,
            tones: vec![TONE_T],
            stages: vec![Stage { name: "cnot".into(), end: width, expected: controlled_ry(PI) }],
            theta: Some(PI),
            omega_rabi: omega,
        };
        gate.check_resonances(&self.table)?;
        Ok(gate)
    }

    /// Two-tone pi/2 rotation on the control followed by the CNOT pulse.
    pub fn bell(&self) -> Result<GateSchedule> {
        let r = self.rotation(FRAC_PI_2)?;
        let c = self.cnot()?;
        let mid = r.duration();
        let mut tones = r.tones.clone();
        tones.extend(&c.tones);
        let rot = r.expected().clone_owned();
        let gate = GateSchedule {
            name: "bell".into(),
            schedule: r.schedule.then(&c.schedule),
            tones,
            stages: vec![
                Stage { name: "rotation".into(), end: mid, expected: rot },
                Stage { name: "cnot".into(), end: mid + c.duration(), expected: c.expected() * rot },
            ],
            theta: Some(FRAC_PI_2),
            omega_rabi: r.omega_rabi,
        };
        gate.check_resonances(&self.table)?;
        Ok(gate)
    }
}

pub const TONE_C1: Tone = Tone { lower: StateLabel::L00, upper: StateLabel::L10 };
pub const TONE_C2: Tone = Tone { lower: StateLabel::L01, upper: StateLabel::L11 };
pub const TONE_T: Tone = Tone { lower: StateLabel::L10, upper: StateLabel::L11 };

/// The four Bell states `(|00> +- |11>)/sqrt2`, `(|01> +- |10>)/sqrt2`.
pub fn bell_states() -> [(&'static str, [C64; 4]); 4] {
    let r = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let z = C64::new(0.0, 0.0);
    [
        ("phi+", [r, z, z, r]),
        ("phi-", [r, z, z, -r]),
        ("psi+", [z, r, r, z]),
        ("psi-", [z, r, -r, z]),
    ]
}

/// `u` as a 2x2 block helper for tests and reports.
pub fn block(m: &Matrix4<C64>, rows: [usize; 2]) -> Matrix2<C64> {
    Matrix2::from_fn(|i, j| m[(rows[i], rows[j])])
}
