//! Rabi-frequency calibration: drive one transition resonantly, record the
//! transferred population and fit `A sin^2(Omega tau / 2)`.
//!
//! The contrast `A` absorbs the small detuning the drive itself induces
//! (light shift) at larger amplitudes; real leakage shows up as a contrast
//! below [`MIN_CONTRAST`] or as a poor fit.

use std::f64::consts::PI;

use serde::Serialize;

use crate::drive::{DriveSchedule, Line, PulseSpec, ReducedHamiltonian};
use crate::error::{Error, Result};
use crate::propagator::{propagate, IntegratorConfig, StateVector};

/// Largest RMS deviation from the fitted `A sin^2` accepted.
pub const MAX_FIT_RESIDUAL: f64 = 1e-3;
/// Smallest fitted transfer contrast accepted.
pub const MIN_CONTRAST: f64 = 0.99;
/// Scan length in units of the estimated pi time.
const SCAN_LENGTH: f64 = 1.25;
const SCAN_SAMPLES: usize = 400;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RabiCalibration {
    pub line: Line,
    pub from: usize,
    pub to: usize,
    pub amplitude: f64,
    /// Carrier frequency, equal to the level spacing.
    pub drive_omega: f64,
    /// Fitted Rabi frequency, units of omega_LC.
    pub omega_rabi: f64,
    pub tau_pi: f64,
    /// `amplitude * |<from|line operator|to>|`.
    pub rwa_omega: f64,
    /// Fitted peak transfer.
    pub contrast: f64,
    /// RMS residual of the fit.
    pub residual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RabiFit {
    pub omega: f64,
    pub contrast: f64,
    pub residual: f64,
}

/// Matrix element of the line operator between two eigenstates.
pub fn transition_element(h: &ReducedHamiltonian, line: Line, from: usize, to: usize) -> f64 {
    h.line_operator(line)[(from, to)]
}

/// Rotating-wave Rabi frequency `amplitude * |m|`.
pub fn rwa_rabi_frequency(h: &ReducedHamiltonian, line: Line, from: usize, to: usize, amplitude: f64) -> f64 {
    amplitude.abs() * transition_element(h, line, from, to).abs()
}

/// Best contrast for a given `omega` (closed form, clamped to `(0, 1]`)
/// and the resulting sum of squares.
fn contrast_sse(omega: f64, tau: &[f64], p: &[f64]) -> (f64, f64) {
    let (mut sy, mut ss) = (0.0, 0.0);
    for (&t, &y) in tau.iter().zip(p) {
        let s = (0.5 * omega * t).sin().powi(2);
        sy += s * y;
        ss += s * s;
    }
    let a = if ss > 0.0 { (sy / ss).clamp(f64::MIN_POSITIVE, 1.0) } else { 1.0 };
    let sse = tau.iter().zip(p).map(|(&t, &y)| (y - a * (0.5 * omega * t).sin().powi(2)).powi(2)).sum();
    (a, sse)
}

/// Least-squares fit of `p ~ A sin^2(Omega tau / 2)` with `Omega` near
/// `guess`: coarse scan over +-30 % then golden-section refinement.
pub fn fit_rabi_frequency(tau: &[f64], p: &[f64], guess: f64) -> RabiFit {
    let sse = |om: f64| contrast_sse(om, tau, p).1;
    let (lo, hi) = (0.7 * guess, 1.3 * guess);
    let n = 241;
    let step = (hi - lo) / (n - 1) as f64;
    let best = (0..n)
        .map(|k| lo + k as f64 * step)
        .min_by(|a, b| sse(*a).total_cmp(&sse(*b)))
        .unwrap_or(guess);
    let (mut a, mut b) = (best - step, best + step);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (sse(x1), sse(x2));
    while b - a > 1e-12 * guess {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = sse(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = sse(x2);
        }
    }
    let omega = 0.5 * (a + b);
    let (contrast, total) = contrast_sse(omega, tau, p);
    RabiFit { omega, contrast, residual: (total / tau.len().max(1) as f64).sqrt() }
}

/// Calibrates the resonant pi pulse on `from -> to` driven through `line`.
///
/// A single rectangular pulse is run for about 1.25 estimated pi times;
/// since a rectangular pulse of width `w` leaves the system exactly where
/// the longer pulse has it at `tau = w`, the recorded samples are the
/// width scan.
pub fn calibrate_pi_pulse(
    h: &ReducedHamiltonian,
    line: Line,
    transition: (usize, usize),
    amplitude: f64,
    integrator: &IntegratorConfig,
) -> Result<RabiCalibration> {
    let (from, to) = transition;
    let n = h.dim();
    if from >= n || to >= n || from == to {
        return Err(Error::Calibration(format!("invalid transition {from} -> {to} for {n} states")));
    }
    if !(amplitude > 0.0 && amplitude.is_finite()) {
        return Err(Error::Calibration(format!("amplitude must be positive, got {amplitude}")));
    }
    let rwa = rwa_rabi_frequency(h, line, from, to, amplitude);
    if !(rwa > 0.0) {
        return Err(Error::Calibration(format!("transition {from} -> {to} has no matrix element on line {line:?}")));
    }
    let omega = (h.energies[to] - h.energies[from]).abs();
    let duration = SCAN_LENGTH * PI / rwa;
    let pulse = PulseSpec::rectangular(line, amplitude, omega, 0.0, 0.0, duration);
    let hh = h.with_schedule(DriveSchedule::new(vec![pulse])?);
    let steps = (duration / integrator.dtau).ceil() as usize;
    let cfg = IntegratorConfig { record_stride: (steps / SCAN_SAMPLES).max(1), ..*integrator };
    let rec = propagate(&StateVector::eigenstate(n, from, 0.0), &hh, &cfg, duration)?;
    let p = rec.population_series(to);
    let fit = fit_rabi_frequency(&rec.tau, &p, rwa);
    if fit.residual > MAX_FIT_RESIDUAL || fit.contrast < MIN_CONTRAST {
        return Err(Error::Calibration(format!(
            "transfer {from} -> {to} is not sinusoidal (fit residual {:.2e}, contrast {:.4})",
            fit.residual, fit.contrast
        )));
    }
    let omega_rabi = fit.omega;
    Ok(RabiCalibration {
        line,
        from,
        to,
        amplitude,
        drive_omega: omega,
        omega_rabi,
        tau_pi: PI / omega_rabi,
        rwa_omega: rwa,
        contrast: fit.contrast,
        residual: fit.residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_frequency() {
        let tau: Vec<f64> = (0..300).map(|k| k as f64 * 0.1).collect();
        let p: Vec<f64> = tau.iter().map(|t| (0.5 * 0.37 * t).sin().powi(2)).collect();
        let fit = fit_rabi_frequency(&tau, &p, 0.33);
        assert!((fit.omega - 0.37).abs() < 1e-9, "{fit:?}");
        assert!(fit.residual < 1e-9 && (fit.contrast - 1.0).abs() < 1e-9);
    }

    #[test]
    fn fit_reports_bad_shape() {
        let tau: Vec<f64> = (0..300).map(|k| k as f64 * 0.1).collect();
        // Half the population lost: good shape, poor contrast.
        let p: Vec<f64> = tau.iter().map(|t| 0.5 * (0.5 * 0.37 * t).sin().powi(2)).collect();
        let fit = fit_rabi_frequency(&tau, &p, 0.37);
        assert!((fit.contrast - 0.5).abs() < 1e-9 && fit.contrast < MIN_CONTRAST);
        // Damped oscillation: no single sin^2 fits.
        let p: Vec<f64> = tau.iter().map(|t| (-0.05 * t).exp() * (0.5 * 0.37 * t).sin().powi(2)).collect();
        assert!(fit_rabi_frequency(&tau, &p, 0.37).residual > MAX_FIT_RESIDUAL);
    }
}
